from pathlib import Path

from sqlalchemy import create_engine
from sqlalchemy.orm import DeclarativeBase, sessionmaker


class Base(DeclarativeBase):
    pass


Session = sessionmaker(expire_on_commit=False)


def init_registry(db_file):
    """Bind the session factory to <db_file> and create missing tables."""
    db_file = Path(db_file)
    db_file.parent.mkdir(parents=True, exist_ok=True)
    engine = create_engine(f"sqlite:///{db_file}", future=True)
    import models.run_models  # noqa: F401  registers the tables
    Base.metadata.create_all(engine)
    Session.configure(bind=engine)
    return engine
