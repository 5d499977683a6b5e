# models/run_models.py
from datetime import datetime
from typing import List, Optional

from sqlalchemy import DateTime, Float, Integer, String, Text, select
from sqlalchemy.orm import Mapped, mapped_column

from extensions import Base, Session


class RunLog(Base):
    """One row per CLI run (offline / online / reference / sweep)."""
    __tablename__ = "run_log"
    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    created_at: Mapped[datetime] = mapped_column(DateTime, default=datetime.now, index=True)
    command: Mapped[str] = mapped_column(String(32))
    problem: Mapped[str] = mapped_column(String(32))
    config_hash: Mapped[str] = mapped_column(String(16), index=True)
    path: Mapped[Optional[str]] = mapped_column(String(512), nullable=True)
    epsilon_u: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    online_seconds: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    reference_seconds: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    note: Mapped[Optional[str]] = mapped_column(Text, nullable=True)

    @staticmethod
    def record(command, problem, config_hash, path=None, epsilon_u=None,
               online_seconds=None, reference_seconds=None, note=None) -> "RunLog":
        with Session() as s:
            row = RunLog(command=command, problem=problem, config_hash=config_hash, path=path,
                         epsilon_u=epsilon_u, online_seconds=online_seconds,
                         reference_seconds=reference_seconds, note=note)
            s.add(row)
            s.commit()
            return row

    @staticmethod
    def latest(command: str = "online", limit: int = 1) -> List["RunLog"]:
        with Session() as s:
            stmt = (select(RunLog).where(RunLog.command == command)
                    .order_by(RunLog.created_at.desc(), RunLog.id.desc()).limit(limit))
            return list(s.scalars(stmt))
