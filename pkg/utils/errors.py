# utils/errors.py
"""Exception types shared by the solver modules and the CLI."""
from __future__ import annotations

from typing import Any, Optional


class SingularSystemError(RuntimeError):
    """A linear solve hit a singular (or numerically singular) matrix."""

    def __init__(self, message: str, mu: Any = None, condition: Optional[float] = None):
        self.mu = mu
        self.condition = condition
        details = []
        if mu is not None:
            details.append(f"mu={mu}")
        if condition is not None:
            details.append(f"condition~{condition:.3e}")
        super().__init__(f"{message} ({', '.join(details)})" if details else message)


class QuadratureError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


class ArtifactMismatchError(ValueError):
    pass


class StageError(RuntimeError):
    """Raised by the pipeline when one stage fails; `stage` names it."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
