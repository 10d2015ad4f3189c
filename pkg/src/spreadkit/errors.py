"""Exception types shared by the samplers.

The CLI maps every subclass of :class:`ExhaustedError` to exit code 3.
"""
from __future__ import annotations

from .exact import BudgetExhausted


class ExhaustedError(RuntimeError):
    """A retry cap or search budget ran out."""


class RetriesExhausted(ExhaustedError):
    def __init__(self, what: str, attempts: int, failures: int | None = None, detail: str = ""):
        failures = attempts if failures is None else failures
        msg = f"{what}: {failures}/{attempts} attempts failed"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.what = what
        self.attempts = attempts
        self.failures = failures

    @property
    def failure_rate(self) -> float:
        return self.failures / self.attempts if self.attempts else 0.0


class StageFailure(ExhaustedError):
    """A pipeline stage failed; ``stage`` names it and ``state`` has context."""

    def __init__(self, stage: str, message: str, state: dict | None = None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.state = state or {}


__all__ = ["BudgetExhausted", "ExhaustedError", "RetriesExhausted", "StageFailure"]
