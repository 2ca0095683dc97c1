"""Exception types shared across the simulator."""

from __future__ import annotations


class InvalidInputError(ValueError):
    """An argument violates an operation's precondition."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, message: str, diagnostics: list | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class SimulationTimeout(RuntimeError):
    """The simulation horizon was exhausted before the task completed."""

    def __init__(self, message: str, remaining_bytes: float | None = None):
        super().__init__(message)
        self.remaining_bytes = remaining_bytes
