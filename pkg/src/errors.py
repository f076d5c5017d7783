"""
Error Types

Every failure the solver library can raise derives from MinSMCError. Each
class carries the process exit code the CLI reports for it, so the command
line layer never has to guess.
"""

from typing import Optional


class MinSMCError(Exception):
    """Base class for all solver errors."""

    exit_code: int = 1


class ContractError(MinSMCError, ValueError):
    """A caller violated an operation's precondition."""


class LedgerMisuseError(ContractError):
    """An oracle query was issued while no adaptive round was open."""


class InputError(MinSMCError, ValueError):
    """Bad element ids or malformed input data."""


class InstanceFormatError(InputError):
    """
    An instance document does not follow the instance file schema.

    The `code` attribute separates the diagnostics: "schema" for structural
    problems and "cost" for nonpositive element costs.
    """

    exit_code = 4

    def __init__(self, message: str, code: str = "schema"):
        super().__init__(message)
        self.code = code


class InfeasibleDemandError(MinSMCError):
    """The demand k exceeds f(V), so no subset can cover it."""

    exit_code = 2

    def __init__(self, k: int, available: Optional[int] = None):
        if available is None:
            message = f"infeasible demand: k={k} cannot be reached"
        else:
            message = f"infeasible demand: k={k} exceeds f(V)={available}"
        super().__init__(message)
        self.k = k
        self.available = available


class ConfigError(MinSMCError, ValueError):
    """A solver, generator or bench setting is missing or out of range."""

    exit_code = 3


class RefusalError(MinSMCError):
    """An exhaustive computation would exceed its enumeration budget."""
