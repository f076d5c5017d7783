"""Harness: run reports, solution verification and the bench runner."""

from .report import RunReport, load_solution, save_solution
from .verify import VerificationReport, verify_rows, verify_solution

__all__ = [
    "RunReport",
    "VerificationReport",
    "load_solution",
    "save_solution",
    "verify_rows",
    "verify_solution",
]
