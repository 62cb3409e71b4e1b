"""Exceptions and the +inf sentinel shared by every module."""

from __future__ import annotations

import math


class ErrboundError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ErrboundError, ValueError):
    pass


class NumericFailure(ErrboundError, RuntimeError):
    """An iterative kernel did not reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NotApplicableError(ErrboundError):
    """The hypothesis of the requested test does not hold."""


class InconclusiveError(ErrboundError):
    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate


class Unbounded:
    """The +inf value of a modulus (no infeasible point to take an infimum over).

    Distinct from ``math.inf`` on purpose: a float infinity can come out of
    arithmetic by accident, this value can only be produced deliberately.
    Orders above every real number and serializes as ``"inf"``.
    """

    _instance: Unbounded | None = None

    def __new__(cls) -> Unbounded:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __float__(self) -> float:
        return math.inf

    def __str__(self) -> str:
        return "inf"

    def __repr__(self) -> str:
        return "UNBOUNDED"

    def __eq__(self, other: object) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("errbound.UNBOUNDED")

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return other is self

    def __gt__(self, other: object) -> bool:
        return other is not self

    def __ge__(self, other: object) -> bool:
        return True

    def __reduce__(self):
        return (Unbounded, ())


UNBOUNDED = Unbounded()


def is_unbounded(value: object) -> bool:
    return value is UNBOUNDED


def fmt_real(value: float | Unbounded) -> str:
    """17 significant digits; the sentinel and float infinities print as ``inf``."""
    if value is UNBOUNDED:
        return "inf"
    v = float(value)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0.0:
        v = 0.0  # drop negative zero
    return f"{v:.17g}"
