"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class HadamardWishartError(Exception):
    """Base class for all package errors."""


class ConfigError(HadamardWishartError, ValueError):
    """Invalid sizes, laws, exponents or other caller-supplied parameters."""


class DimensionError(ConfigError):
    """Operand shapes do not agree."""


class RangeError(HadamardWishartError, ArithmeticError):
    """A computed quantity is not finite (overflow or a non-finite draw)."""


class SolverError(HadamardWishartError, RuntimeError):
    """The eigenvalue solver failed to converge.

    ``fingerprint`` identifies the offending matrix (truncated SHA-256 of its
    bytes) so the failure can be reproduced.
    """

    def __init__(self, message: str, fingerprint: str) -> None:
        super().__init__(f"{message} [matrix {fingerprint}]")
        self.fingerprint = fingerprint


class InvariantViolation(HadamardWishartError, AssertionError):
    """A deterministic mathematical invariant failed to hold."""


class BracketError(HadamardWishartError, RuntimeError):
    """Boundary search could not bracket a sign change in the allowed range."""
