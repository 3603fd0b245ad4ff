"""Reproducible i.i.d. random matrices for the Wishart construction.

Every draw comes from a Philox counter-based generator whose 128-bit key is
derived from ``(master_seed, trial_index)``.  Each matrix entry consumes
exactly one 64-bit word of the stream in row-major order, and every law is
sampled by inverse CDF, so entry ``(i, j)`` is a pure function of the seed and
its position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, RangeError

__all__ = [
    "EntryLaw",
    "SeedSpec",
    "derive_stream",
    "rows_for",
    "sample_matrix",
    "splitmix64",
]

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53

GAUSSIAN = "gaussian"
UNIFORM01 = "uniform01"
EXP1 = "exp1"
CAUCHY = "cauchy"
PARETO = "pareto"
_VARIANTS = (GAUSSIAN, UNIFORM01, EXP1, CAUCHY, PARETO)


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit avalanche mix."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class EntryLaw:
    """Law of the i.i.d. entries of ``X``.

    ``variant`` is one of ``gaussian``, ``uniform01``, ``exp1``, ``cauchy``,
    ``pareto``; ``b`` is the Pareto shape (density ``b x^(-1-b)`` on
    ``x >= 1``).  With ``standardize`` the draws are shifted and scaled to
    mean 0 and variance 1 using the exact analytic constants.
    """

    variant: str = GAUSSIAN
    b: float | None = None
    standardize: bool = False

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ConfigError(f"unknown entry law {self.variant!r}")
        if self.variant == PARETO:
            if self.b is None or not math.isfinite(self.b) or self.b <= 0:
                raise ConfigError("pareto law requires a finite shape b > 0")
        elif self.b is not None:
            raise ConfigError(f"shape parameter only applies to pareto, not {self.variant}")
        if self.standardize:
            if self.variant == CAUCHY:
                raise ConfigError("cauchy law has no mean or variance; cannot standardize")
            if self.variant == PARETO and self.b <= 2:
                raise ConfigError(f"pareto:{self.b:g} has infinite variance; cannot standardize")

    @classmethod
    def parse(cls, text: str) -> EntryLaw:
        """Parse ``gaussian``, ``uniform01``, ``exp1``, ``cauchy``, ``pareto:<b>``,
        each optionally followed by ``:std``."""
        parts = text.strip().lower().split(":")
        standardize = False
        if len(parts) > 1 and parts[-1] == "std":
            standardize = True
            parts = parts[:-1]
        name, args = parts[0], parts[1:]
        if name == PARETO:
            if len(args) != 1:
                raise ConfigError(f"expected pareto:<b>, got {text!r}")
            try:
                b = float(args[0])
            except ValueError:
                raise ConfigError(f"bad pareto shape in {text!r}") from None
            return cls(PARETO, b, standardize)
        if args:
            raise ConfigError(f"unexpected arguments in law {text!r}")
        return cls(name, None, standardize)

    def __str__(self) -> str:
        base = f"pareto:{self.b!r}" if self.variant == PARETO else self.variant
        return base + (":std" if self.standardize else "")

    @property
    def heavy_tailed(self) -> bool:
        return self.variant in (CAUCHY, PARETO)

    @property
    def is_standardized(self) -> bool:
        """True when draws have mean 0 and unit variance."""
        return self.variant == GAUSSIAN or self.standardize

    def mean_var(self) -> tuple[float, float]:
        """Exact mean and variance of the raw (unstandardized) law."""
        if self.variant == GAUSSIAN:
            return 0.0, 1.0
        if self.variant == UNIFORM01:
            return 0.5, 1.0 / 12.0
        if self.variant == EXP1:
            return 1.0, 1.0
        if self.variant == PARETO and self.b > 2:
            b = self.b
            return b / (b - 1.0), b / ((b - 1.0) ** 2 * (b - 2.0))
        raise ConfigError(f"{self} has no finite variance")

    def transform(self, words: np.ndarray) -> np.ndarray:
        """Map raw 64-bit words to draws from this law (one word per draw)."""
        k = (words >> np.uint64(11)).astype(np.float64)
        if self.variant == UNIFORM01:
            x = k * _TWO_M53
        else:
            u = (k + 0.5) * _TWO_M53  # open interval (0, 1)
            if self.variant == GAUSSIAN:
                x = ndtri(u)
            elif self.variant == EXP1:
                x = -np.log(u)
            elif self.variant == CAUCHY:
                x = np.tan(np.pi * (u - 0.5))
            else:
                x = u ** (-1.0 / self.b)
        if self.standardize and self.variant != GAUSSIAN:
            mu, var = self.mean_var()
            x = (x - mu) / math.sqrt(var)
        return x


@dataclass(frozen=True)
class SeedSpec:
    """Identifies one reproducible random stream."""

    master_seed: int
    trial_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed <= _MASK64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if self.trial_index < 0:
            raise ConfigError("trial_index must be non-negative")


def derive_stream(seed: SeedSpec) -> np.random.Philox:
    """Philox generator keyed by ``(splitmix64(master_seed), splitmix64(trial_index))``.

    SplitMix64 is a bijection, so distinct seed pairs give distinct keys, and
    Philox streams with distinct keys are independent.
    """
    key = np.array(
        [splitmix64(seed.master_seed), splitmix64(seed.trial_index ^ 0xD1B54A32D192ED03)],
        dtype=np.uint64,
    )
    return np.random.Philox(key=key)


def rows_for(n: int, s: float) -> int:
    """Row count ``floor(n**s)``, exact even when ``n**s`` is an integer."""
    if int(n) != n or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n}")
    if not 0 < s <= 1:
        raise ConfigError(f"s must lie in (0, 1], got {s}")
    n = int(n)
    with mpmath.workdps(60):
        target = mpmath.power(n, mpmath.mpf(s))
        m = int(mpmath.floor(target))
        # guard against rounding in either direction
        while m + 1 <= target:
            m += 1
        while m > target:
            m -= 1
    if m < 1:
        raise ConfigError(f"floor({n}**{s}) = 0: invalid size")
    return m


def sample_matrix(m: int, n: int, law: EntryLaw, seed: SeedSpec) -> np.ndarray:
    """Draw an ``m x n`` matrix with i.i.d. entries from ``law``.

    The result is read-only.  Raises :class:`RangeError` if any draw is not
    finite.
    """
    if m < 1 or n < 1:
        raise ConfigError(f"matrix dimensions must be positive, got {m}x{n}")
    words = derive_stream(seed).random_raw(m * n)
    x = law.transform(words).reshape(m, n)
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(x))[0]
        raise RangeError(f"non-finite {law} draw at entry ({bad[0]}, {bad[1]})")
    x.setflags(write=False)
    return x
