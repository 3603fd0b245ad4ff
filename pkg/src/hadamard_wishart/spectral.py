"""Gaussian functionals and spectral statistics used by the experiments.

The absolute moment ``ell_alpha = E|Z|^alpha`` and the correlation functional

    I(rho) = E[(|X|^alpha - ell_alpha)(|Y|^alpha - ell_alpha)],
    (X, Y) standard bivariate normal with correlation rho,

are evaluated in closed form / by fixed-order quadrature.  For ``I`` the pair
is written in polar form ``X = R cos(t)``, ``Y = R cos(t - psi)`` with
``cos(psi) = rho``, ``R^2 ~ chi^2_2`` independent of ``t ~ U(0, 2pi)``.  Then

    E|XY|^alpha = 2^alpha Gamma(1 + alpha) / (2 pi) * int |cos t cos(t - psi)|^alpha dt,

and the angular integrand is smooth between its four zeros, where it behaves
like ``|t - t0|^alpha``.  Gauss-Jacobi rules with weight
``(1 - x)^alpha (1 + x)^alpha`` on each arc absorb both endpoint singularities.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import ConfigError, RangeError

__all__ = [
    "EsdSample",
    "MomentReport",
    "RowPair",
    "bivariate_I",
    "conditional_Y",
    "ell_alpha",
    "esd",
    "esd_moment",
    "ks_distance",
    "moment_targets",
    "pool",
    "trace_moment",
    "walk_trace_oracle",
]

JACOBI_NODES = 64
WALK_MAX_DIM = 8
WALK_MAX_K = 3


def ell_alpha(alpha: float) -> float:
    """``E|Z|^alpha = 2^(alpha/2) Gamma((alpha+1)/2) / sqrt(pi)`` for standard normal Z."""
    if alpha < 0:
        raise ConfigError(f"alpha must be non-negative, got {alpha}")
    if alpha < 300:
        return 2.0 ** (0.5 * alpha) * math.gamma(0.5 * (alpha + 1.0)) / math.sqrt(math.pi)
    return math.exp(0.5 * alpha * math.log(2.0) + math.lgamma(0.5 * (alpha + 1.0))) / math.sqrt(math.pi)


@lru_cache(maxsize=64)
def _jacobi_rule(alpha: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = roots_jacobi(nodes, alpha, alpha)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def _abs_product_moment(rho: float, alpha: float, nodes: int) -> float:
    """``E|XY|^alpha`` for standard bivariate normal (X, Y) with correlation rho."""
    psi = math.acos(rho)
    zeros = sorted({math.pi / 2, 3 * math.pi / 2, (psi + math.pi / 2) % (2 * math.pi),
                    (psi + 3 * math.pi / 2) % (2 * math.pi)})
    edges = zeros + [zeros[0] + 2 * math.pi]
    t, w = _jacobi_rule(float(alpha), nodes)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        th = lo + h * (t + 1.0)
        smooth = np.abs(np.cos(th) * np.cos(th - psi)) ** alpha / ((th - lo) * (hi - th)) ** alpha
        total += h ** (2 * alpha + 1) * float(np.dot(w, smooth))
    log_radial = alpha * math.log(2.0) + math.lgamma(1.0 + alpha)
    return math.exp(log_radial) * total / (2 * math.pi)


def bivariate_I(rho: float, alpha: float, nodes: int = JACOBI_NODES) -> float:
    """Covariance ``E[(|X|^a - l_a)(|Y|^a - l_a)]`` at correlation ``rho``."""
    if not abs(rho) < 1:
        raise ConfigError(f"|rho| must be < 1, got {rho}")
    if not alpha > 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    if rho == 0.0:
        return 0.0
    # evenness in rho is exact; evaluate on rho > 0 only
    return _abs_product_moment(abs(rho), alpha, nodes) - ell_alpha(alpha) ** 2


@dataclass(frozen=True)
class RowPair:
    """Two rows of ``X`` with their scale ``sigma = ||R|| / sqrt(n)`` and correlation."""

    r_i: np.ndarray
    r_j: np.ndarray
    sigma_i: float
    sigma_j: float
    rho: float

    @classmethod
    def from_rows(cls, r_i, r_j) -> RowPair:
        r_i = np.asarray(r_i, dtype=np.float64)
        r_j = np.asarray(r_j, dtype=np.float64)
        if r_i.shape != r_j.shape or r_i.ndim != 1:
            raise ConfigError("rows must be 1-D vectors of equal length")
        n = len(r_i)
        ni, nj = np.linalg.norm(r_i), np.linalg.norm(r_j)
        if ni == 0 or nj == 0:
            raise ConfigError("rows must be non-zero")
        rho = float(r_i @ r_j / (ni * nj))
        return cls(r_i, r_j, float(ni / math.sqrt(n)), float(nj / math.sqrt(n)), rho)


def conditional_Y(pair: RowPair, alpha: float) -> float:
    """Conditional covariance of two centered entries sharing a fresh middle row.

    ``sigma_i^a sigma_j^a I(rho) + l_a^2 (sigma_i^a - 1)(sigma_j^a - 1)``.
    """
    si = pair.sigma_i**alpha
    sj = pair.sigma_j**alpha
    ell = ell_alpha(alpha)
    return si * sj * bivariate_I(pair.rho, alpha) + ell * ell * (si - 1.0) * (sj - 1.0)


@dataclass(frozen=True)
class EsdSample:
    """Sorted eigenvalues of one matrix, or pooled over several trials."""

    eigenvalues: np.ndarray
    m: int
    trials: int = 1

    @property
    def total(self) -> int:
        return len(self.eigenvalues)

    def cdf(self, x) -> np.ndarray | float:
        """Right-continuous empirical CDF ``#{lambda <= x} / total``."""
        counts = np.searchsorted(self.eigenvalues, x, side="right")
        return counts / self.total

    def to_csv(self) -> str:
        return "eigenvalue\n" + "".join(f"{float(v):.17g}\n" for v in self.eigenvalues)


def esd(spectrum) -> EsdSample:
    """ESD of a single :class:`~hadamard_wishart.eigensolve.Spectrum` (or eigenvalue array)."""
    vals = np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=np.float64)
    if vals.size == 0:
        raise ConfigError("empty spectrum")
    vals = np.sort(vals)
    vals.setflags(write=False)
    return EsdSample(vals, m=len(vals), trials=1)


def pool(samples) -> EsdSample:
    """Concatenate ESDs; the pooled sample stands in for the expected ESD."""
    samples = list(samples)
    if not samples:
        raise ConfigError("nothing to pool")
    vals = np.sort(np.concatenate([s.eigenvalues for s in samples]))
    vals.setflags(write=False)
    return EsdSample(vals, m=samples[0].m, trials=sum(s.trials for s in samples))


def esd_moment(sample: EsdSample, k: int) -> float:
    if k < 1:
        raise ConfigError("moment order must be >= 1")
    return float(np.mean(sample.eigenvalues**k))


def ks_distance(a: EsdSample, b: EsdSample) -> float:
    """``sup_x |F_a(x) - F_b(x)|``, attained at one of the merged jump points."""
    if a.total == 0 or b.total == 0:
        raise ConfigError("KS distance needs non-empty samples")
    pts = np.concatenate([a.eigenvalues, b.eigenvalues])
    return float(np.max(np.abs(a.cdf(pts) - b.cdf(pts))))


def moment_targets(alpha: float) -> tuple[float, float, float]:
    """Limits of the first, second and fourth moments of the expected ESD of ``E``.

    The fourth moment limit keeps the two closed-walk classes that survive,
    each equal to ``(l_2a - l_a^2)^2``.
    """
    if not alpha > 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    m2 = ell_alpha(2 * alpha) - ell_alpha(alpha) ** 2
    return 0.0, m2, 2.0 * m2 * m2


@dataclass(frozen=True)
class MomentReport:
    m1_hat: float
    m2_hat: float
    m4_hat: float
    m1_target: float
    m2_target: float
    m4_target: float
    alpha: float
    n: int
    s: float
    trials: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def trace_moment(c, k: int) -> float:
    """``Tr(C^(2k))`` by powers of ``C^2``."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    c = np.asarray(c, dtype=np.float64)
    sq = c @ c
    half = k // 2
    r = np.eye(len(c)) if half == 0 else sq
    for _ in range(max(half - 1, 0)):
        r = r @ sq
    # Tr(S^k) = <R, R> for k even, <R, R S> for k odd, with R = S^(k//2)
    total = float(np.sum(r * r)) if k % 2 == 0 else float(np.sum(r * (r @ sq)))
    if not math.isfinite(total):
        raise RangeError(f"Tr(C^{2 * k}) overflows")
    return total


def walk_trace_oracle(c, k: int) -> float:
    """Sum over closed walks of length ``2k`` on the loopless complete graph.

    Each walk contributes the product of the entries along its edges; the sum
    equals ``Tr(C^(2k))`` when ``C`` has zero diagonal.
    """
    c = np.asarray(c, dtype=np.float64)
    m = len(c)
    if np.any(np.diagonal(c) != 0):
        raise ConfigError("walk expansion needs an exactly zero diagonal")
    if m > WALK_MAX_DIM or k > WALK_MAX_K or k < 1:
        raise ConfigError(f"walk enumeration limited to m <= {WALK_MAX_DIM}, 1 <= k <= {WALK_MAX_K}")
    length = 2 * k
    total = 0.0

    def extend(start: int, here: int, step: int, weight: float) -> None:
        nonlocal total
        if step == length - 1:
            if here != start:
                total += weight * c[here, start]
            return
        for nxt in range(m):
            if nxt != here:
                extend(start, nxt, step + 1, weight * c[here, nxt])

    for v in range(m):
        extend(v, v, 0, 1.0)
    return total
