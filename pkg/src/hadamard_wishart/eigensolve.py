"""Symmetric eigenvalues and positive semi-definiteness certificates.

Production paths call LAPACK: ``dsyevd`` for full spectra, and ``dsytrd``
(Householder tridiagonalization) followed by Sturm-sequence bisection
(``dstebz``) when only the extreme eigenvalues are needed.  A small pure-numpy
Householder + Sturm implementation is kept as an independent reference for
testing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import ConfigError, SolverError
from .matrixops import SymmetricMatrix

__all__ = [
    "CertifiedNotPsd",
    "CertifiedPsd",
    "Indeterminate",
    "PsdVerdict",
    "Spectrum",
    "auto_tol",
    "eigen_spectrum",
    "extreme_eigenvalues",
    "gershgorin_intervals",
    "householder_tridiagonal",
    "lambda_max",
    "lambda_min",
    "psd_certificate",
    "sturm_count",
    "sturm_eigenvalue",
]

# eigenvector residuals are only checked up to this size unless asked for
RESIDUAL_CHECK_MAX_DIM = 1000


def _fingerprint(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:16]


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with the worst normalized residual ``||Av - lv|| / ||A||_F``.

    ``max_residual`` is NaN when residuals were not checked.
    """

    eigenvalues: np.ndarray
    max_residual: float
    dim: int

    def __post_init__(self) -> None:
        if len(self.eigenvalues) != self.dim:
            raise ConfigError("spectrum length does not match dimension")

    def to_csv(self) -> str:
        lines = ["index,eigenvalue"]
        lines += [f"{i},{float(v):.17g}" for i, v in enumerate(self.eigenvalues)]
        return "\n".join(lines) + "\n"


def eigen_spectrum(a: SymmetricMatrix, check_residual: bool | None = None) -> Spectrum:
    """Full spectrum of ``a``.

    By default eigenvector residuals are checked for ``dim <= 1000``; pass
    ``check_residual`` to force either way.
    """
    vals = a.values
    m = a.dim
    if check_residual is None:
        check_residual = m <= RESIDUAL_CHECK_MAX_DIM
    try:
        if check_residual:
            w, v = scipy.linalg.eigh(vals, driver="evd", check_finite=False)
        else:
            w = scipy.linalg.eigh(vals, eigvals_only=True, driver="evd", check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"symmetric eigensolver failed: {exc}", _fingerprint(vals)) from exc
    residual = float("nan")
    if check_residual:
        norm = np.linalg.norm(vals)
        r = np.linalg.norm(vals @ v - v * w, axis=0)
        residual = float(r.max() / norm) if norm > 0 else 0.0
    w = np.sort(w)
    w.setflags(write=False)
    return Spectrum(eigenvalues=w, max_residual=residual, dim=m)


def extreme_eigenvalues(a: SymmetricMatrix) -> tuple[float, float]:
    """``(lambda_min, lambda_max)`` from one tridiagonalization plus bisection."""
    vals = a.values
    m = a.dim
    if m == 1:
        x = float(vals[0, 0])
        return x, x
    _, d, e, _, info = lapack.dsytrd(vals, lower=1)
    if info != 0:
        raise SolverError(f"dsytrd returned info={info}", _fingerprint(vals))
    try:
        lo = scipy.linalg.eigvalsh_tridiagonal(d, e, select="i", select_range=(0, 0), check_finite=False)
        hi = scipy.linalg.eigvalsh_tridiagonal(d, e, select="i", select_range=(m - 1, m - 1), check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"tridiagonal bisection failed: {exc}", _fingerprint(vals)) from exc
    return float(lo[0]), float(hi[0])


def lambda_min(a: SymmetricMatrix) -> float:
    return extreme_eigenvalues(a)[0]


def lambda_max(a: SymmetricMatrix) -> float:
    return extreme_eigenvalues(a)[1]


def gershgorin_intervals(a: SymmetricMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Centers ``a_ii`` and radii ``sum_{j != i} |a_ij|``."""
    vals = a.values
    centers = np.diagonal(vals).copy()
    radii = np.abs(vals).sum(axis=1) - np.abs(centers)
    # cancellation can leave tiny negatives when the diagonal dominates
    np.maximum(radii, 0.0, out=radii)
    return centers, radii


def auto_tol(a: SymmetricMatrix) -> float:
    return 1e-10 * a.frobenius()


@dataclass(frozen=True)
class CertifiedPsd:
    method: str  # "gershgorin" or "spectral"
    margin: float


@dataclass(frozen=True)
class CertifiedNotPsd:
    lambda_min: float


@dataclass(frozen=True)
class Indeterminate:
    lower_bound: float


PsdVerdict = CertifiedPsd | CertifiedNotPsd | Indeterminate


def psd_certificate(
    a: SymmetricMatrix, tol: float | str = "auto", *, spectral: bool = True
) -> PsdVerdict:
    """Decide whether ``a`` is PSD up to ``tol``.

    The Gershgorin bound is tried first.  If it fails and ``spectral`` is set,
    the smallest eigenvalue decides; otherwise the verdict is
    :class:`Indeterminate` carrying the Gershgorin lower bound.
    """
    if tol == "auto":
        tol = auto_tol(a)
    elif isinstance(tol, str) or tol < 0:
        raise ConfigError(f"tol must be 'auto' or non-negative, got {tol!r}")
    centers, radii = gershgorin_intervals(a)
    bound = float(np.min(centers - radii))
    if bound >= -tol:
        return CertifiedPsd("gershgorin", max(bound, 0.0))
    if not spectral:
        return Indeterminate(bound)
    lam = lambda_min(a)
    if lam >= -tol:
        return CertifiedPsd("spectral", max(lam, 0.0))
    return CertifiedNotPsd(lam)


# --- reference implementation (pure numpy, O(m^3) Python-level loops) ------


def householder_tridiagonal(a) -> tuple[np.ndarray, np.ndarray]:
    """Reduce a symmetric matrix to tridiagonal form by Householder reflections.

    Returns the diagonal ``d`` and off-diagonal ``e``.
    """
    t = np.array(a, dtype=np.float64)
    m = t.shape[0]
    for k in range(m - 2):
        x = t[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        sub = t[k + 1 :, k + 1 :]
        p = sub @ v
        kvec = p - (v @ p) * v
        sub -= 2.0 * (np.outer(v, kvec) + np.outer(kvec, v))
        t[k + 1 :, k] = 0.0
        t[k, k + 1 :] = 0.0
        t[k + 1, k] = t[k, k + 1] = alpha
    return np.diagonal(t).copy(), np.diagonal(t, 1).copy()


def sturm_count(d: np.ndarray, e: np.ndarray, x: float) -> int:
    """Number of eigenvalues of the tridiagonal matrix strictly below ``x``."""
    count = 0
    q = 1.0
    tiny = np.finfo(float).tiny
    for i in range(len(d)):
        off = e[i - 1] ** 2 / q if i > 0 else 0.0
        q = d[i] - x - off
        if q == 0.0:
            q = -tiny
        if q < 0:
            count += 1
    return count


def sturm_eigenvalue(d: np.ndarray, e: np.ndarray, k: int, rtol: float = 1e-15) -> float:
    """k-th smallest (0-based) eigenvalue of a tridiagonal matrix by bisection."""
    r = np.zeros(len(d))
    if len(e):
        r[:-1] += np.abs(e)
        r[1:] += np.abs(e)
    lo = float(np.min(d - r))
    hi = float(np.max(d + r))
    scale = max(abs(lo), abs(hi), 1.0)
    while hi - lo > rtol * scale:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if sturm_count(d, e, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
