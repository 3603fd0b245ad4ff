"""Wishart matrices, absolute Hadamard powers and their centered splits."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, RangeError
from .spectral import ell_alpha
from .ensembles import rows_for

__all__ = [
    "SymmetricMatrix",
    "WishartContext",
    "hadamard_abs_power",
    "horn_fitzgerald_matrix",
    "subcritical_split",
    "supercritical_center",
    "wishart",
]


class SymmetricMatrix:
    """Immutable dense real symmetric matrix.

    Symmetry is structural: the matrix is defined by its lower triangle and
    the upper triangle is mirrored from it on construction.  ``values`` is a
    read-only full ``(m, m)`` array so it can be handed straight to LAPACK.
    """

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray, *, copy: bool = True) -> None:
        a = np.array(values, dtype=np.float64) if copy else np.asarray(values, dtype=np.float64)
        if not a.flags.writeable:
            a = a.copy()
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise RangeError("symmetric matrix entries must be finite")
        upper = np.triu_indices(a.shape[0], 1)
        a[upper] = a.T[upper]
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    def __setattr__(self, name, value):
        raise AttributeError("SymmetricMatrix is immutable")

    @classmethod
    def from_packed(cls, m: int, packed) -> SymmetricMatrix:
        """Build from a row-major packed lower triangle of length m(m+1)/2."""
        packed = np.asarray(packed, dtype=np.float64)
        if packed.shape != (m * (m + 1) // 2,):
            raise DimensionError(f"packed triangle of dim {m} needs {m * (m + 1) // 2} entries")
        a = np.zeros((m, m))
        a[np.tril_indices(m)] = packed
        return cls(a, copy=False)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def packed(self) -> np.ndarray:
        """Row-major lower triangle."""
        return self.values[np.tril_indices(self.dim)]

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.values)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.values))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self) -> str:
        return f"SymmetricMatrix(dim={self.dim})"

    def dumps(self) -> str:
        """Text dump: ``symmetric <m>`` then one lower-triangle row per line."""
        out = io.StringIO()
        out.write(f"symmetric {self.dim}\n")
        for i in range(self.dim):
            out.write(" ".join(format(float(v), ".17g") for v in self.values[i, : i + 1]))
            out.write("\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text: str) -> SymmetricMatrix:
        lines = text.strip().splitlines()
        head = lines[0].split()
        if len(head) != 2 or head[0] != "symmetric":
            raise ConfigError("matrix dump must start with 'symmetric <m>'")
        m = int(head[1])
        rows = [ln.split() for ln in lines[1:]]
        if len(rows) != m or any(len(r) != i + 1 for i, r in enumerate(rows)):
            raise ConfigError(f"malformed lower triangle for dim {m}")
        return cls.from_packed(m, [float(v) for r in rows for v in r])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> SymmetricMatrix:
        return cls.loads(Path(path).read_text())


@dataclass(frozen=True)
class WishartContext:
    """Size and exponent parameters shared by the centered decompositions."""

    n: int
    s: float
    m: int
    alpha: float
    ell_alpha: float

    @classmethod
    def build(cls, n: int, s: float, alpha: float) -> WishartContext:
        if alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {alpha}")
        return cls(n=n, s=s, m=rows_for(n, s), alpha=alpha, ell_alpha=ell_alpha(alpha))


def wishart(x: np.ndarray, n: int) -> SymmetricMatrix:
    """``X X^T / n`` for an ``m x n`` sample matrix ``X``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != n:
        raise DimensionError(f"X must have {n} columns, got shape {x.shape}")
    gram = x @ x.T
    gram /= n
    return SymmetricMatrix(gram, copy=False)


def hadamard_abs_power(a: SymmetricMatrix, alpha: float) -> SymmetricMatrix:
    """Entrywise ``|a_ij| ** alpha`` with ``0 ** alpha = 0``."""
    if not alpha > 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    with np.errstate(over="ignore"):
        b = np.power(np.abs(a.values), alpha)
    if not np.all(np.isfinite(b)):
        i, j = np.argwhere(~np.isfinite(b))[0]
        raise RangeError(f"|A[{i},{j}]|**{alpha} overflows (A[{i},{j}] = {a.values[i, j]!r})")
    return SymmetricMatrix(b, copy=False)


def _check_dim(b: SymmetricMatrix, ctx: WishartContext) -> None:
    if b.dim != ctx.m:
        raise DimensionError(f"matrix has dim {b.dim} but context expects m = {ctx.m}")


def subcritical_split(
    b: SymmetricMatrix, ctx: WishartContext
) -> tuple[SymmetricMatrix, SymmetricMatrix, SymmetricMatrix]:
    """Return ``(C, D, E)`` with ``C = B n^((alpha-s)/2)``, ``D`` diagonal and
    ``E`` zero-diagonal, so that ``C = E + D + (ell/n^(s/2)) J``."""
    _check_dim(b, ctx)
    shift = ctx.ell_alpha / ctx.n ** (ctx.s / 2)
    c = b.values * ctx.n ** ((ctx.alpha - ctx.s) / 2)
    d = np.diag(np.diagonal(c) - shift)
    e = c - shift
    np.fill_diagonal(e, 0.0)
    return SymmetricMatrix(c, copy=False), SymmetricMatrix(d, copy=False), SymmetricMatrix(e, copy=False)


def supercritical_center(b: SymmetricMatrix, ctx: WishartContext) -> SymmetricMatrix:
    """Off-diagonal ``B_ij - ell/n^(alpha/2)``, zero diagonal."""
    _check_dim(b, ctx)
    c = b.values - ctx.ell_alpha / ctx.n ** (ctx.alpha / 2)
    np.fill_diagonal(c, 0.0)
    return SymmetricMatrix(c, copy=False)


def horn_fitzgerald_matrix(n: int, eps: float) -> SymmetricMatrix:
    """The PSD matrix with entries ``1 + eps*i*j`` (1-based indices)."""
    if n < 2:
        raise ConfigError("Horn-Fitzgerald matrix needs n >= 2")
    if not eps > 0 or not math.isfinite(eps):
        raise ConfigError("eps must be positive and finite")
    v = np.arange(1, n + 1, dtype=np.float64)
    return SymmetricMatrix(1.0 + eps * np.outer(v, v), copy=False)
