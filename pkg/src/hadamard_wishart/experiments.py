"""Monte Carlo studies of positivity of absolute Hadamard powers of Wishart matrices.

Every experiment is a pure function of its arguments, including the master
seed.  Trials are independent work items; with ``threads > 1`` they run on a
process pool and results are reassembled by trial index, so the output never
depends on the worker count.  BLAS is pinned to one thread inside each work
item because multithreaded LAPACK reductions are not bit-reproducible.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np
from threadpoolctl import threadpool_limits

from .eigensolve import extreme_eigenvalues, gershgorin_intervals
from .ensembles import EntryLaw, SeedSpec, rows_for, sample_matrix
from .errors import BracketError, ConfigError, InvariantViolation
from .matrixops import (
    SymmetricMatrix,
    WishartContext,
    hadamard_abs_power,
    horn_fitzgerald_matrix,
    subcritical_split,
    supercritical_center,
    wishart,
)
from .spectral import EsdSample, MomentReport, esd, ks_distance, moment_targets, pool, trace_moment

log = logging.getLogger(__name__)

GAUSSIAN = EntryLaw("gaussian")

# redraw streams for row resampling live far above any trial index
RESAMPLE_OFFSET = 1 << 40

# (s, alpha, published lambda_1, gated in acceptance)
TABLE1_ROWS = (
    (1.0, 0.98, -0.288, True),
    (1.0, 0.99, -0.246, False),
    (1.0, 1.06, 0.016, False),
    (1.0, 1.07, 0.046, True),
    (0.8, 0.78, -0.076, True),
    (0.8, 0.79, -0.049, False),
    (0.8, 0.81, 0.017, False),
    (0.8, 0.82, 0.041, True),
)


def _parallel_map(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


def _sample_wishart(n: int, s: float, law: EntryLaw, seed: SeedSpec) -> tuple[np.ndarray, SymmetricMatrix]:
    x = sample_matrix(rows_for(n, s), n, law, seed)
    return x, wishart(x, n)


def _resolve_tol(b: SymmetricMatrix, tol: float | str) -> float:
    return 1e-10 * b.frobenius() if tol == "auto" else float(tol)


# --- phase scans ------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    n: int
    m: int
    s: float
    alpha: float
    trial_index: int
    lambda_min: float
    lambda_max: float
    is_psd: bool
    wall_time_seconds: float

    CSV_HEADER = "n,m,s,alpha,trial,lambda_min,lambda_max,is_psd,seconds"

    def csv_row(self) -> tuple:
        return (self.n, self.m, self.s, self.alpha, self.trial_index,
                self.lambda_min, self.lambda_max, self.is_psd, self.wall_time_seconds)


def _classify(b: SymmetricMatrix, tol: float | str) -> tuple[float, float, bool]:
    """Extreme eigenvalues and the PSD decision (Gershgorin, then lambda_min)."""
    tol = _resolve_tol(b, tol)
    lo, hi = extreme_eigenvalues(b)
    centers, radii = gershgorin_intervals(b)
    is_psd = bool(np.min(centers - radii) >= -tol or lo >= -tol)
    return lo, hi, is_psd


def _trial_alphas(
    n: int, s: float, alphas: tuple[float, ...], law: EntryLaw, seed: SeedSpec, tol: float | str
) -> list[TrialRecord]:
    with threadpool_limits(limits=1):
        _, a = _sample_wishart(n, s, law, seed)
        out = []
        for alpha in alphas:
            t0 = time.perf_counter()
            b = hadamard_abs_power(a, alpha)
            lo, hi, is_psd = _classify(b, tol)
            out.append(TrialRecord(n, a.dim, s, alpha, seed.trial_index, lo, hi, is_psd,
                                   time.perf_counter() - t0))
    return out


def run_trial(
    n: int, s: float, alpha: float, law: EntryLaw = GAUSSIAN, seed: SeedSpec = SeedSpec(0), tol: float | str = "auto"
) -> TrialRecord:
    """Sample ``X``, form ``B = |XX^T/n|^alpha`` and record its extreme eigenvalues."""
    if not alpha > 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    return _trial_alphas(n, s, (alpha,), law, seed, tol)[0]


@dataclass(frozen=True)
class ScanConfig:
    law: EntryLaw
    s: float
    n_grid: tuple[int, ...]
    alpha_grid: tuple[float, ...]
    trials: int
    master_seed: int
    psd_tol: float | str = "auto"
    threads: int = 1

    def __post_init__(self) -> None:
        if not 0 < self.s <= 1:
            raise ConfigError(f"s must lie in (0, 1], got {self.s}")
        for name, grid in (("n_grid", self.n_grid), ("alpha_grid", self.alpha_grid)):
            if not grid:
                raise ConfigError(f"{name} must be non-empty")
            if list(grid) != sorted(grid):
                raise ConfigError(f"{name} must be sorted ascending")
        if any(a <= 0 for a in self.alpha_grid):
            raise ConfigError("alpha values must be positive")
        if any(int(n) != n or n < 1 for n in self.n_grid):
            raise ConfigError("n values must be positive integers")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.psd_tol != "auto" and (isinstance(self.psd_tol, str) or self.psd_tol < 0):
            raise ConfigError("psd_tol must be 'auto' or a non-negative number")
        SeedSpec(self.master_seed)

    def to_dict(self) -> dict:
        return {
            "law": str(self.law),
            "s": self.s,
            "n_grid": list(self.n_grid),
            "alpha_grid": list(self.alpha_grid),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "tol": self.psd_tol,
        }

    @classmethod
    def from_dict(cls, d: dict, threads: int = 1) -> ScanConfig:
        return cls(
            law=EntryLaw.parse(d["law"]),
            s=float(d["s"]),
            n_grid=tuple(int(n) for n in d["n_grid"]),
            alpha_grid=tuple(float(a) for a in d["alpha_grid"]),
            trials=int(d["trials"]),
            master_seed=int(d["master_seed"]),
            psd_tol=d["tol"] if d["tol"] == "auto" else float(d["tol"]),
            threads=threads,
        )


@dataclass(frozen=True)
class ScanPoint:
    n: int
    m: int
    alpha: float
    frac_negative: float
    mean_lambda_min: float
    min_lambda_min: float
    se: float  # standard error of mean_lambda_min

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ScanResult:
    config: ScanConfig
    points: tuple[ScanPoint, ...]
    records: tuple[TrialRecord, ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "points": [p.to_dict() for p in self.points]}

    def point(self, n: int, alpha: float) -> ScanPoint:
        for p in self.points:
            if p.n == n and p.alpha == alpha:
                return p
        raise KeyError((n, alpha))


def _aggregate(n: int, m: int, alpha: float, recs: list[TrialRecord]) -> ScanPoint:
    lams = np.array([r.lambda_min for r in recs])
    se = float(lams.std(ddof=1) / math.sqrt(len(lams))) if len(lams) > 1 else 0.0
    neg = sum(not r.is_psd for r in recs)
    return ScanPoint(n, m, alpha, neg / len(recs), float(lams.mean()), float(lams.min()), se)


def run_phase_scan(cfg: ScanConfig) -> ScanResult:
    """Fraction of non-PSD trials at every ``(n, alpha)`` grid point.

    Trial ``t`` uses stream ``SeedSpec(master_seed, t)`` at every grid point,
    so the alpha sweep at fixed ``n`` runs on common random matrices.
    """
    items = [(n, t) for n in cfg.n_grid for t in range(cfg.trials)]
    work = [partial(_trial_alphas, n, cfg.s, cfg.alpha_grid, cfg.law, SeedSpec(cfg.master_seed, t), cfg.psd_tol)
            for n, t in items]
    results = _parallel_map(_call, work, cfg.threads)
    by_point: dict[tuple[int, float], list[TrialRecord]] = {}
    records = []
    for recs in results:
        for r in recs:
            by_point.setdefault((r.n, r.alpha), []).append(r)
            records.append(r)
    points = []
    for n in cfg.n_grid:
        m = rows_for(n, cfg.s)
        for alpha in cfg.alpha_grid:
            points.append(_aggregate(n, m, alpha, by_point[(n, alpha)]))
    return ScanResult(cfg, tuple(points), tuple(records))


def _call(fn):
    return fn()


# --- boundary search ----------------------------------------------------------


@dataclass(frozen=True)
class BoundaryEstimate:
    n: int
    s: float
    alpha_lo: float
    alpha_hi: float
    alpha_crit: float
    trials_per_probe: int
    decision_rule: float
    probes: tuple[tuple[float, float], ...]  # (alpha, frac_negative) in probe order

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probes"] = [{"alpha": a, "frac_negative": f} for a, f in self.probes]
        return d


def estimate_boundary(
    n: int,
    s: float,
    law: EntryLaw = GAUSSIAN,
    trials: int = 5,
    rule: float = 0.5,
    tol_alpha: float = 0.02,
    *,
    master_seed: int = 0,
    start: float | None = None,
    step: float = 0.05,
    max_depth: int = 12,
    threads: int = 1,
    tol: float | str = "auto",
) -> BoundaryEstimate:
    """Bracket and bisect the exponent where the majority of trials turn PSD.

    A probe at ``alpha`` is on the negative side when the fraction of non-PSD
    trials is at least ``rule``.  Brackets are grown from ``start`` (default
    ``s``) with doubling steps inside ``(0.05, 4]``.
    """
    if not 0 < rule < 1:
        raise ConfigError("rule must lie in (0, 1)")
    if not tol_alpha > 0:
        raise ConfigError("tol_alpha must be positive")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    lo_limit, hi_limit = 0.05, 4.0
    probes: list[tuple[float, float]] = []

    def frac(alpha: float) -> float:
        cfg = ScanConfig(law, s, (n,), (alpha,), trials, master_seed, tol, threads)
        f = run_phase_scan(cfg).points[0].frac_negative
        probes.append((alpha, f))
        log.info("probe alpha=%.6g frac_negative=%.3f", alpha, f)
        return f

    a0 = s if start is None else start
    delta = step
    if frac(a0) >= rule:
        lo = a0
        hi = min(lo + delta, hi_limit)
        while frac(hi) >= rule:
            if hi >= hi_limit:
                raise BracketError(f"still non-PSD at alpha = {hi_limit}")
            lo, delta = hi, 2 * delta
            hi = min(lo + delta, hi_limit)
    else:
        hi = a0
        lo = max(hi - delta, lo_limit)
        while frac(lo) < rule:
            if lo <= lo_limit:
                raise BracketError(f"already PSD at alpha = {lo_limit}")
            hi, delta = lo, 2 * delta
            lo = max(hi - delta, lo_limit)
    depth = 0
    while hi - lo > tol_alpha and depth < max_depth:
        mid = 0.5 * (lo + hi)
        if frac(mid) >= rule:
            lo = mid
        else:
            hi = mid
        depth += 1
    return BoundaryEstimate(n, s, lo, hi, 0.5 * (lo + hi), trials, rule, tuple(probes))


# --- table reproduction -------------------------------------------------------


@dataclass(frozen=True)
class Table1Row:
    s: float
    alpha: float
    reference_lambda_min: float
    median_lambda_min: float
    sign_agreement: int
    trials: int
    gated: bool
    lambda_mins: tuple[float, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda_mins"] = list(self.lambda_mins)
        return d


def reproduce_table1(
    master_seed: int,
    trials_per_row: int,
    *,
    n: int = 5000,
    rows=TABLE1_ROWS,
    law: EntryLaw = GAUSSIAN,
    threads: int = 1,
) -> list[Table1Row]:
    """Median smallest eigenvalue and sign agreement for each published row.

    Rows sharing ``s`` reuse the same sampled Wishart matrix per trial.
    """
    if trials_per_row < 1:
        raise ConfigError("trials_per_row must be >= 1")
    out = []
    for s in dict.fromkeys(r[0] for r in rows):
        group = [r for r in rows if r[0] == s]
        alphas = tuple(r[1] for r in group)
        work = [partial(_trial_alphas, n, s, alphas, law, SeedSpec(master_seed, t), "auto")
                for t in range(trials_per_row)]
        per_trial = _parallel_map(_call, work, threads)
        for k, (_, alpha, ref, gated) in enumerate(group):
            lams = tuple(recs[k].lambda_min for recs in per_trial)
            agree = sum(np.sign(lam) == np.sign(ref) for lam in lams)
            out.append(Table1Row(s, alpha, ref, float(np.median(lams)), int(agree),
                                 trials_per_row, gated, lams))
    return out


# --- sub-Gaussian certificate regime --------------------------------------------


@dataclass(frozen=True)
class CertificateReport:
    n: int
    m: int
    s: float
    alpha: float
    eps: float
    law: str
    trials: int
    fraction: float  # lambda_min >= 1 - eps and lambda_max <= 1 + eps
    gershgorin_fraction: float  # the same window certified by Gershgorin alone
    lambda_mins: tuple[float, ...]
    lambda_maxs: tuple[float, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda_mins"] = list(self.lambda_mins)
        d["lambda_maxs"] = list(self.lambda_maxs)
        return d


def _certificate_trial(n, s, alpha, law, seed, eps) -> tuple[float, float, bool]:
    with threadpool_limits(limits=1):
        _, a = _sample_wishart(n, s, law, seed)
        b = hadamard_abs_power(a, alpha)
        centers, radii = gershgorin_intervals(b)
        gersh = bool(np.min(centers - radii) >= 1 - eps and np.max(centers + radii) <= 1 + eps)
        lo, hi = extreme_eigenvalues(b)
    return lo, hi, gersh


def subgaussian_certificate_experiment(
    n: int,
    s: float,
    alpha: float,
    law: EntryLaw = GAUSSIAN,
    eps: float = 0.3,
    trials: int = 10,
    *,
    master_seed: int = 0,
    threads: int = 1,
) -> CertificateReport:
    """How often the spectrum of ``B`` sits inside ``[1 - eps, 1 + eps]``."""
    if law.heavy_tailed or not law.is_standardized:
        raise ConfigError(f"law {law} is not a standardized sub-Gaussian law")
    if law.variant == "exp1":
        raise ConfigError("exp1 is sub-exponential, not sub-Gaussian")
    if not alpha > 2 * s:
        warnings.warn(f"alpha={alpha} <= 2s={2 * s}: outside the certified regime", stacklevel=2)
    if trials < 1 or not eps > 0:
        raise ConfigError("trials must be >= 1 and eps > 0")
    work = [partial(_certificate_trial, n, s, alpha, law, SeedSpec(master_seed, t), eps) for t in range(trials)]
    res = _parallel_map(_call, work, threads)
    inside = sum(lo >= 1 - eps and hi <= 1 + eps for lo, hi, _ in res)
    gersh = sum(g for _, _, g in res)
    return CertificateReport(n, rows_for(n, s), s, alpha, eps, str(law), trials, inside / trials, gersh / trials,
                             tuple(r[0] for r in res), tuple(r[1] for r in res))


# --- moments of the centered subcritical matrix --------------------------------


def _centered_trial(n, s, alpha, law, seed, want_eigs: bool):
    with threadpool_limits(limits=1):
        _, a = _sample_wishart(n, s, law, seed)
        ctx = WishartContext.build(n, s, alpha)
        _, _, e = subcritical_split(hadamard_abs_power(a, alpha), ctx)
        ev = e.values
        m = e.dim
        sq = ev @ ev
        m1 = float(np.trace(ev)) / m
        m2 = float(np.trace(sq)) / m
        m4 = float(np.sum(sq * sq)) / m
        eigs = np.linalg.eigvalsh(ev) if want_eigs else None
    return m1, m2, m4, eigs


def moment_convergence_experiment(
    n_grid,
    s: float,
    alpha: float,
    trials: int = 10,
    *,
    law: EntryLaw = GAUSSIAN,
    master_seed: int = 0,
    threads: int = 1,
) -> list[MomentReport]:
    """First, second and fourth moments of the pooled ESD of ``E`` per ``n``.

    Moments are taken through the trace identity ``m_k = Tr(E^k)/m``, which
    equals the ESD moment and keeps ``m_1`` exactly zero.
    """
    if not alpha < s:
        raise ConfigError(f"moment experiment needs alpha < s (got alpha={alpha}, s={s})")
    _, m2t, m4t = moment_targets(alpha)
    reports = []
    for n in n_grid:
        work = [partial(_centered_trial, n, s, alpha, law, SeedSpec(master_seed, t), False) for t in range(trials)]
        res = _parallel_map(_call, work, threads)
        m1, m2, m4 = (float(np.mean([r[i] for r in res])) for i in range(3))
        reports.append(MomentReport(m1, m2, m4, 0.0, m2t, m4t, alpha, int(n), s, trials))
    return reports


def pooled_esd(
    n: int,
    s: float,
    alpha: float,
    trials: int = 10,
    *,
    law: EntryLaw = GAUSSIAN,
    master_seed: int = 0,
    threads: int = 1,
) -> EsdSample:
    """Pooled ESD of ``E`` over ``trials`` independent samples."""
    work = [partial(_centered_trial, n, s, alpha, law, SeedSpec(master_seed, t), True) for t in range(trials)]
    res = _parallel_map(_call, work, threads)
    return pool(esd(r[3]) for r in res)


# --- rank perturbation ----------------------------------------------------------


@dataclass(frozen=True)
class RankPerturbationReport:
    n: int
    m: int
    s: float
    alpha: float
    resamples: int
    bound: float
    max_ks: float
    ks_values: tuple[float, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ks_values"] = list(self.ks_values)
        return d


def _centered_from_x(x: np.ndarray, ctx: WishartContext) -> SymmetricMatrix:
    return subcritical_split(hadamard_abs_power(wishart(x, ctx.n), ctx.alpha), ctx)[2]


def rank_perturbation_check(
    n: int,
    s: float,
    alpha: float,
    master_seed: int = 0,
    resamples: int = 50,
    *,
    law: EntryLaw = GAUSSIAN,
) -> RankPerturbationReport:
    """KS distance between ESDs of ``E`` before and after redrawing one row of ``X``.

    Resample ``r`` replaces row ``r mod m`` by a row drawn from stream
    ``SeedSpec(master_seed, RESAMPLE_OFFSET + r)``.  Because the two matrices
    differ by rank at most 2, every distance must be ``<= 2/m``; a violation
    raises :class:`InvariantViolation`.
    """
    if resamples < 1:
        raise ConfigError("resamples must be >= 1")
    ctx = WishartContext.build(n, s, alpha)
    m = ctx.m
    ks_values = []
    with threadpool_limits(limits=1):
        x = sample_matrix(m, n, law, SeedSpec(master_seed, 0))
        base = esd(np.linalg.eigvalsh(_centered_from_x(x, ctx).values))
        for r in range(resamples):
            i = r % m
            x2 = np.array(x)
            x2[i] = sample_matrix(1, n, law, SeedSpec(master_seed, RESAMPLE_OFFSET + r))[0]
            other = esd(np.linalg.eigvalsh(_centered_from_x(x2, ctx).values))
            d = ks_distance(base, other)
            # distances are multiples of 1/m; compare eigenvalue counts
            if round(d * m) > 2:
                raise InvariantViolation(f"resample {r}: KS distance {d} exceeds 2/m = {2 / m}")
            ks_values.append(d)
    return RankPerturbationReport(n, m, s, alpha, resamples, 2 / m, max(ks_values), tuple(ks_values))


# --- trace decay in the supercritical regime ------------------------------------


@dataclass(frozen=True)
class TraceDecayPoint:
    n: int
    m: int
    mean: float
    se: float
    values: tuple[float, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["values"] = list(self.values)
        return d


def _trace_trial(n, s, alpha, k, law, seed) -> float:
    with threadpool_limits(limits=1):
        _, a = _sample_wishart(n, s, law, seed)
        c = supercritical_center(hadamard_abs_power(a, alpha), WishartContext.build(n, s, alpha))
        return trace_moment(c.values, k)


def trace_decay_experiment(
    k: int,
    s: float,
    alpha: float,
    n_grid,
    trials: int = 30,
    *,
    law: EntryLaw = GAUSSIAN,
    master_seed: int = 0,
    threads: int = 1,
) -> list[TraceDecayPoint]:
    """Monte Carlo mean and standard error of ``Tr(C^(2k))`` for each ``n``."""
    if k < 1 or trials < 1:
        raise ConfigError("k and trials must be >= 1")
    if not alpha > (k + 1) / k * s:
        warnings.warn(f"alpha={alpha} <= (k+1)s/k: trace moment need not vanish", stacklevel=2)
    out = []
    for n in n_grid:
        work = [partial(_trace_trial, n, s, alpha, k, law, SeedSpec(master_seed, t)) for t in range(trials)]
        vals = np.array(_parallel_map(_call, work, threads))
        se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        out.append(TraceDecayPoint(int(n), rows_for(n, s), float(vals.mean()), se, tuple(vals.tolist())))
    return out


# --- deterministic counterexample ------------------------------------------------


@dataclass(frozen=True)
class HFResult:
    n: int
    alpha: float
    min_lambda: float
    argmin_eps: float
    eps_grid: tuple[float, ...]
    lambda_mins: tuple[float, ...]
    scales: tuple[float, ...]  # Frobenius norm of each powered matrix

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("eps_grid", "lambda_mins", "scales"):
            d[key] = list(d[key])
        return d


def hf_counterexample(n: int, alpha: float, eps_grid) -> HFResult:
    """Smallest eigenvalue of ``(1 + eps*i*j)^alpha`` over a descending eps grid."""
    eps_grid = tuple(float(e) for e in eps_grid)
    if n < 3:
        raise ConfigError("n must be >= 3")
    if not eps_grid or any(e <= 0 for e in eps_grid) or list(eps_grid) != sorted(eps_grid, reverse=True):
        raise ConfigError("eps_grid must be positive and descending")
    lams, scales = [], []
    for eps in eps_grid:
        b = hadamard_abs_power(horn_fitzgerald_matrix(n, eps), alpha)
        lams.append(extreme_eigenvalues(b)[0])
        scales.append(b.frobenius())
    k = int(np.argmin(lams))
    return HFResult(n, alpha, lams[k], eps_grid[k], eps_grid, tuple(lams), tuple(scales))
