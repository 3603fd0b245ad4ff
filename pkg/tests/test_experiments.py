import math

import numpy as np
import pytest

from hadamard_wishart import serialization
from hadamard_wishart.ensembles import EntryLaw, SeedSpec, sample_matrix
from hadamard_wishart.errors import BracketError, ConfigError
from hadamard_wishart.experiments import (
    ScanConfig,
    TrialRecord,
    estimate_boundary,
    hf_counterexample,
    moment_convergence_experiment,
    pooled_esd,
    rank_perturbation_check,
    reproduce_table1,
    run_phase_scan,
    run_trial,
    subgaussian_certificate_experiment,
    trace_decay_experiment,
)
from hadamard_wishart.spectral import esd, ks_distance

GAUSS = EntryLaw("gaussian")
EPS_GRID = tuple(10.0**-k for k in range(1, 7))


def test_run_trial_scalar():
    rec = run_trial(1, 1.0, 1.0, GAUSS, SeedSpec(3))
    x = sample_matrix(1, 1, GAUSS, SeedSpec(3))[0, 0]
    assert rec.m == 1
    assert rec.lambda_min == pytest.approx(x * x, rel=1e-15)
    assert rec.is_psd


def test_run_trial_deterministic():
    a = run_trial(150, 0.9, 0.7, GAUSS, SeedSpec(5, 2))
    b = run_trial(150, 0.9, 0.7, GAUSS, SeedSpec(5, 2))
    assert (a.lambda_min, a.lambda_max, a.is_psd) == (b.lambda_min, b.lambda_max, b.is_psd)


def test_run_trial_integer_power_psd():
    assert run_trial(200, 1.0, 3.0, GAUSS, SeedSpec(1)).is_psd


@pytest.mark.parametrize("law", ["gaussian", "uniform01:std", "exp1:std", "uniform01", "exp1", "pareto:3"])
@pytest.mark.parametrize("alpha", [2.0, 4.0])
def test_even_integer_powers_always_psd(law, alpha):
    for n in (20, 120):
        assert run_trial(n, 1.0, alpha, EntryLaw.parse(law), SeedSpec(17)).is_psd


@pytest.mark.parametrize("law", ["uniform01", "exp1", "pareto:1.5"])
def test_odd_integer_powers_psd_for_nonnegative_laws(law):
    for alpha in (1.0, 3.0):
        assert run_trial(100, 1.0, alpha, EntryLaw.parse(law), SeedSpec(18)).is_psd


def test_heavy_tailed_pipeline_runs():
    rec = run_trial(80, 0.8, 0.6, EntryLaw("cauchy"), SeedSpec(2))
    assert math.isfinite(rec.lambda_min)


def test_scan_config_validation():
    with pytest.raises(ConfigError):
        ScanConfig(GAUSS, 1.5, (10,), (1.0,), 1, 0)
    with pytest.raises(ConfigError):
        ScanConfig(GAUSS, 1.0, (20, 10), (1.0,), 1, 0)
    with pytest.raises(ConfigError):
        ScanConfig(GAUSS, 1.0, (10,), (), 1, 0)
    with pytest.raises(ConfigError):
        ScanConfig(GAUSS, 1.0, (10,), (1.0,), 0, 0)


def test_scan_far_supercritical_is_psd():
    s = 0.6
    res = run_phase_scan(ScanConfig(GAUSS, s, (300, 600), (2 * s + 1, 2 * s + 1.5), 4, 9))
    assert all(p.frac_negative == 0 for p in res.points)


def test_scan_deep_subcritical_is_not_psd():
    res = run_phase_scan(ScanConfig(GAUSS, 1.0, (1000,), (0.5,), 10, 21))
    assert res.points[0].frac_negative == 1.0
    assert res.points[0].m == 1000


def test_scan_thread_count_invariance():
    cfg1 = ScanConfig(GAUSS, 0.9, (100, 200), (0.5, 0.9, 1.4), 3, 99, threads=1)
    cfg2 = ScanConfig(GAUSS, 0.9, (100, 200), (0.5, 0.9, 1.4), 3, 99, threads=2)
    assert serialization.dumps(run_phase_scan(cfg1)) == serialization.dumps(run_phase_scan(cfg2))


def test_scan_json_schema_and_round_trip():
    import json

    cfg = ScanConfig(EntryLaw("uniform01", standardize=True), 0.8, (50,), (0.3, 1.2), 2, 2**63 + 5, psd_tol=1e-9)
    res = run_phase_scan(cfg)
    doc = json.loads(serialization.dumps(res))
    assert set(doc) == {"config", "points"}
    assert set(doc["config"]) == {"law", "s", "n_grid", "alpha_grid", "trials", "master_seed", "tol"}
    assert set(doc["points"][0]) == {"n", "m", "alpha", "frac_negative", "mean_lambda_min", "min_lambda_min", "se"}
    assert ScanConfig.from_dict(doc["config"]) == cfg
    assert len(res.records) == 4
    assert isinstance(res.records[0], TrialRecord)


def test_boundary_estimate_moderate_n():
    est = estimate_boundary(400, 0.8, GAUSS, trials=5, rule=0.5, tol_alpha=0.04, master_seed=3)
    assert est.alpha_lo < est.alpha_crit < est.alpha_hi
    assert est.alpha_hi - est.alpha_lo <= 0.04
    probes = dict(est.probes)
    assert probes[est.alpha_lo] >= 0.5 > probes[est.alpha_hi]
    assert 0.6 < est.alpha_crit < 1.0


def _inversions(probes):
    fr = [f for _, f in sorted(probes)]
    return sum(b > a for a, b in zip(fr, fr[1:]))


def test_boundary_reference_s08():
    est = estimate_boundary(5000, 0.8, GAUSS, trials=5, tol_alpha=0.02, master_seed=11)
    assert 0.75 < est.alpha_crit < 0.85
    assert _inversions(est.probes) <= 1


@pytest.mark.slow
def test_boundary_reference_s1():
    est = estimate_boundary(5000, 1.0, GAUSS, trials=3, tol_alpha=0.1, master_seed=11)
    assert 0.9 < est.alpha_crit < 1.1
    assert _inversions(est.probes) <= 1


def test_boundary_bracket_error():
    # a single trial at tiny n: probes at the lower limit cannot all be negative
    with pytest.raises(BracketError):
        estimate_boundary(2, 1.0, GAUSS, trials=1, start=0.2, step=0.1, master_seed=0)


def test_boundary_validation():
    with pytest.raises(ConfigError):
        estimate_boundary(100, 1.0, GAUSS, rule=1.0)
    with pytest.raises(ConfigError):
        estimate_boundary(100, 1.0, GAUSS, tol_alpha=0)


def test_table1_structure_small_n():
    rows = reproduce_table1(7, 2, n=300)
    assert [(r.s, r.alpha) for r in rows] == [(1.0, 0.98), (1.0, 0.99), (1.0, 1.06), (1.0, 1.07),
                                              (0.8, 0.78), (0.8, 0.79), (0.8, 0.81), (0.8, 0.82)]
    for r in rows:
        assert r.trials == 2 and len(r.lambda_mins) == 2
        assert 0 <= r.sign_agreement <= 2
        assert r.median_lambda_min == pytest.approx(np.median(r.lambda_mins))


def test_certificate_window_when_mean_component_small():
    # m = 12 rows: the rank-one mean part (m-1) ell_1 / sqrt(n) ~ 0.14 < eps
    rep = subgaussian_certificate_experiment(4000, 0.3, 1.0, GAUSS, 0.3, 10, master_seed=1)
    assert rep.m == 12
    assert rep.fraction >= 0.9
    assert 0 <= rep.gershgorin_fraction <= rep.fraction


def test_certificate_scalar_edge_case():
    rep = subgaussian_certificate_experiment(1000, 0.05, 1.0, GAUSS, 0.3, 20, master_seed=2)
    assert rep.m == 1
    assert rep.lambda_mins == rep.lambda_maxs
    assert rep.fraction >= 0.95
    assert rep.gershgorin_fraction == rep.fraction


def test_certificate_law_checks():
    with pytest.raises(ConfigError):
        subgaussian_certificate_experiment(100, 0.3, 1.0, EntryLaw("uniform01"), 0.3, 2)
    with pytest.raises(ConfigError):
        subgaussian_certificate_experiment(100, 0.3, 1.0, EntryLaw("cauchy"), 0.3, 2)
    with pytest.warns(UserWarning):
        subgaussian_certificate_experiment(100, 0.5, 0.8, GAUSS, 0.3, 1)


def test_moment_experiment_small():
    reps = moment_convergence_experiment([300, 600], 0.9, 0.6, 4, master_seed=1)
    for r in reps:
        assert r.m1_hat == 0.0
        assert r.m2_target == pytest.approx(0.1595976223305018, rel=1e-12)
        assert abs(r.m2_hat - r.m2_target) <= 0.2 * r.m2_target
        assert r.m4_hat <= 3 * r.m4_target
    with pytest.raises(ConfigError):
        moment_convergence_experiment([100], 0.5, 0.6, 1)


def test_moments_match_pooled_esd():
    reps = moment_convergence_experiment([200], 0.9, 0.6, 3, master_seed=4)
    pooled = pooled_esd(200, 0.9, 0.6, 3, master_seed=4)
    assert pooled.trials == 3
    ev = pooled.eigenvalues
    assert reps[0].m2_hat == pytest.approx(np.mean(ev**2), rel=1e-10)
    assert reps[0].m4_hat == pytest.approx(np.mean(ev**4), rel=1e-10)
    assert abs(np.mean(ev)) < 1e-12


def test_rank_perturbation_bound():
    rep = rank_perturbation_check(300, 0.8, 0.5, master_seed=8, resamples=15)
    assert rep.m == 95  # 300**0.8 = 95.87
    assert rep.max_ks <= 2 / rep.m
    assert len(rep.ks_values) == 15


def test_identical_resample_gives_zero_distance():
    vals = np.linspace(-1, 1, 11)
    assert ks_distance(esd(vals), esd(vals.copy())) == 0


def test_trace_decay_decreasing():
    pts = trace_decay_experiment(1, 1.0, 2.5, [100, 200, 400], 10, master_seed=3)
    means = [p.mean for p in pts]
    assert means[0] > means[1] > means[2]
    with pytest.warns(UserWarning):
        trace_decay_experiment(2, 1.0, 1.2, [20], 2)


def test_hf_counterexample():
    neg = hf_counterexample(5, 2.5, EPS_GRID)
    assert neg.min_lambda < 0
    assert neg.min_lambda < -1e-10 * max(neg.scales)
    assert neg.argmin_eps in EPS_GRID
    for alpha in (2.0, 3.5):
        res = hf_counterexample(5, alpha, EPS_GRID)
        assert all(lam >= -1e-10 * sc for lam, sc in zip(res.lambda_mins, res.scales))
    with pytest.raises(ConfigError):
        hf_counterexample(5, 2.5, (1e-3, 1e-1))
    with pytest.raises(ConfigError):
        hf_counterexample(2, 2.5, EPS_GRID)
