import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hadamard_wishart.eigensolve import (
    CertifiedNotPsd,
    CertifiedPsd,
    Indeterminate,
    eigen_spectrum,
    extreme_eigenvalues,
    gershgorin_intervals,
    householder_tridiagonal,
    lambda_max,
    lambda_min,
    psd_certificate,
    sturm_count,
    sturm_eigenvalue,
)
from hadamard_wishart.errors import ConfigError
from hadamard_wishart.matrixops import SymmetricMatrix
from oracles import eig2x2, random_symmetric


def sym(a):
    return SymmetricMatrix(np.asarray(a, dtype=float))


def test_spectrum_examples():
    np.testing.assert_allclose(eigen_spectrum(sym(np.eye(3))).eigenvalues, [1, 1, 1], atol=1e-15)
    np.testing.assert_allclose(eigen_spectrum(sym([[2, 1], [1, 2]])).eigenvalues, eig2x2(2, 1, 2), atol=1e-14)
    np.testing.assert_allclose(eigen_spectrum(sym(np.ones((3, 3)))).eigenvalues, [0, 0, 3], atol=1e-14)


def test_spectrum_csv():
    text = eigen_spectrum(sym([[2, 1], [1, 2]])).to_csv()
    assert text.splitlines()[0] == "index,eigenvalue"
    assert len(text.splitlines()) == 3


@pytest.mark.parametrize(
    "a, expected",
    [(np.eye(5), 1.0), ([[0, 1], [1, 0]], -1.0), (np.diag([-3.0, 7.0]), -3.0)],
)
def test_lambda_min_examples(a, expected):
    assert lambda_min(sym(a)) == pytest.approx(expected, abs=1e-14)


def test_extremes_scalar():
    assert extreme_eigenvalues(sym([[4.5]])) == (4.5, 4.5)


def test_extremes_match_full_solver(rng):
    for m in (2, 3, 10, 57, 200):
        a = sym(random_symmetric(rng, m))
        spec = eigen_spectrum(a)
        tol = 1e-10 * a.frobenius()
        assert abs(lambda_min(a) - spec.eigenvalues[0]) <= tol
        assert abs(lambda_max(a) - spec.eigenvalues[-1]) <= tol


def test_reference_householder_sturm_agrees_with_lapack(rng):
    # independent route: pure-numpy Householder + Sturm bisection
    for m in (1, 2, 5, 20, 40):
        a = random_symmetric(rng, m)
        d, e = householder_tridiagonal(a)
        ref = [sturm_eigenvalue(d, e, k) for k in range(m)]
        np.testing.assert_allclose(ref, eigen_spectrum(sym(a)).eigenvalues, atol=1e-11 * max(1, np.linalg.norm(a)))
        if m > 1:
            lo, hi = extreme_eigenvalues(sym(a))
            assert lo == pytest.approx(ref[0], abs=1e-10 * np.linalg.norm(a))
            assert hi == pytest.approx(ref[-1], abs=1e-10 * np.linalg.norm(a))


def test_sturm_count():
    d = np.array([2.0, 2.0])
    e = np.array([1.0])  # eigenvalues 1 and 3
    assert [sturm_count(d, e, x) for x in (0.5, 1.5, 2.9, 3.5)] == [0, 1, 1, 2]


def test_solver_soundness_random(rng):
    for _ in range(30):
        m = int(rng.integers(1, 120))
        a = sym(random_symmetric(rng, m) * 10.0 ** rng.integers(-3, 4))
        spec = eigen_spectrum(a)
        vals = spec.eigenvalues
        assert spec.max_residual <= 1e-8
        assert np.all(np.diff(vals) >= 0)
        fro2 = a.frobenius() ** 2
        assert abs(vals.sum() - np.trace(a.values)) <= 1e-8 * max(np.abs(vals).sum(), 1e-300)
        assert abs((vals**2).sum() - fro2) <= 1e-8 * fro2


def test_residual_skipped_for_large_or_on_request():
    assert np.isnan(eigen_spectrum(sym(np.eye(3)), check_residual=False).max_residual)


def test_gershgorin_examples():
    c, r = gershgorin_intervals(sym(np.diag([1.0, 2, 3])))
    assert list(c) == [1, 2, 3] and list(r) == [0, 0, 0]
    c, r = gershgorin_intervals(sym([[2, 1], [1, 2]]))
    assert list(c) == [2, 2] and list(r) == [1, 1]
    c, r = gershgorin_intervals(sym([[1, 0.2, 0.2], [0.2, 1, 0.2], [0.2, 0.2, 1]]))
    np.testing.assert_allclose(c, 1)
    np.testing.assert_allclose(r, 0.4)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**31))
def test_gershgorin_contains_spectrum(m, seed):
    a = sym(random_symmetric(np.random.default_rng(seed), m))
    c, r = gershgorin_intervals(a)
    slack = 1e-10 * a.frobenius()
    for lam in eigen_spectrum(a).eigenvalues:
        assert np.any(np.abs(lam - c) <= r + slack)


def test_weyl_perturbation_bound(rng):
    for _ in range(20):
        m = int(rng.integers(2, 50))
        p = random_symmetric(rng, m)
        q = random_symmetric(rng, m) * 0.1
        lp = eigen_spectrum(sym(p)).eigenvalues
        lpq = eigen_spectrum(sym(p + q)).eigenvalues
        lq = eigen_spectrum(sym(q)).eigenvalues
        assert np.max(np.abs(lpq - lp)) <= max(abs(lq[0]), abs(lq[-1])) + 1e-8


def test_psd_certificate_examples():
    v = psd_certificate(sym(np.eye(3)), 0)
    assert v == CertifiedPsd("gershgorin", 1.0)
    v = psd_certificate(sym([[0, 1], [1, 0]]), 1e-12)
    assert isinstance(v, CertifiedNotPsd) and v.lambda_min == pytest.approx(-1, abs=1e-14)
    v = psd_certificate(sym([[1, 2], [2, 1]]), 1e-12)
    assert isinstance(v, CertifiedNotPsd) and v.lambda_min == pytest.approx(-1, abs=1e-14)


def test_psd_certificate_spectral_and_auto():
    # J_3 is PSD but fails Gershgorin (1 - 2 < 0); exact zero eigenvalues pass under auto tol
    j = sym(np.ones((3, 3)))
    v = psd_certificate(j, "auto")
    assert isinstance(v, CertifiedPsd) and v.method == "spectral" and v.margin >= 0
    assert isinstance(psd_certificate(j, "auto", spectral=False), Indeterminate)
    with pytest.raises(ConfigError):
        psd_certificate(j, -1.0)
