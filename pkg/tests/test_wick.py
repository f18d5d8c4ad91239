import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sglab import montecarlo, spectral, wick
from sglab.errors import BetaOutOfRegime, GridCoverage, NegativeVariance


@given(st.floats(-5, 5), st.floats(0, 3))
@settings(max_examples=50, deadline=None)
def test_wick_factor_limits(w, v):
    assert wick.wick_cos(w, v, 0.0) == 1.0
    assert wick.wick_sin(w, v, 0.0) == 0.0
    assert wick.wick_cos(0.0, v, 1.2) == pytest.approx(np.exp(0.72 * v))


def test_wick_cos_unbiased():
    v = 1.7
    w = np.sqrt(v) * np.random.default_rng(0).standard_normal(1_000_000)
    for beta in (0.5, 1.0, 1.4):
        x = wick.wick_cos(w, v, beta)
        assert abs(x.mean() - 1) <= 3 * x.std() / np.sqrt(x.size)


def test_errors():
    with pytest.raises(NegativeVariance):
        wick.wick_cos(0.0, -1.0, 1.0)
    with pytest.raises(BetaOutOfRegime):
        wick.check_beta(np.sqrt(2.0))


def test_tested_cosine_beta_zero_and_mean(basis16, cache16, small_rho):
    I = wick.deterministic_integral(cache16, small_rho)
    z = montecarlo.sample_mode_matrix(16, 100_000, seed=4)
    assert np.allclose(wick.tested_cosine(basis16, cache16, z[:5], small_rho, None, 0.0), I)
    x = wick.tested_cosine(basis16, cache16, z, small_rho, None, 1.0)
    assert abs(x.mean() - I) <= 3 * x.std() / np.sqrt(x.size)


def test_chaos_split_and_theta_forms(basis16, cache16, small_rho):
    z = montecarlo.sample_mode_matrix(16, 100, seed=6)
    c = wick.chaos_functional(basis16, cache16, z, small_rho, None, 1.1)
    np.testing.assert_allclose(c.real, wick.tested_cosine(basis16, cache16, z, small_rho, None, 1.1), rtol=1e-12)
    np.testing.assert_allclose(c.imag, wick.tested_sine(basis16, cache16, z, small_rho, None, 1.1), rtol=1e-12)
    th = wick.Angle.gaussian_bump(1.3, (0.5, 0.5), 0.1)
    a = wick.f_rho_theta(basis16, cache16, z, small_rho, th, 1.1)
    b = wick.f_rho_theta_decomposed(basis16, cache16, z, small_rho, th, 1.1)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-14)
    np.testing.assert_array_equal(wick.f_rho_theta(basis16, cache16, z, small_rho, wick.Angle.zero(), 1.1), 0.0)


def test_uniform_bound_holds(basis16, cache16, small_rho):
    led = wick.bounds_ledger(cache16, small_rho, None, 1.2)
    z = montecarlo.sample_mode_matrix(16, 20_000, seed=8)
    x = wick.tested_cosine(basis16, cache16, z, small_rho, None, 1.2)
    assert np.max(np.abs(x)) <= led.xi_bound
    assert led.C_majorant >= led.C_beta


def test_coverage_check(cache16):
    with pytest.raises(GridCoverage):
        wick.node_weights(cache16, wick.TestFunction.smooth_bump((0.5, 0.5), 0.3))


def test_test_functions_bounded_and_supported():
    pts = np.random.default_rng(1).uniform(0, 1, (2000, 2))
    for f in (wick.TestFunction.smooth_bump((0.5, 0.5), 0.2), wick.TestFunction.sine_window((0.5, 0.5), 0.2),
              wick.TestFunction.constant_on_support((0.5, 0.5), 0.2)):
        v = f(pts)
        assert np.all(np.abs(v) <= f.bound + 1e-12)
        assert np.all(v[np.hypot(*(pts - 0.5).T) > f.radius + 1e-12] == 0)


def test_csv_functions(tmp_path):
    p = tmp_path / "rho.csv"
    p.write_text("x,y,value\n0.4,0.4,1\n0.6,0.4,2\n0.4,0.6,3\n0.6,0.6,4\n")
    f = wick.TestFunction.from_csv(p)
    assert f.bound == 4
    assert f((0.4, 0.4)) == pytest.approx(1.0)
    psi = wick.DensityWeight.from_csv(p)
    assert psi.bound == 4


def test_mollifier_gap_small(square, small_rho):
    b = spectral.build_basis(square, 32)
    rho = wick.TestFunction.smooth_bump((0.5, 0.5), 0.1)
    r = wick.mollifier_gap(b, rho, None, 1.0, [0.2, 0.1], 4000, 1,
                           (spectral.STANDARD_MOLLIFIER, spectral.SHARP_MOLLIFIER), grid_n=32)
    assert r["means_agree"]
    assert len(r["rows"]) == 2
