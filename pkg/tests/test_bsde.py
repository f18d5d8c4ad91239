import numpy as np
import pytest

from sglab import bsde
from sglab.errors import DegenerateBump, ParameterOutOfRange


@pytest.fixture(scope="module")
def term(cache16, small_rho):
    return bsde.WickCosineTerminal(cache16, small_rho, None, 1.0)


def test_constant_terminal():
    c = bsde.ConstantTerminal(0.3, 4)
    for a in (-2.0, 0.0, 1.5):
        assert bsde.cole_hopf_y0(c, a, 100, 0).value == pytest.approx(0.3, abs=1e-14)
    sol = bsde.solve_bsde_regression(c, 1.0, np.linspace(0, 1, 5), 300, 0)
    np.testing.assert_allclose(sol.y, 0.3, atol=1e-12)
    np.testing.assert_allclose(sol.zeta, 0.0, atol=1e-7)
    assert sol.residual_rms < 1e-10


def test_linear_terminal_mgf():
    sigma, alpha = 0.7, 1.3
    lin = bsde.ProjectedTerminal.linear(sigma, 3)
    est = bsde.cole_hopf_y0(lin, alpha, 200_000, 1)
    assert est.within(alpha * sigma**2 / 2)


def test_linear_terminal_zeta():
    sigma, alpha = 0.5, 1.0
    lin = bsde.ProjectedTerminal.linear(sigma, 3)
    z = bsde.zeta_coefficients(lin, alpha, 0.4, np.array([0.2, -0.1, 0.3]), 1e-3, 4000, 2)
    np.testing.assert_allclose(z, [sigma, 0, 0], atol=1e-6)
    with pytest.raises(DegenerateBump):
        bsde.zeta_coefficients(lin, alpha, 0.4, np.zeros(3), 1e-10, 10, 2)


def test_conditional_y_endpoints(term):
    b = np.random.default_rng(0).standard_normal((3, term.N))
    np.testing.assert_allclose(bsde.conditional_y(term, 1.0, 1.0, b, 10, 0), term.evaluate(b))
    y0 = bsde.conditional_y(term, 1.0, 0.0, np.zeros(term.N), 100_000, 5)
    ref = bsde.cole_hopf_y0(term, 1.0, 100_000, 6)
    assert abs(y0 - ref.value) <= 3 * np.sqrt(2) * ref.stderr
    with pytest.raises(ParameterOutOfRange):
        bsde.conditional_y(term, 1.0, 1.2, b, 10, 0)


def test_nested_matches_generic(term):
    rng = np.random.default_rng(1)
    b, z = rng.standard_normal((4, term.N)), rng.standard_normal((6, term.N))
    fast = term.nested(b, z, 0.6)
    slow = bsde.TerminalFunctional.nested(term, b, z, 0.6)
    np.testing.assert_allclose(fast, slow, rtol=1e-10, atol=1e-12)


def test_exact_features_are_conditional_mean(term):
    t, b = 0.6, np.random.default_rng(2).standard_normal((1, term.N)) * 0.6
    mean, grad = term.features(b, t)
    z = np.random.default_rng(3).standard_normal((200_000, term.N))
    mc = term.evaluate(b + np.sqrt(1 - t) * z)
    assert abs(mean[0] - mc.mean()) <= 4 * mc.std() / np.sqrt(mc.size)
    h = 1e-5
    e = np.zeros(term.N)
    e[2] = h
    fd = (term.features(b + e, t)[0] - term.features(b - e, t)[0]) / (2 * h)
    assert grad[0, 2] == pytest.approx(fd[0], rel=1e-6, abs=1e-10)


def test_zeta_weighted_gradient_matches_bump(term):
    b = np.zeros(term.N)
    z1 = bsde.zeta_coefficients(term, 1.0, 0.5, b, 1e-4, 20_000, 4)
    z2 = bsde.zeta_weighted_gradient(term, 1.0, 0.5, b, 20_000, 4)
    np.testing.assert_allclose(z1, z2, atol=1e-5)


def test_regression_negation_symmetry(term):
    grid = np.linspace(0, 1, 5)
    a = bsde.solve_bsde_regression(term, 1.0, grid, 1500, 3)
    b = bsde.solve_bsde_regression(-term, -1.0, grid, 1500, 3)
    np.testing.assert_allclose(b.y, -a.y, atol=1e-9)
    np.testing.assert_allclose(b.zeta, -a.zeta, atol=1e-5)
    assert (-(-term)) is term


def test_regression_close_to_cole_hopf(term):
    sol = bsde.solve_bsde_regression(term, 1.0, np.linspace(0, 1, 9), 4000, 3)
    ref = bsde.cole_hopf_y0(term, 1.0, 50_000, 4)
    assert abs(sol.y0 - ref.value) <= 1e-2 + 3 * ref.stderr
    assert np.all(np.abs(sol.y) <= term.bound + 1e-12)
    assert sol.zeta_h_inverse(term.cache.lam).shape == sol.zeta.shape


def test_tower_small(term):
    # unit scale: 20 batch means, so allow 4 combined standard errors
    r = bsde.tower_check(term, 1.0, 0.5, 1000, 300, 7, batch=50)
    assert r["gap"] <= 4 * r["tolerance"] / 3, r


def test_tilt_properties(term):
    tw = bsde.tilt_weights(term, 0.0, 1000, 1)
    np.testing.assert_array_equal(tw.gamma, 1.0)
    tw = bsde.tilt_weights(term, 1.0, 100_000, 1)
    assert tw.gamma.mean() == pytest.approx(1.0, rel=1e-12)
    assert abs(tw.split_mean - 1) <= 3 * tw.split_stderr
    one = bsde.ConstantTerminal(1.0, term.N)
    assert bsde.sg_expectation(one, term, 1.0, 1000, 2).value == pytest.approx(1.0, rel=1e-12)
    cos1 = bsde.ProjectedTerminal(np.eye(term.N)[0], lambda p: np.cos(p[..., 0]), 1.0)
    plain = bsde.sg_expectation(cos1, term, 0.0, 100_000, 3)
    assert plain.within(np.exp(-0.5))


def test_bmo_constants_examples():
    assert bsde.kappa(2.0) == pytest.approx(0.049460, abs=5e-7)
    assert bsde.reverse_holder_K(1.1, 0.05) == pytest.approx(2.465, abs=1e-3)
    assert bsde.reverse_holder_K(2.0, 1.0) is None
    p = np.linspace(1.01, 50, 300)
    assert np.all(np.diff([bsde.kappa(x) for x in p]) < 0)
    pb = bsde.p_bar(0.2)
    assert bsde.kappa(pb) == pytest.approx(0.2, abs=1e-10)
    c = bsde.bmo_constants(1.1, 0.05)
    assert c.valid and c.K == pytest.approx(2.465, abs=1e-3)
    for a in (0.1, 1.0, 1.7, 3.0):
        assert bsde.reverse_holder_K(bsde.valid_p(a), a) is not None
    with pytest.raises(ParameterOutOfRange):
        bsde.kappa(1.0)


def test_bmo_bound_constant_and_wick(term):
    c = bsde.ConstantTerminal(0.2, term.N)
    sol = bsde.solve_bsde_regression(c, 1.0, np.linspace(0, 1, 5), 500, 0)
    r = bsde.bmo_bound_check(sol, term.ledger)
    assert r["passed"] and max(row["estimate"] for row in r["rows"]) < 1e-10
    sol = bsde.solve_bsde_regression(term, 1.0, np.linspace(0, 1, 5), 2000, 0)
    assert bsde.bmo_bound_check(sol, term.ledger)["passed"]


def test_taylor_small(basis16, term):
    F = bsde.catalog_functionals(basis16)["cos_mode1"]
    r = bsde.taylor_check(term, F, 1.0, [0.4, 0.2, 0.1, 0.05], 20_000, 1)
    assert r["passed"], r


def test_catalog_bounds(basis16):
    z = np.random.default_rng(0).standard_normal((5000, 16)) * 3
    for F in bsde.catalog_functionals(basis16).values():
        assert np.all(np.abs(F.evaluate(z)) <= F.bound)


def test_shifted_terminal(term, basis16):
    F = bsde.catalog_functionals(basis16)["tanh_point"]
    s = bsde.ShiftedTerminal(term, 0.3, F)
    z = np.random.default_rng(0).standard_normal((10, 16))
    np.testing.assert_allclose(s.evaluate(z), term.evaluate(z) + 0.3 * F.evaluate(z))
    assert s.bound == pytest.approx(term.bound + 0.3)


def test_alpha_zero_is_mean(term):
    v = bsde.terminal_samples(term, 5000, 1)
    assert bsde.cole_hopf_estimate(v, 0.0).value == pytest.approx(v.mean())
    assert bsde.cole_hopf_estimate(v, 1e-9).value == pytest.approx(v.mean(), rel=1e-6)
