import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sglab import coulomb, spectral, wick
from sglab.errors import CoincidentCharges, DimensionTooLarge, OutsideShrunkenDomain


def test_constants():
    c = coulomb.constants()
    assert c["zeta_prime_minus_1"] == pytest.approx(-0.16542114370045094, abs=1e-15)
    assert c["route_gap"] < 1e-25
    assert c["C"] == pytest.approx(2 ** (5 / 48) * np.exp(1.5 * c["zeta_prime_minus_1"]), rel=1e-14)


def test_interaction_energy(square, basis16, cache16):
    g = coulomb.cache_green(cache16, basis16)
    x, y = np.array([0.4, 0.45]), np.array([0.6, 0.55])
    assert coulomb.interaction_energy(coulomb.ChargeConfiguration(np.empty((0, 2)), []), g) == 0.0
    assert coulomb.interaction_energy(coulomb.ChargeConfiguration([x], [1]), g) == 0.0
    e = coulomb.interaction_energy(coulomb.ChargeConfiguration([x, y], [1, -1]), g)
    ref = spectral.mollified_green(square, basis16, cache16.eps, cache16.eps, x, y)
    assert e == pytest.approx(-ref, rel=1e-12)
    assert e <= 0
    with pytest.raises(CoincidentCharges):
        coulomb.ChargeConfiguration([x, x], [1, -1])
    with pytest.raises(OutsideShrunkenDomain):
        coulomb.interaction_energy(coulomb.ChargeConfiguration([(0.02, 0.5), y], [1, 1]), g, square, 0.1)


def test_energy_conjugation_invariant(basis16, cache16):
    g = coulomb.cache_green(cache16, basis16)
    cfg = coulomb.ChargeConfiguration([(0.4, 0.4), (0.6, 0.5), (0.5, 0.6)], [1, -1, 1])
    assert coulomb.interaction_energy(cfg, g) == pytest.approx(coulomb.interaction_energy(cfg.conjugate(), g))


def test_q_small_n(cache16, small_rho):
    I = wick.deterministic_integral(cache16, small_rho)
    assert coulomb.q_n_quadrature(0, 1.0, cache16, small_rho) == 1.0
    assert coulomb.q_n_quadrature(1, 1.0, cache16, small_rho) == pytest.approx(2 * I, rel=1e-12)
    assert coulomb.q_n_quadrature(2, 0.0, cache16, small_rho) == pytest.approx(4 * I * I, rel=1e-12)
    a = wick.node_weights(cache16, small_rho)
    G = cache16.green_matrix
    collapse = 2 * a @ (np.exp(G) + np.exp(-G)) @ a
    assert coulomb.q_n_quadrature(2, 1.0, cache16, small_rho) == pytest.approx(collapse, rel=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_sign_collapse_matches_full_enumeration(n, cache16, small_rho):
    a = wick.node_weights(cache16, small_rho)
    nz = a != 0
    sub = np.flatnonzero(nz)[:: 6 if n == 4 else 2]
    a, G = a[sub], cache16.green_matrix[np.ix_(sub, sub)]
    half = coulomb.configuration_sum_tensor(n, G, 0.9, a)
    full = coulomb.configuration_sum_tensor(n, G, 0.9, a, a.copy())
    assert complex(half).real == pytest.approx(complex(full).real, rel=1e-10)
    if n <= 3:
        # brute-force tensor contraction
        total = 0.0
        for gam in itertools.product((1, -1), repeat=n):
            for idx in itertools.product(range(len(a)), repeat=n):
                e = sum(gam[k] * gam[l] * G[idx[k], idx[l]] for k in range(n) for l in range(k + 1, n))
                total += np.exp(-0.81 * e) * np.prod(a[list(idx)])
        assert half == pytest.approx(total, rel=1e-10)


def test_q_matches_moments(cache16, small_rho):
    for n in (1, 2, 3):
        q = coulomb.q_n_quadrature(n, 1.0, cache16, small_rho)
        m = coulomb.q_n_moment(n, 1.0, cache16, small_rho, None, 100_000, 3)
        assert abs(q - m.value) <= 3 * m.stderr + 1e-9 * q
    assert coulomb.q_n_moment(0, 1.0, cache16, small_rho, None, 10, 0).value == 1.0


def test_qmc_route_close_to_tensor(basis16, small_rho):
    from sglab import gff
    cache = gff.build_cache(basis16, 0.1, 48, support=(small_rho.center, small_rho.radius))
    t = coulomb.q_n_quadrature(2, 1.0, cache, small_rho)
    q = coulomb.q_n_quadrature(2, 1.0, cache, small_rho, method="qmc", basis=basis16)
    assert q == pytest.approx(t, rel=1e-2)
    with pytest.raises(DimensionTooLarge):
        coulomb.q_n_quadrature(5, 1.0, cache, small_rho, method="tensor")


def test_tail_bound():
    x = 0.8
    direct = sum(x**n / np.prod(np.arange(1, n + 1)) for n in range(4, 60))
    assert coulomb.tail_bound(x, 3) == pytest.approx(direct, rel=1e-12)
    assert coulomb.tail_bound(0.0, 3) == 0.0


def test_partition_trivial_limits(cache16, small_rho):
    I = wick.deterministic_integral(cache16, small_rho)
    r = coulomb.partition(0.5, 0.0, cache16, small_rho, None, 4, 1000, 0)
    assert r.mc_partition == pytest.approx(np.exp(0.5 * I), rel=1e-12)
    assert r.y0_link == pytest.approx(np.exp(0.5 * I), rel=1e-12)
    assert abs(r.series_sum - np.exp(0.5 * I)) <= r.tail_bound + 1e-12
    r0 = coulomb.partition(0.0, 1.0, cache16, small_rho, None, 4, 1000, 0)
    assert r0.series_sum == 1.0 and r0.mc_partition == 1.0 and r0.passed


def test_partition_consistency(cache16, small_rho):
    qt = [coulomb.q_n_quadrature(n, 1.2, cache16, small_rho) for n in range(5)]
    r = coulomb.partition(1.0, 1.2, cache16, small_rho, None, 4, 50_000, 1, q_terms=qt)
    assert r.passed, r.checks


def test_ising_examples():
    assert coulomb.ising_npoint_halfplane(np.array([1j])) == pytest.approx(2 ** 0.125, rel=1e-14)
    assert coulomb.ising_npoint_halfplane(np.array([2j])) == pytest.approx(1.0, rel=1e-14)


@given(st.permutations([0, 1, 2]))
@settings(max_examples=6, deadline=None)
def test_ising_permutation_invariance(perm):
    z = np.array([0.3 + 1j, -0.5 + 0.4j, 1.2 + 2j])
    assert coulomb.ising_npoint_halfplane(z[list(perm)]) == pytest.approx(coulomb.ising_npoint_halfplane(z),
                                                                            rel=1e-13)


def test_xor_identity():
    rho = wick.TestFunction.smooth_bump((0.0, 0.0), 0.5)
    cmap = spectral.ConformalMap.disk_to_halfplane()
    r1 = coulomb.xor_identity_check(1, rho, cmap)
    assert r1["difference"] <= 1e-10
    assert r1["closed_form"] == pytest.approx(r1["route_a"], rel=1e-12)
    assert coulomb.xor_identity_check(2, rho, cmap, 8, 10)["passed"]


def test_char_functional_trivial(cache16, small_rho):
    r = coulomb.char_functional(wick.Angle.zero(), 0.25, 1.0, cache16, small_rho, 2000, 3, 0)
    assert r.psi_tilt == 1.0 and abs(r.psi_series - 1) < 1e-12
    th = wick.Angle.gaussian_bump(1.0, (0.5, 0.5), 0.1)
    r0 = coulomb.char_functional(th, 0.0, 1.0, cache16, small_rho, 2000, 3, 0)
    assert r0.psi_tilt == 1.0 and r0.psi_series == 1.0


def test_char_functional_routes(cache16, small_rho):
    th = wick.Angle.gaussian_bump(1.0, (0.5, 0.5), 0.1)
    r = coulomb.char_functional(th, 0.25, 1.0, cache16, small_rho, 50_000, 3, 0)
    assert r.passed and abs(r.psi_tilt) <= 1 + 3 * r.psi_tilt_stderr
    neg = coulomb.char_functional(th.scaled(-1), 0.25, 1.0, cache16, small_rho, 2000, 3, 0)
    assert neg.psi_series == pytest.approx(np.conj(r.psi_series), rel=1e-12)
    lip = coulomb.lipschitz_check(th, th.scaled(1.5), 0.25, 1.0, cache16, small_rho, 20_000, 1)
    assert lip["passed"]
