import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sglab import spectral
from sglab.errors import (CoincidentPoints, IndexOutOfRange, InvalidTruncation, MissingBasis, OutsideDomain,
                          OutsideShrunkenDomain, UnsupportedDomain)


def test_square_ground_state(square):
    b = spectral.build_basis(square, 1)
    assert b.lam[0] == pytest.approx(1 / (2 * np.pi**2), rel=1e-14)
    assert b((0.5, 0.5))[0] == pytest.approx(2.0, rel=1e-14)
    assert b((0.0, 0.3))[0] == pytest.approx(0.0, abs=1e-14)
    x = np.array([[0.2, 0.7], [0.9, 0.1]])
    np.testing.assert_allclose(b(x)[0], 2 * np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1]))


def test_square_eigenvalues_sorted_and_known(square):
    b = spectral.build_basis(square, 50)
    assert np.all(np.diff(b.lam) <= 0)
    mn = sorted(m * m + n * n for m in range(1, 20) for n in range(1, 20))[:50]
    np.testing.assert_allclose(b.lam, 1 / (np.pi**2 * np.array(mn, float)))


def test_rectangle_orthonormal():
    dom = spectral.DomainSpec.rectangle(2.0, 1.0)
    b = spectral.build_basis(dom, 12)
    n = 200
    xs = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(2 * xs, xs, indexing="ij")
    E = b(np.stack([X.ravel(), Y.ravel()], -1))
    gram = E @ E.T * (2.0 / n**2)
    np.testing.assert_allclose(gram, np.eye(12), atol=1e-8)


def test_disk_orthonormal_and_dirichlet():
    disk = spectral.DomainSpec.unit_disk()
    b = spectral.build_basis(disk, 10)
    r, wr = np.polynomial.legendre.leggauss(60)
    r = 0.5 * (r + 1)
    wr = 0.5 * wr
    th = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    R, T = np.meshgrid(r, th, indexing="ij")
    W = (wr[:, None] * R) * (2 * np.pi / th.size)
    E = b(np.stack([R * np.cos(T), R * np.sin(T)], -1).reshape(-1, 2))
    gram = (E * W.ravel()) @ E.T
    np.testing.assert_allclose(gram, np.eye(10), atol=1e-10)
    edge = np.stack([np.cos(th), np.sin(th)], -1)
    assert np.max(np.abs(b(edge))) < 1e-12


def test_invalid_requests(square):
    with pytest.raises(InvalidTruncation):
        spectral.build_basis(square, 0)
    b = spectral.build_basis(square, 4)
    with pytest.raises(IndexOutOfRange):
        spectral.weyl_ratio(b, 0)
    with pytest.raises(IndexOutOfRange):
        spectral.weyl_ratio(b, 5)
    with pytest.raises(UnsupportedDomain):
        spectral.build_basis(spectral.DomainSpec.conformal_disk(), 4)
    with pytest.raises(MissingBasis):
        spectral.green(square, None, (0.2, 0.2), (0.5, 0.5))


def test_weyl_ratio_first(square):
    b = spectral.build_basis(square, 3)
    assert spectral.weyl_ratio(b, 1) == pytest.approx(0.0506606, rel=1e-6)


def test_weyl_plateau_reports_both_candidates(square):
    stats = spectral.weyl_plateau(spectral.build_basis(square, 2000))
    assert stats["relative_spread"] < 0.1
    assert set(stats["candidates"]) == {"inverse_area_4pi", "area_over_4pi"}
    assert stats["plateau"] > 0


def test_halfplane_examples():
    assert spectral.green_halfplane(1j, 2j) == pytest.approx(np.log(3), rel=1e-14)
    assert spectral.green_halfplane(1j, 1 + 1j) == pytest.approx(0.5 * np.log(5), rel=1e-14)
    with pytest.raises(CoincidentPoints):
        spectral.green_halfplane(1j, 1j)
    with pytest.raises(OutsideDomain):
        spectral.green_halfplane(1j, -1j)


upper = st.complex_numbers(min_magnitude=0, max_magnitude=5, allow_nan=False, allow_infinity=False).filter(
    lambda z: z.imag > 0.05)


@given(upper, upper)
@settings(max_examples=60, deadline=None)
def test_halfplane_symmetric_nonnegative(w, z):
    if abs(w - z) < 1e-3:
        return
    a, b = spectral.green_halfplane(w, z), spectral.green_halfplane(z, w)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-14)
    assert a >= 0


def test_disk_green_at_origin():
    dom = spectral.DomainSpec.conformal_disk()
    y = np.array([[0.3, 0.1], [-0.5, 0.2], [0.0, -0.7]])
    np.testing.assert_allclose(spectral.green(dom, None, np.zeros((3, 2)), y), -np.log(np.hypot(*y.T)), rtol=1e-12)


def test_disk_series_vs_conformal():
    disk = spectral.DomainSpec.unit_disk()
    b = spectral.build_basis(disk, 2000)
    x, y = np.array([[0.2, 0.1]]), np.array([[-0.3, 0.4]])
    s = spectral.green(disk, b, x, y)
    c = spectral.green(spectral.DomainSpec.conformal_disk(), None, x, y)
    assert abs(s - c)[0] < 2e-2


def test_green_zero_outside(square, basis16):
    assert spectral.green(square, basis16, (1.5, 0.5), (0.5, 0.5)) == 0.0


def test_dirichlet_decay_and_log_singularity():
    dom = spectral.DomainSpec.conformal_disk()
    x = np.array([0.1, 0.0])
    rays = np.array([[r, 0.2 * r] for r in np.linspace(0.5, 0.98, 10)]) / np.hypot(1, 0.2)
    g = spectral.green(dom, None, np.broadcast_to(x, rays.shape), rays)
    assert np.all(np.diff(g) < 0) and g[-1] < 0.05
    d = 10.0 ** -np.arange(1, 8)
    near = x + np.column_stack([d, 0 * d])
    reg = spectral.green(dom, None, np.broadcast_to(x, near.shape), near) + np.log(d)
    assert np.ptp(reg[3:]) < 1e-4


def test_mollifiers_normalised():
    for m in (spectral.STANDARD_MOLLIFIER, spectral.SHARP_MOLLIFIER):
        assert m.integral() == pytest.approx(1.0, abs=1e-5)
        nodes, w = m.ball_rule()
        assert w.sum() == pytest.approx(1.0, abs=1e-5)
        assert np.all(np.hypot(*nodes.T) <= 1.0)


def test_mollified_eigenfunctions_match_quadrature(basis16):
    x = np.array([[0.4, 0.5], [0.55, 0.62]])
    a = spectral.mollified_eigenfunctions(basis16, x, 0.1)
    b = spectral.mollified_eigenfunctions_quadrature(basis16, x, 0.1)
    np.testing.assert_allclose(a, b, atol=1e-5)


def test_mollified_green_routes_and_sign(square, basis16):
    x, y = np.array([0.35, 0.5]), np.array([0.65, 0.45])
    s = spectral.mollified_green(square, basis16, 0.1, 0.05, x, y)
    q = spectral.mollified_green(square, basis16, 0.1, 0.05, x, y, method="quadrature")
    assert s == pytest.approx(q, abs=1e-5)
    assert s >= 0
    with pytest.raises(OutsideShrunkenDomain):
        spectral.mollified_green(square, basis16, 0.1, 0.1, (0.1, 0.5), y)


def test_mollified_green_conformal_close_to_pointwise_far_apart():
    dom = spectral.DomainSpec.conformal_disk()
    x, y = np.array([-0.3, 0.0]), np.array([0.3, 0.1])
    m = spectral.mollified_green(dom, None, 0.02, 0.02, x, y, method="quadrature")
    assert m == pytest.approx(spectral.green(dom, None, x, y), abs=1e-3)


def test_basis_csv(tmp_path, square):
    b = spectral.build_basis(square, 5)
    p = tmp_path / "b.csv"
    b.to_csv(p)
    lines = p.read_text().strip().splitlines()
    assert lines[0].replace(" ", "") == "k,lambda_k"
    assert len(lines) == 6


def test_conformal_map_derivative():
    cmap = spectral.ConformalMap.disk_to_halfplane()
    z = np.array([0.1 + 0.2j, -0.4 + 0.1j])
    h = 1e-6
    fd = (cmap.forward(z + h) - cmap.forward(z - h)) / (2 * h)
    np.testing.assert_allclose(cmap.derivative(z), fd, rtol=1e-7)
    assert np.all(cmap(np.array([[0.1, 0.2], [-0.4, 0.1]])).imag > 0)
