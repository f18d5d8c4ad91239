"""Dirichlet spectra, Green functions and mollifiers on planar domains.

Eigenpairs follow the convention ``-Laplace(e_k) = e_k / lambda_k`` so that the
``lambda_k`` are the eigenvalues of the inverse Dirichlet Laplacian.  Green
functions are normalised as ``2*pi`` times the inverse Laplacian, which makes
them blow up like ``-log|x - y|`` on the diagonal.

Points are arrays whose last axis has length 2 (``x``, ``y`` coordinates).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import (
    CoincidentPoints,
    IndexOutOfRange,
    InvalidTruncation,
    MissingBasis,
    OutsideDomain,
    OutsideShrunkenDomain,
    ParameterOutOfRange,
    UnsupportedDomain,
)

TWO_PI = 2.0 * np.pi
_COINCIDENCE_TOL = 1e-12


def as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1:] != (2,):
        raise ValueError(f"points must have a trailing axis of length 2, got shape {pts.shape}")
    return pts


def to_complex(x) -> np.ndarray:
    pts = as_points(x)
    return pts[..., 0] + 1j * pts[..., 1]


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConformalMap:
    """Conformal bijection from a domain onto the upper half-plane.

    ``forward`` and ``derivative`` act on complex arrays.
    """

    forward: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    @classmethod
    def disk_to_halfplane(cls) -> "ConformalMap":
        """Cayley-type map ``z -> i(1+z)/(1-z)`` from the unit disk onto H+."""
        return cls(
            forward=lambda z: 1j * (1.0 + z) / (1.0 - z),
            derivative=lambda z: 2j / (1.0 - z) ** 2,
            name="disk_cayley",
        )

    def __call__(self, x) -> np.ndarray:
        return self.forward(to_complex(x))

    def check(self, x) -> None:
        """Raise unless ``Im phi > 0`` and ``phi' != 0`` at the given points."""
        z = to_complex(x)
        w = self.forward(z)
        dw = self.derivative(z)
        if np.any(~np.isfinite(w)) or np.any(w.imag <= 0):
            raise OutsideDomain(f"conformal map '{self.name}' leaves the upper half-plane")
        if np.any(np.abs(dw) == 0):
            raise OutsideDomain(f"conformal map '{self.name}' has a vanishing derivative")


@dataclass(frozen=True)
class DomainSpec:
    """A bounded simply connected planar domain.

    Use the constructors :meth:`rectangle`, :meth:`unit_square`,
    :meth:`unit_disk` and :meth:`conformal` rather than the raw fields.
    """

    kind: str
    width: float = 1.0
    height: float = 1.0
    cmap: Optional[ConformalMap] = None
    membership: Optional[Callable[[np.ndarray], np.ndarray]] = None
    distance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    conformal_area: Optional[float] = None
    bbox: tuple = field(default=(0.0, 1.0, 0.0, 1.0))

    def __post_init__(self):
        if self.kind not in ("rectangle", "unit_disk", "conformal"):
            raise UnsupportedDomain(f"unknown domain kind {self.kind!r}")
        if self.kind == "rectangle" and not (self.width > 0 and self.height > 0):
            raise ValueError("rectangle sides must be positive")
        if self.kind == "conformal":
            if self.cmap is None or self.membership is None or self.conformal_area is None:
                raise ValueError("conformal domains need a map, a membership test and an area")
            if not self.conformal_area > 0:
                raise ValueError("area must be positive")

    @classmethod
    def rectangle(cls, width: float, height: float) -> "DomainSpec":
        return cls("rectangle", float(width), float(height), bbox=(0.0, float(width), 0.0, float(height)))

    @classmethod
    def unit_square(cls) -> "DomainSpec":
        return cls.rectangle(1.0, 1.0)

    @classmethod
    def unit_disk(cls) -> "DomainSpec":
        return cls("unit_disk", bbox=(-1.0, 1.0, -1.0, 1.0))

    @classmethod
    def conformal(cls, cmap, membership, area, distance=None, bbox=(-1.0, 1.0, -1.0, 1.0)):
        return cls(
            "conformal",
            cmap=cmap,
            membership=membership,
            distance=distance,
            conformal_area=float(area),
            bbox=tuple(bbox),
        )

    @classmethod
    def conformal_disk(cls) -> "DomainSpec":
        """The unit disk seen only through its map onto the half-plane."""
        return cls.conformal(
            ConformalMap.disk_to_halfplane(),
            membership=lambda p: np.hypot(p[..., 0], p[..., 1]) < 1.0,
            area=np.pi,
            distance=lambda p: 1.0 - np.hypot(p[..., 0], p[..., 1]),
        )

    @property
    def area(self) -> float:
        if self.kind == "rectangle":
            return self.width * self.height
        if self.kind == "unit_disk":
            return float(np.pi)
        return self.conformal_area

    @property
    def center(self) -> np.ndarray:
        x0, x1, y0, y1 = self.bbox
        return np.array([(x0 + x1) / 2, (y0 + y1) / 2])

    def contains(self, x) -> np.ndarray:
        pts = as_points(x)
        if self.kind == "rectangle":
            return (
                (pts[..., 0] > 0) & (pts[..., 0] < self.width)
                & (pts[..., 1] > 0) & (pts[..., 1] < self.height)
            )
        if self.kind == "unit_disk":
            return np.hypot(pts[..., 0], pts[..., 1]) < 1.0
        return np.asarray(self.membership(pts), dtype=bool)

    def boundary_distance(self, x) -> np.ndarray:
        """Distance to the complement (negative outside for the analytic kinds)."""
        pts = as_points(x)
        if self.kind == "rectangle":
            return np.minimum.reduce([
                pts[..., 0], self.width - pts[..., 0], pts[..., 1], self.height - pts[..., 1]
            ])
        if self.kind == "unit_disk":
            return 1.0 - np.hypot(pts[..., 0], pts[..., 1])
        if self.distance is None:
            raise UnsupportedDomain("this conformal domain has no boundary-distance function")
        return np.asarray(self.distance(pts), dtype=float)

    def in_shrunken(self, x, eps: float) -> np.ndarray:
        """Membership in the shrunken domain: distance to the complement > 2*eps."""
        return self.contains(x) & (self.boundary_distance(x) > 2.0 * eps)


# ---------------------------------------------------------------------------
# Spectral basis
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """First ``N`` Dirichlet eigenpairs of a rectangle or the unit disk.

    ``index`` holds ``(m, n)`` mode numbers for rectangles and
    ``(order, parity, zero)`` for the disk, ``parity`` 0 for cosine and 1 for
    sine angular dependence.
    """

    domain: DomainSpec
    lam: np.ndarray
    index: np.ndarray
    norm: np.ndarray
    wavenumber: np.ndarray

    @property
    def N(self) -> int:
        return self.lam.shape[0]

    def __call__(self, x) -> np.ndarray:
        """Eigenfunction values, shape ``(N,) + x.shape[:-1]``."""
        pts = as_points(x)
        if self.domain.kind == "rectangle":
            a, b = self.domain.width, self.domain.height
            m = self.index[:, 0].reshape((-1,) + (1,) * (pts.ndim - 1))
            n = self.index[:, 1].reshape(m.shape)
            nrm = self.norm.reshape(m.shape)
            return nrm * np.sin(m * np.pi * pts[..., 0] / a) * np.sin(n * np.pi * pts[..., 1] / b)
        order, parity, j, nrm = self._disk_arrays(pts.ndim - 1)
        r = np.hypot(pts[..., 0], pts[..., 1])
        th = np.arctan2(pts[..., 1], pts[..., 0])
        ang = np.where(parity == 0, np.cos(order * th), np.sin(order * th))
        return nrm * special.jv(order, j * r) * ang

    def _disk_arrays(self, extra_dims):
        shape = (-1,) + (1,) * extra_dims
        return (
            self.index[:, 0].reshape(shape),
            self.index[:, 1].reshape(shape),
            self.wavenumber.reshape(shape),
            self.norm.reshape(shape),
        )

    def gradient(self, x) -> np.ndarray:
        """Gradients, shape ``(N,) + x.shape[:-1] + (2,)``."""
        pts = as_points(x)
        if self.domain.kind == "rectangle":
            a, b = self.domain.width, self.domain.height
            shape = (-1,) + (1,) * (pts.ndim - 1)
            m = self.index[:, 0].reshape(shape)
            n = self.index[:, 1].reshape(shape)
            nrm = self.norm.reshape(shape)
            kx, ky = m * np.pi / a, n * np.pi / b
            sx, cx = np.sin(kx * pts[..., 0]), np.cos(kx * pts[..., 0])
            sy, cy = np.sin(ky * pts[..., 1]), np.cos(ky * pts[..., 1])
            return np.stack([nrm * kx * cx * sy, nrm * ky * sx * cy], axis=-1)
        order, parity, j, nrm = self._disk_arrays(pts.ndim - 1)
        r = np.hypot(pts[..., 0], pts[..., 1])
        th = np.arctan2(pts[..., 1], pts[..., 0])
        ang = np.where(parity == 0, np.cos(order * th), np.sin(order * th))
        dang = np.where(parity == 0, -np.sin(order * th), np.cos(order * th)) * order
        dr = nrm * j * special.jvp(order, j * r) * ang
        safe_r = np.where(r > 0, r, 1.0)
        j_over_r = np.where(r > 0, special.jv(order, j * r) / safe_r, np.where(order == 1, j / 2.0, 0.0))
        dth = nrm * j_over_r * dang
        c, s = np.cos(th), np.sin(th)
        return np.stack([dr * c - dth * s, dr * s + dth * c], axis=-1)

    def gradient_bound(self) -> np.ndarray:
        """Per-mode upper bound on ``sup |grad e_k|`` over the domain."""
        if self.domain.kind == "rectangle":
            return self.norm * self.wavenumber
        # |J_n'| <= 1 and |n J_n(x) / x| <= 1
        return np.sqrt(2.0) * self.norm * self.wavenumber

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "lambda_k"])
            for k, lam in enumerate(self.lam, start=1):
                w.writerow([k, repr(float(lam))])


def build_basis(domain: DomainSpec, N: int) -> SpectralBasis:
    """Return the ``N`` largest inverse-Laplacian eigenvalues with eigenfunctions."""
    if domain.kind == "conformal":
        raise UnsupportedDomain("conformal domains carry no analytic spectrum")
    if int(N) != N or N < 1:
        raise InvalidTruncation(f"truncation must be a positive integer, got {N!r}")
    N = int(N)
    if domain.kind == "rectangle":
        return _rectangle_basis(domain, N)
    return _disk_basis(domain, N)


def _rectangle_basis(domain, N):
    a, b = domain.width, domain.height
    # Weyl count: #{mu <= M} ~ ab M / (4 pi); grow until enough modes
    mu_max = 4 * np.pi * N / (a * b) * 1.5 + 50.0
    while True:
        m_max = int(np.sqrt(mu_max) * a / np.pi) + 1
        n_max = int(np.sqrt(mu_max) * b / np.pi) + 1
        m, n = np.meshgrid(np.arange(1, m_max + 1), np.arange(1, n_max + 1), indexing="ij")
        m, n = m.ravel(), n.ravel()
        mu = np.pi**2 * ((m / a) ** 2 + (n / b) ** 2)
        keep = mu <= mu_max
        if keep.sum() >= N:
            break
        mu_max *= 1.5
    m, n, mu = m[keep], n[keep], mu[keep]
    order = np.lexsort((n, m, mu))[:N]
    m, n, mu = m[order], n[order], mu[order]
    return SpectralBasis(
        domain=domain,
        lam=1.0 / mu,
        index=np.stack([m, n], axis=1),
        norm=np.full(N, 2.0 / np.sqrt(a * b)),
        wavenumber=np.sqrt(mu),
    )


def _disk_basis(domain, N):
    # Number of disk modes with Bessel zero below J is about J**2 / 4
    j_max = 2.0 * np.sqrt(N) * 1.2 + 10.0
    while True:
        zeros, orders, parities = [], [], []
        order = 0
        while True:
            count = int(j_max / np.pi) + 2
            z = special.jn_zeros(order, count)
            z = z[z < j_max]
            if z.size == 0:
                break
            for parity in ((0,) if order == 0 else (0, 1)):
                zeros.append(z)
                orders.append(np.full(z.size, order))
                parities.append(np.full(z.size, parity))
            order += 1
        j = np.concatenate(zeros)
        if j.size >= N:
            break
        j_max *= 1.3
    orders = np.concatenate(orders)
    parities = np.concatenate(parities)
    sort = np.lexsort((parities, orders, j))[:N]
    j, orders, parities = j[sort], orders[sort], parities[sort]
    zero_rank = np.zeros(N, dtype=int)
    for i in range(N):
        zero_rank[i] = int(np.sum(special.jn_zeros(orders[i], 1 + int(j[i] / np.pi) + 1) < j[i] - 1e-9)) + 1
    norm = np.where(orders == 0, 1.0 / np.sqrt(np.pi), np.sqrt(2.0 / np.pi)) / np.abs(special.jv(orders + 1, j))
    return SpectralBasis(
        domain=domain,
        lam=1.0 / j**2,
        index=np.stack([orders, parities, zero_rank], axis=1),
        norm=norm,
        wavenumber=j,
    )


def weyl_ratio(basis: SpectralBasis, k: int) -> float:
    """``lambda_k * k`` for the 1-based index ``k``."""
    if int(k) != k or k < 1 or k > basis.N:
        raise IndexOutOfRange(f"k must lie in 1..{basis.N}, got {k!r}")
    return float(basis.lam[int(k) - 1] * k)


def weyl_plateau(basis: SpectralBasis, lower_fraction: float = 0.5) -> dict:
    """Summarise ``lambda_k * k`` over ``k in [lower_fraction*N, N]``.

    Both candidate limits are reported: ``4 pi / |domain|`` and the standard
    Weyl-count value ``|domain| / (4 pi)``.  Neither is asserted.
    """
    k = np.arange(1, basis.N + 1)
    ratio = basis.lam * k
    lo = max(int(np.floor(lower_fraction * basis.N)), 1)
    tail = ratio[lo - 1:]
    plateau = float(np.mean(tail))
    area = basis.domain.area
    candidates = {"inverse_area_4pi": 4 * np.pi / area, "area_over_4pi": area / (4 * np.pi)}
    distance = {name: abs(np.log(plateau / v)) for name, v in candidates.items()}
    return {
        "k_range": (lo, basis.N),
        "plateau": plateau,
        "relative_spread": float((tail.max() - tail.min()) / plateau),
        "candidates": candidates,
        "relative_gap": {name: float(plateau / v - 1) for name, v in candidates.items()},
        "closest": min(distance, key=distance.get),
    }


# ---------------------------------------------------------------------------
# Green functions
# ---------------------------------------------------------------------------


def green_halfplane(w, z) -> np.ndarray:
    """``log |(w - conj z) / (w - z)|`` for points of the upper half-plane."""
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if np.any(w.imag <= 0) or np.any(z.imag <= 0):
        raise OutsideDomain("half-plane Green function needs Im > 0")
    gap = np.abs(w - z)
    scale = np.maximum(1.0, np.maximum(np.abs(w), np.abs(z)))
    if np.any(gap <= _COINCIDENCE_TOL * scale):
        raise CoincidentPoints("Green function is singular on the diagonal")
    out = np.log(np.abs(w - np.conj(z)) / gap)
    return out if out.ndim else float(out)


def green(domain: DomainSpec, basis: Optional[SpectralBasis], x, y) -> np.ndarray:
    """Dirichlet Green function, zero whenever a point lies outside the domain.

    Conformal domains use the half-plane formula through their map; rectangle
    and disk domains use the truncated eigen-series
    ``2 pi sum_k lambda_k e_k(x) e_k(y)``.
    """
    x, y = np.broadcast_arrays(as_points(x), as_points(y))
    shape = x.shape[:-1]
    xf, yf = x.reshape(-1, 2), y.reshape(-1, 2)
    inside = domain.contains(xf) & domain.contains(yf)
    out = np.zeros(xf.shape[0])
    if inside.any():
        xi, yi = xf[inside], yf[inside]
        if np.any(np.hypot(*(xi - yi).T) <= _COINCIDENCE_TOL):
            raise CoincidentPoints("Green function is singular on the diagonal")
        if domain.kind == "conformal":
            out[inside] = green_halfplane(domain.cmap(xi), domain.cmap(yi))
        else:
            if basis is None:
                raise MissingBasis("spectral domains need a SpectralBasis for Green evaluation")
            out[inside] = TWO_PI * np.einsum("k,kp,kp->p", basis.lam, basis(xi), basis(yi))
    out = out.reshape(shape)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Mollifiers
# ---------------------------------------------------------------------------

_GL_FINE = np.polynomial.legendre.leggauss(200)


@dataclass(frozen=True)
class Mollifier:
    """Radial bump ``c * exp(-sharpness / (1 - |z|^2))`` supported in the unit ball.

    ``n_radial`` x ``n_angular`` is the polar Gauss-Legendre rule used for
    brute-force convolutions over the ball.
    """

    sharpness: float = 1.0
    n_radial: int = 16
    n_angular: int = 16
    name: str = "standard"
    const: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.sharpness <= 0:
            raise ValueError("sharpness must be positive")
        r, w = self._fine_radial()
        object.__setattr__(self, "const", 1.0 / (TWO_PI * np.sum(w * self.profile(r) * r)))

    @staticmethod
    def _fine_radial():
        x, w = _GL_FINE
        return 0.5 * (x + 1.0), 0.5 * w

    def profile(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        inside = r < 1.0
        out = np.zeros_like(r)
        out[inside] = np.exp(-self.sharpness / (1.0 - r[inside] ** 2))
        return out

    def density(self, z) -> np.ndarray:
        pts = as_points(z)
        return self.const * self.profile(np.hypot(pts[..., 0], pts[..., 1]))

    def hat(self, s) -> np.ndarray:
        """Radial Fourier transform ``int eta(z) exp(i s.z) dz`` as a function of ``|s|``."""
        s = np.asarray(s, dtype=float)
        r, w = self._fine_radial()
        vals = special.j0(np.multiply.outer(s, r)) @ (w * self.profile(r) * r)
        return TWO_PI * self.const * vals

    def ball_rule(self):
        """Nodes in the unit ball and weights ``eta(node) dA``; weights sum to about 1."""
        x, w = np.polynomial.legendre.leggauss(self.n_radial)
        r, wr = 0.5 * (x + 1.0), 0.5 * w
        th = TWO_PI * np.arange(self.n_angular) / self.n_angular
        R, TH = np.meshgrid(r, th, indexing="ij")
        nodes = np.stack([R * np.cos(TH), R * np.sin(TH)], axis=-1).reshape(-1, 2)
        weights = (self.const * self.profile(R) * R * wr[:, None] * (TWO_PI / self.n_angular)).ravel()
        return nodes, weights

    def integral(self) -> float:
        return float(np.sum(self.ball_rule()[1]))


STANDARD_MOLLIFIER = Mollifier()
SHARP_MOLLIFIER = Mollifier(sharpness=2.0, name="sharp")


def mollifier_multipliers(basis: SpectralBasis, eps: float, mollifier: Mollifier = STANDARD_MOLLIFIER) -> np.ndarray:
    """Per-mode factors ``m_k`` with ``(e_k * eta_eps)(x) = m_k e_k(x)`` on the shrunken domain.

    Each ``e_k`` solves a Helmholtz equation, so its average against a radial
    kernel over a ball inside the domain is the radial Fourier transform of the
    kernel at the mode's wavenumber times the centre value.
    """
    return mollifier.hat(eps * basis.wavenumber)


def mollified_eigenfunctions(basis, x, eps, mollifier: Mollifier = STANDARD_MOLLIFIER) -> np.ndarray:
    pts = as_points(x)
    mult = mollifier_multipliers(basis, eps, mollifier)
    return mult.reshape((-1,) + (1,) * (pts.ndim - 1)) * basis(pts)


def mollified_eigenfunctions_quadrature(basis, x, eps, mollifier: Mollifier = STANDARD_MOLLIFIER) -> np.ndarray:
    """Brute-force polar quadrature of ``e_k * eta_eps`` at the given points."""
    pts = as_points(x)
    nodes, weights = mollifier.ball_rule()
    flat = pts.reshape(-1, 2)
    vals = basis(flat[:, None, :] - eps * nodes[None, :, :])  # x - z with z = eps*u; eta radial
    out = vals @ weights
    return out.reshape((basis.N,) + pts.shape[:-1])


def _check_shrunken(domain, pts, eps, label):
    if not (0 < eps <= 1):
        raise ParameterOutOfRange(f"{label} must lie in (0, 1], got {eps!r}")
    if not np.all(domain.in_shrunken(pts, eps)):
        raise OutsideShrunkenDomain(f"point outside the shrunken domain for {label}={eps}")


def mollified_green(
    domain: DomainSpec,
    basis: Optional[SpectralBasis],
    eps: float,
    eps2: float,
    x,
    y,
    mollifier: Mollifier = STANDARD_MOLLIFIER,
    method: str = "spectral",
) -> np.ndarray:
    """Green function convolved with ``eta_eps`` in ``x`` and ``eta_eps2`` in ``y``.

    ``method="spectral"`` sums ``2 pi lambda_k m_k(eps) m_k(eps2) e_k(x) e_k(y)``;
    ``method="quadrature"`` integrates the Green kernel over both mollifier
    supports with the mollifier's polar rule (truncated series for spectral
    domains, closed form for conformal ones).
    """
    x, y = np.broadcast_arrays(as_points(x), as_points(y))
    _check_shrunken(domain, x, eps, "eps")
    _check_shrunken(domain, y, eps2, "eps2")
    shape = x.shape[:-1]
    xf, yf = x.reshape(-1, 2), y.reshape(-1, 2)
    if method == "spectral":
        if basis is None:
            raise MissingBasis("spectral route needs a SpectralBasis")
        ex = mollified_eigenfunctions(basis, xf, eps, mollifier)
        ey = mollified_eigenfunctions(basis, yf, eps2, mollifier)
        out = TWO_PI * np.einsum("k,kp,kp->p", basis.lam, ex, ey)
    elif method == "quadrature":
        if basis is not None:
            ex = mollified_eigenfunctions_quadrature(basis, xf, eps, mollifier)
            ey = mollified_eigenfunctions_quadrature(basis, yf, eps2, mollifier)
            out = TWO_PI * np.einsum("k,kp,kp->p", basis.lam, ex, ey)
        elif domain.kind == "conformal":
            nodes, weights = mollifier.ball_rule()
            out = np.empty(xf.shape[0])
            for i, (xp, yp) in enumerate(zip(xf, yf)):
                if np.hypot(*(xp - yp)) <= eps + eps2:
                    raise CoincidentPoints("closed-form quadrature needs disjoint mollifier supports")
                z1 = domain.cmap(xp - eps * nodes)
                z2 = domain.cmap(yp - eps2 * nodes)
                out[i] = weights @ green_halfplane(z1[:, None], z2[None, :]) @ weights
        else:
            raise MissingBasis("spectral domains need a SpectralBasis")
    else:
        raise ValueError(f"unknown method {method!r}")
    out = out.reshape(shape)
    return out if out.ndim else float(out)
