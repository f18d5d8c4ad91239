"""Wick-ordered trigonometric observables tested against densities."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import LinearNDInterpolator

from .errors import BetaOutOfRegime, GridCoverage, InvalidTruncation, NegativeVariance
from .gff import MollifiedEigenCache, _values
from .spectral import ConformalMap, as_points

# ---------------------------------------------------------------------------
# Test functions, densities and angles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported ``rho`` with enclosing ball ``(center, radius)`` and ``|rho| <= bound``."""

    __test__ = False  # keep pytest from collecting this class

    fn: Callable[[np.ndarray], np.ndarray]
    bound: float
    center: tuple
    radius: float
    name: str = "custom"

    def __call__(self, x) -> np.ndarray:
        pts = as_points(x)
        out = np.asarray(self.fn(pts), dtype=float)
        outside = np.hypot(pts[..., 0] - self.center[0], pts[..., 1] - self.center[1]) > self.radius
        return np.where(outside, 0.0, out)

    @classmethod
    def smooth_bump(cls, center=(0.5, 0.5), radius=0.35) -> "TestFunction":
        c = np.asarray(center, dtype=float)

        def fn(p):
            s2 = ((p - c) ** 2).sum(-1) / radius**2
            out = np.zeros(p.shape[:-1])
            m = s2 < 1
            out[m] = np.exp(1.0 - 1.0 / (1.0 - s2[m]))
            return out

        return cls(fn, 1.0, tuple(c), float(radius), "smooth_bump")

    @classmethod
    def sine_window(cls, center=(0.5, 0.5), half_width=0.3) -> "TestFunction":
        """``cos(pi dx / 2w) cos(pi dy / 2w)`` on the square of half-width ``w``."""
        c = np.asarray(center, dtype=float)
        w = float(half_width)

        def fn(p):
            d = np.abs(p - c)
            inside = (d < w).all(-1)
            return np.where(inside, np.cos(np.pi * d[..., 0] / (2 * w)) * np.cos(np.pi * d[..., 1] / (2 * w)), 0.0)

        return cls(fn, 1.0, tuple(c), w * np.sqrt(2.0), "sine_window")

    @classmethod
    def constant_on_support(cls, center=(0.5, 0.5), radius=0.3, value=1.0) -> "TestFunction":
        c = np.asarray(center, dtype=float)
        return cls(lambda p: np.full(p.shape[:-1], float(value)), abs(float(value)), tuple(c), float(radius),
                   "constant_on_support")

    @classmethod
    def from_csv(cls, path) -> "TestFunction":
        """Grid table with header ``x,y,value``; linear interpolation, zero off the hull."""
        x, y, v = _read_xyv(path)
        interp = LinearNDInterpolator(np.column_stack([x, y]), v, fill_value=0.0)
        pts = np.column_stack([x, y])[v != 0] if np.any(v != 0) else np.column_stack([x, y])
        c = pts.mean(axis=0)
        r = float(np.hypot(*(np.column_stack([x, y]) - c).T).max())
        return cls(lambda p: interp(p[..., 0], p[..., 1]), float(np.abs(v).max()), tuple(c), r, f"csv:{path}")


@dataclass(frozen=True)
class DensityWeight:
    """Bounded density ``psi`` with ``|psi| <= bound`` on the evaluation region."""

    fn: Callable[[np.ndarray], np.ndarray]
    bound: float
    name: str = "custom"

    def __call__(self, x) -> np.ndarray:
        pts = as_points(x)
        return np.broadcast_to(np.asarray(self.fn(pts), dtype=float), pts.shape[:-1])

    @classmethod
    def one(cls) -> "DensityWeight":
        return cls(lambda p: np.ones(p.shape[:-1]), 1.0, "one")

    @classmethod
    def conformal_weight(cls, cmap: ConformalMap, radius: float) -> "DensityWeight":
        """``(|phi'| / (2 Im phi))^(1/4)``; ``bound`` is its maximum over ``|x| <= radius``.

        The bound is computed for the disk map, which is radial in modulus.
        """
        def fn(p):
            z = p[..., 0] + 1j * p[..., 1]
            return (np.abs(cmap.derivative(z)) / (2.0 * cmap.forward(z).imag)) ** 0.25

        ring = radius * np.exp(2j * np.pi * np.arange(256) / 256)
        bound = float(fn(np.stack([ring.real, ring.imag], -1)).max())
        return cls(fn, bound, f"conformal:{cmap.name}")

    @classmethod
    def xor_disk(cls, radius: float = 0.9) -> "DensityWeight":
        return cls.conformal_weight(ConformalMap.disk_to_halfplane(), radius)

    @classmethod
    def from_csv(cls, path) -> "DensityWeight":
        x, y, v = _read_xyv(path)
        interp = LinearNDInterpolator(np.column_stack([x, y]), v, fill_value=0.0)
        return cls(lambda p: interp(p[..., 0], p[..., 1]), float(np.abs(v).max()), f"csv:{path}")


@dataclass(frozen=True)
class Angle:
    """Smooth real angle field ``theta`` with sup norm ``sup``."""

    fn: Callable[[np.ndarray], np.ndarray]
    sup: float
    name: str = "custom"

    def __call__(self, x) -> np.ndarray:
        pts = as_points(x)
        return np.broadcast_to(np.asarray(self.fn(pts), dtype=float), pts.shape[:-1])

    @classmethod
    def zero(cls) -> "Angle":
        return cls(lambda p: np.zeros(p.shape[:-1]), 0.0, "zero")

    @classmethod
    def gaussian_bump(cls, amplitude=1.0, center=(0.5, 0.5), width=0.15) -> "Angle":
        c = np.asarray(center, dtype=float)
        return cls(lambda p: amplitude * np.exp(-((p - c) ** 2).sum(-1) / (2 * width**2)), abs(float(amplitude)),
                   "gaussian_bump")

    def scaled(self, factor: float) -> "Angle":
        return Angle(lambda p: factor * self.fn(p), abs(factor) * self.sup, f"{factor}*{self.name}")


def _read_xyv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.DictReader(row for row in fh if not row.startswith("#"))]
    return (np.array([float(r[k]) for r in rows]) for k in ("x", "y", "value"))


# ---------------------------------------------------------------------------
# Pointwise Wick factors
# ---------------------------------------------------------------------------


def _check_variance(v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise NegativeVariance("variance must be nonnegative")
    return v


def wick_cos(w, v, beta: float):
    """``exp(beta^2 v / 2) cos(beta w)``."""
    v = _check_variance(v)
    return np.exp(0.5 * beta**2 * v) * np.cos(beta * np.asarray(w, dtype=float))


def wick_sin(w, v, beta: float):
    """``exp(beta^2 v / 2) sin(beta w)``."""
    v = _check_variance(v)
    return np.exp(0.5 * beta**2 * v) * np.sin(beta * np.asarray(w, dtype=float))


def check_beta(beta: float) -> None:
    if not beta**2 < 2.0:
        raise BetaOutOfRegime(f"beta^2 = {beta**2:g} must be < 2 (finite ultraviolet regime)")


# ---------------------------------------------------------------------------
# Tested integrals over the cache grid
# ---------------------------------------------------------------------------


def check_coverage(cache: MollifiedEigenCache, rho: TestFunction) -> None:
    if cache.support is None:
        return
    c, r = np.asarray(cache.support[0]), cache.support[1]
    if np.hypot(*(np.asarray(rho.center) - c)) + rho.radius > r + 1e-12:
        raise GridCoverage("cache nodes do not cover the support of rho")


def node_weights(cache: MollifiedEigenCache, rho: TestFunction, psi: Optional[DensityWeight] = None) -> np.ndarray:
    """Quadrature weights ``w_i rho(x_i) psi(x_i)`` on the cache nodes."""
    check_coverage(cache, rho)
    a = cache.weights * rho(cache.points)
    if psi is not None:
        a = a * psi(cache.points)
    return a


def _prepare(basis, cache, modes, beta):
    check_beta(beta)
    xi = _values(modes)
    if basis is not None and basis.N != cache.N:
        raise InvalidTruncation("cache and basis truncations differ")
    return cache.field(xi)


def _scalar(x):
    return x if np.ndim(x) else x.item()


def tested_cosine(basis, cache, modes, rho, psi, beta):
    """``sum_i w_i [[cos(beta W^eps(x_i))]] rho psi`` over shrunken-domain nodes."""
    W = _prepare(basis, cache, modes, beta)
    a = node_weights(cache, rho, psi) * np.exp(0.5 * beta**2 * cache.variance)
    return _scalar(np.cos(beta * W) @ a)


def tested_sine(basis, cache, modes, rho, psi, beta):
    W = _prepare(basis, cache, modes, beta)
    a = node_weights(cache, rho, psi) * np.exp(0.5 * beta**2 * cache.variance)
    return _scalar(np.sin(beta * W) @ a)


def chaos_functional(basis, cache, modes, rho, psi, beta):
    """``sum_i w_i exp(i beta W^eps + beta^2 G^eps / 2) rho psi``."""
    W = _prepare(basis, cache, modes, beta)
    a = node_weights(cache, rho, psi) * np.exp(0.5 * beta**2 * cache.variance)
    return _scalar(np.exp(1j * beta * W) @ a)


def f_rho_theta(basis, cache, modes, rho, theta: Angle, beta):
    """``sum_i w_i exp(beta^2 G/2) sin(beta W + theta/2) sin(theta/2) rho``."""
    W = _prepare(basis, cache, modes, beta)
    th = theta(cache.points)
    a = node_weights(cache, rho) * np.exp(0.5 * beta**2 * cache.variance) * np.sin(th / 2)
    return _scalar(np.sin(beta * W + th / 2) @ a)


def f_rho_theta_decomposed(basis, cache, modes, rho, theta: Angle, beta):
    """The same functional as half of a sine part tested on ``sin theta`` plus a cosine part on ``1 - cos theta``."""
    W = _prepare(basis, cache, modes, beta)
    th = theta(cache.points)
    a = node_weights(cache, rho) * np.exp(0.5 * beta**2 * cache.variance)
    return _scalar(0.5 * (np.sin(beta * W) @ (a * np.sin(th)) + np.cos(beta * W) @ (a * (1 - np.cos(th)))))


def deterministic_integral(cache: MollifiedEigenCache, rho, psi=None) -> float:
    """``int_{shrunken domain} rho psi`` on the cache grid."""
    return float(node_weights(cache, rho, psi).sum())


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundsLedger:
    """Uniform bounds: ``|xi_eps| <= b_rho b_psi C_beta`` on every sample.

    ``C_beta`` integrates ``exp(beta^2 G^eps / 2)`` over the cache nodes;
    ``C_majorant`` integrates ``exp(G^eps)``, valid for every ``beta^2 < 2``.
    """

    b_rho: float
    b_psi: float
    b_F: float
    C_beta: float
    C_majorant: float
    beta: float
    eps: float

    @property
    def xi_bound(self) -> float:
        return self.b_rho * self.b_psi * self.C_beta

    def with_b_F(self, b_F: float) -> "BoundsLedger":
        return BoundsLedger(self.b_rho, self.b_psi, float(b_F), self.C_beta, self.C_majorant, self.beta, self.eps)


def bounds_ledger(cache: MollifiedEigenCache, rho: TestFunction, psi: Optional[DensityWeight], beta: float,
                  b_F: float = 0.0) -> BoundsLedger:
    check_beta(beta)
    check_coverage(cache, rho)
    return BoundsLedger(
        b_rho=rho.bound,
        b_psi=1.0 if psi is None else psi.bound,
        b_F=float(b_F),
        C_beta=float(cache.weights @ np.exp(0.5 * beta**2 * cache.variance)),
        C_majorant=float(cache.weights @ np.exp(cache.variance)),
        beta=float(beta),
        eps=cache.eps,
    )


def mollifier_gap(basis, rho: TestFunction, psi: Optional[DensityWeight], beta: float, eps_list, samples: int,
                  seed: int, mollifiers, grid_n: int = 64, threads: int = 1) -> dict:
    """Coupled comparison of the tested cosine under two mollifier profiles.

    Under matched truncation both means equal the deterministic integral, so
    the informative statistic is the RMS per-sample gap on common modes.
    """
    from .gff import build_cache
    from .montecarlo import map_mode_blocks

    m1, m2 = mollifiers
    rows = []
    for eps in eps_list:
        c1 = build_cache(basis, eps, grid_n, m1, support=(rho.center, rho.radius))
        c2 = build_cache(basis, eps, grid_n, m2, support=(rho.center, rho.radius))

        def both(z):
            return np.column_stack([tested_cosine(basis, c1, z, rho, psi, beta),
                                    tested_cosine(basis, c2, z, rho, psi, beta)])

        v = map_mode_blocks(both, basis.N, samples, seed, threads=threads)
        d = v[:, 0] - v[:, 1]
        rows.append({
            "eps": float(eps),
            "mean_1": float(v[:, 0].mean()), "stderr_1": float(v[:, 0].std(ddof=1) / np.sqrt(samples)),
            "mean_2": float(v[:, 1].mean()), "stderr_2": float(v[:, 1].std(ddof=1) / np.sqrt(samples)),
            "mean_gap": float(abs(d.mean())), "rms_gap": float(np.sqrt(np.mean(d**2))),
        })
    gaps = [r["rms_gap"] for r in rows]
    means_ok = all(r["mean_gap"] <= 3 * np.hypot(r["stderr_1"], r["stderr_2"]) + 1e-12 for r in rows)
    return {"rows": rows, "shrinking": all(b < a for a, b in zip(gaps, gaps[1:])), "means_agree": means_ok}
