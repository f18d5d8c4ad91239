"""Truncated Karhunen-Loeve Gaussian free fields and mollified-field caches."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import InvalidTruncation, OutsideDomain, ParameterOutOfRange, PointNotCached
from .montecarlo import rng
from .spectral import (
    STANDARD_MOLLIFIER,
    TWO_PI,
    Mollifier,
    SpectralBasis,
    as_points,
    mollified_eigenfunctions,
    mollified_eigenfunctions_quadrature,
    mollifier_multipliers,
)


@dataclass(frozen=True)
class ModeCoefficients:
    """Standard normal KL coordinates (the time-1 Brownian values) of one field."""

    values: np.ndarray
    seed: Optional[int] = None

    @property
    def N(self) -> int:
        return self.values.shape[-1]


def sample_modes(N: int, seed: int) -> ModeCoefficients:
    if int(N) != N or N < 1:
        raise InvalidTruncation(f"N must be a positive integer, got {N!r}")
    return ModeCoefficients(rng(seed).standard_normal(int(N)), seed=int(seed))


def _values(modes) -> np.ndarray:
    return modes.values if isinstance(modes, ModeCoefficients) else np.asarray(modes, dtype=float)


def _check_N(basis_N: int, xi: np.ndarray) -> None:
    if xi.shape[-1] != basis_N:
        raise InvalidTruncation(f"mode vector has length {xi.shape[-1]}, basis has {basis_N}")


def field_value(basis: SpectralBasis, modes, x) -> np.ndarray:
    """``sum_k sqrt(2 pi lambda_k) xi_k e_k(x)``; modes may carry leading sample axes."""
    xi = _values(modes)
    _check_N(basis.N, xi)
    pts = as_points(x)
    if not np.all(basis.domain.contains(pts)):
        raise OutsideDomain("field evaluation point outside the domain")
    e = basis(pts.reshape(-1, 2))
    out = (xi * np.sqrt(TWO_PI * basis.lam)) @ e
    out = out.reshape(xi.shape[:-1] + pts.shape[:-1])
    return out if out.ndim else float(out)


def midpoint_grid(domain, n: int):
    """Tensor midpoint grid of ``n x n`` cells over the domain's bounding box."""
    x0, x1, y0, y1 = domain.bbox
    hx, hy = (x1 - x0) / n, (y1 - y0) / n
    xs = x0 + hx * (np.arange(n) + 0.5)
    ys = y0 + hy * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1), hx * hy, max(hx, hy)


@dataclass(frozen=True, eq=False)
class MollifiedEigenCache:
    """Mollified eigenfunctions on the grid nodes inside the shrunken domain.

    ``table[k, i] = (e_k * eta_eps)(points[i])`` and
    ``variance[i] = sum_k 2 pi lambda_k table[k, i]**2`` (matched truncation).
    ``support`` is ``(center, radius)`` when the nodes were restricted to a ball.
    """

    eps: float
    grid_n: int
    spacing: float
    points: np.ndarray
    weights: np.ndarray
    table: np.ndarray
    variance: np.ndarray
    lam: np.ndarray
    multipliers: np.ndarray
    grad_bound: np.ndarray
    mollifier_name: str = "standard"
    support: Optional[tuple] = None

    @property
    def N(self) -> int:
        return self.table.shape[0]

    @property
    def P(self) -> int:
        return self.points.shape[0]

    @cached_property
    def phi(self) -> np.ndarray:
        """``sqrt(2 pi lambda_k) * table``: maps mode vectors to mollified field values."""
        return np.sqrt(TWO_PI * self.lam)[:, None] * self.table

    @cached_property
    def green_matrix(self) -> np.ndarray:
        """Matched-truncation mollified Green function between all node pairs."""
        return self.phi.T @ self.phi

    def field(self, modes) -> np.ndarray:
        xi = _values(modes)
        _check_N(self.N, xi)
        return xi @ self.phi

    def index_of(self, x) -> np.ndarray:
        pts = as_points(x).reshape(-1, 2)
        d = np.abs(self.points[None, :, :] - pts[:, None, :]).max(axis=-1)
        idx = d.argmin(axis=1)
        if np.any(d[np.arange(len(pts)), idx] > 1e-9):
            raise PointNotCached("evaluation point is not a cache grid node")
        return idx

    def lipschitz_bound(self, modes) -> np.ndarray:
        """Per-sample bound on ``|grad W^eps|`` from the per-mode gradient bounds."""
        xi = _values(modes)
        return np.abs(xi) @ (np.sqrt(TWO_PI * self.lam) * np.abs(self.multipliers) * self.grad_bound)

    def key(self) -> dict:
        return {"eps": self.eps, "N": self.N, "grid_n": self.grid_n, "mollifier": self.mollifier_name,
                "support": None if self.support is None else [list(map(float, self.support[0])), float(self.support[1])]}

    def save(self, path) -> None:
        sup_c, sup_r = (np.full(2, np.nan), np.nan) if self.support is None else (np.asarray(self.support[0]), self.support[1])
        np.savez(
            path,
            eps=self.eps, grid_n=self.grid_n, spacing=self.spacing, points=self.points, weights=self.weights,
            table=self.table, variance=self.variance, lam=self.lam, multipliers=self.multipliers,
            grad_bound=self.grad_bound, mollifier_name=self.mollifier_name, support_center=sup_c, support_radius=sup_r,
        )

    @classmethod
    def load(cls, path, expect: Optional[dict] = None) -> "MollifiedEigenCache":
        with np.load(path, allow_pickle=False) as z:
            r = float(z["support_radius"])
            cache = cls(
                eps=float(z["eps"]), grid_n=int(z["grid_n"]), spacing=float(z["spacing"]),
                points=z["points"], weights=z["weights"], table=z["table"], variance=z["variance"],
                lam=z["lam"], multipliers=z["multipliers"], grad_bound=z["grad_bound"],
                mollifier_name=str(z["mollifier_name"]),
                support=None if np.isnan(r) else (tuple(z["support_center"]), r),
            )
        if expect is not None:
            key = cache.key()
            for k, v in expect.items():
                if key.get(k) != v:
                    raise ValueError(f"cache key mismatch for {k}: stored {key.get(k)!r}, expected {v!r}")
        return cache


def build_cache(
    basis: SpectralBasis,
    eps: float,
    grid_n: int = 64,
    mollifier: Mollifier = STANDARD_MOLLIFIER,
    support: Optional[tuple] = None,
    method: str = "multiplier",
) -> MollifiedEigenCache:
    """Tabulate mollified eigenfunctions on the midpoint grid restricted to the shrunken domain.

    ``support=(center, radius)`` keeps only nodes in that closed ball.
    ``method="quadrature"`` convolves by brute force with the mollifier's polar
    rule instead of using the exact per-mode multipliers.
    """
    if not (0 < eps <= 1):
        raise ParameterOutOfRange(f"eps must lie in (0, 1], got {eps!r}")
    pts, area, h = midpoint_grid(basis.domain, grid_n)
    keep = basis.domain.in_shrunken(pts, eps)
    if support is not None:
        c, r = np.asarray(support[0], dtype=float), float(support[1])
        keep &= np.hypot(*(pts - c).T) <= r
        support = (tuple(map(float, c)), r)
    pts = pts[keep]
    if method == "multiplier":
        table = mollified_eigenfunctions(basis, pts, eps, mollifier)
    elif method == "quadrature":
        table = mollified_eigenfunctions_quadrature(basis, pts, eps, mollifier)
    else:
        raise ValueError(f"unknown method {method!r}")
    variance = np.einsum("k,kp->p", TWO_PI * basis.lam, table**2)
    return MollifiedEigenCache(
        eps=float(eps),
        grid_n=int(grid_n),
        spacing=h,
        points=pts,
        weights=np.full(pts.shape[0], area),
        table=table,
        variance=variance,
        lam=basis.lam.copy(),
        multipliers=mollifier_multipliers(basis, eps, mollifier),
        grad_bound=basis.gradient_bound(),
        mollifier_name=mollifier.name,
        support=support,
    )


def mollified_field_value(basis: SpectralBasis, cache: MollifiedEigenCache, modes, x) -> np.ndarray:
    """Mollified field at cache nodes; linear in the modes."""
    if basis.N != cache.N:
        raise InvalidTruncation("cache and basis truncations differ")
    idx = cache.index_of(x)
    out = _values(modes) @ cache.phi[:, idx]
    out = out.reshape(_values(modes).shape[:-1] + as_points(x).shape[:-1])
    return out if out.ndim else float(out)


def bridge_split(modes_at_1, t: float, seed: int):
    """Split ``B_1 = B_t + sqrt(1-t) zeta`` with ``B_t = sqrt(t) xi``.

    ``modes_at_1`` supplies ``xi``; ``zeta`` is drawn fresh from ``seed``.
    Returns ``(B_t, ModeCoefficients(sqrt(1-t) zeta))``.
    """
    if not (0.0 <= t <= 1.0):
        raise ParameterOutOfRange(f"t must lie in [0, 1], got {t!r}")
    xi = _values(modes_at_1)
    mean = np.sqrt(t) * xi
    fresh = np.sqrt(1.0 - t) * rng(seed).standard_normal(xi.shape)
    return mean, ModeCoefficients(fresh, seed=int(seed))
