"""Finite-mode quadratic BSDE ``dY = -(alpha/2)|zeta|^2 dt + zeta . dB``.

The terminal ``Y_1 = xi(B_1)`` is a bounded functional of the ``N`` mode
Brownian motions at time 1.  Cole-Hopf gives the exact solution
``Y_t = alpha^-1 log E[exp(alpha xi) | B_t]``; a backward least-squares
scheme gives an independent numerical one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import DegenerateBump, ParameterOutOfRange, SingularRegression
from .gff import MollifiedEigenCache, build_cache
from .montecarlo import MCEstimate, map_mode_blocks, mean_estimate, normal_block, sample_mode_matrix
from .spectral import STANDARD_MOLLIFIER, TWO_PI, SpectralBasis
from .wick import BoundsLedger, DensityWeight, TestFunction, bounds_ledger, check_beta, node_weights

_NESTED_CHUNK = 2_000_000  # elements per generic nested evaluation chunk


# ---------------------------------------------------------------------------
# Terminal functionals
# ---------------------------------------------------------------------------


class TerminalFunctional:
    """Bounded functional of the time-1 mode vector.

    Subclasses implement :meth:`evaluate`; :meth:`nested` and :meth:`features`
    have generic fallbacks that faster subclasses override.
    """

    kind = "custom"

    def __init__(self, N: int, bound: float):
        self.N = int(N)
        self.bound = float(bound)

    def evaluate(self, B: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, B):
        B = np.asarray(B, dtype=float)
        out = self.evaluate(B.reshape(-1, self.N))
        return out.reshape(B.shape[:-1]) if B.ndim > 1 else float(out[0])

    def nested(self, b: np.ndarray, z: np.ndarray, scale: float) -> np.ndarray:
        """``evaluate(b_i + scale * z_j)`` as an ``(len(b), len(z))`` matrix."""
        rows = max(1, _NESTED_CHUNK // max(1, z.shape[0] * self.N))
        out = np.empty((b.shape[0], z.shape[0]))
        for s in range(0, b.shape[0], rows):
            blk = b[s:s + rows, None, :] + scale * z[None, :, :]
            out[s:s + rows] = self.evaluate(blk.reshape(-1, self.N)).reshape(blk.shape[:2])
        return out

    def features(self, b: np.ndarray, t: float):
        """Regression features at time ``t``: a scalar summary and a per-mode gradient.

        The fallback evaluates the terminal at the bridge mean ``b`` with a
        central-difference gradient.
        """
        h = 1e-5
        val = self.evaluate(b)
        g = np.empty_like(b)
        for k in range(self.N):
            e = np.zeros(self.N)
            e[k] = h
            g[:, k] = (self.evaluate(b + e) - self.evaluate(b - e)) / (2 * h)
        return val, g

    def check(self, values: np.ndarray) -> None:
        if np.any(np.abs(values) > self.bound * (1 + 1e-12) + 1e-12):
            raise ValueError(f"terminal exceeded its declared bound {self.bound}")

    def __neg__(self) -> "TerminalFunctional":
        return NegatedTerminal(self)


class ConstantTerminal(TerminalFunctional):
    kind = "constant"

    def __init__(self, value: float, N: int):
        super().__init__(N, abs(value))
        self.value = float(value)

    def evaluate(self, B):
        return np.full(B.shape[0], self.value)

    def nested(self, b, z, scale):
        return np.full((b.shape[0], z.shape[0]), self.value)

    def features(self, b, t):
        return np.full(b.shape[0], self.value), np.zeros_like(b)


class ProjectedTerminal(TerminalFunctional):
    """``link(B @ L)`` for a fixed ``(N, q)`` projection ``L``.

    ``link`` acts on the trailing axis of length ``q``; ``link_grad`` (optional)
    returns its gradient with the same shape.
    """

    def __init__(self, L, link: Callable, bound: float, link_grad: Optional[Callable] = None, name: str = "custom"):
        L = np.asarray(L, dtype=float)
        L = L[:, None] if L.ndim == 1 else L
        super().__init__(L.shape[0], bound)
        self.L, self.link, self.link_grad, self.name = L, link, link_grad, name

    def evaluate(self, B):
        return np.asarray(self.link(B @ self.L), dtype=float)

    def nested(self, b, z, scale):
        return np.asarray(self.link((b @ self.L)[:, None, :] + scale * (z @ self.L)[None, :, :]), dtype=float)

    def features(self, b, t):
        if self.link_grad is None:
            return super().features(b, t)
        p = b @ self.L
        return self.evaluate(b), self.link_grad(p) @ self.L.T

    @classmethod
    def linear(cls, sigma: float, N: int, k: int = 0) -> "ProjectedTerminal":
        """``sigma * B^k`` (unbounded; engine sanity checks only)."""
        L = np.zeros(N)
        L[k] = 1.0
        return cls(L, lambda p: sigma * p[..., 0], np.inf, lambda p: np.full_like(p, sigma), f"linear{k}")


class WickCosineTerminal(TerminalFunctional):
    """``xi = sum_i w_i rho psi [[cos(beta W^eps(x_i))]]`` on a cache.

    Conditional means and their gradients are exact: given ``B_t = b`` the
    field at time 1 is Gaussian around ``b Phi`` with variance ``(1-t) G^eps``.
    """

    kind = "wick_cosine"

    def __init__(self, cache: MollifiedEigenCache, rho: TestFunction, psi: Optional[DensityWeight], beta: float):
        check_beta(beta)
        self.cache, self.rho, self.psi, self.beta = cache, rho, psi, float(beta)
        self.ledger = bounds_ledger(cache, rho, psi, beta)
        a = node_weights(cache, rho, psi)
        nz = a != 0
        self.phi = np.ascontiguousarray(cache.phi[:, nz])
        self.var = cache.variance[nz]
        self.c = a[nz] * np.exp(0.5 * beta**2 * self.var)
        super().__init__(cache.N, self.ledger.xi_bound)

    def evaluate(self, B):
        return np.cos(self.beta * (B @ self.phi)) @ self.c

    def nested(self, b, z, scale):
        U = self.beta * (b @ self.phi)
        V = (self.beta * scale) * (z @ self.phi)
        return (np.cos(U) * self.c) @ np.cos(V).T - (np.sin(U) * self.c) @ np.sin(V).T

    def features(self, b, t):
        damp = self.c * np.exp(-0.5 * self.beta**2 * (1.0 - t) * self.var)
        U = self.beta * (b @ self.phi)
        mean = np.cos(U) @ damp
        grad = -self.beta * (np.sin(U) * damp) @ self.phi.T
        return mean, grad

    def gradient(self, B):
        return self.features(np.atleast_2d(B), 1.0)[1]


class ShiftedTerminal(TerminalFunctional):
    """``base + delta * F``."""

    kind = "shifted"

    def __init__(self, base: TerminalFunctional, delta: float, F: TerminalFunctional):
        super().__init__(base.N, base.bound + abs(delta) * F.bound)
        self.base, self.delta, self.F = base, float(delta), F

    def evaluate(self, B):
        return self.base.evaluate(B) + self.delta * self.F.evaluate(B)

    def nested(self, b, z, scale):
        return self.base.nested(b, z, scale) + self.delta * self.F.nested(b, z, scale)

    def features(self, b, t):
        v0, g0 = self.base.features(b, t)
        v1, g1 = self.F.features(b, t)
        return v0 + self.delta * v1, g0 + self.delta * g1


class NegatedTerminal(TerminalFunctional):
    kind = "negation"

    def __init__(self, base: TerminalFunctional):
        super().__init__(base.N, base.bound)
        self.base = base

    def evaluate(self, B):
        return -self.base.evaluate(B)

    def nested(self, b, z, scale):
        return -self.base.nested(b, z, scale)

    def features(self, b, t):
        v, g = self.base.features(b, t)
        return -v, -g

    def __neg__(self):
        return self.base


def catalog_functionals(basis: SpectralBasis, point=None, center=None, radius=0.2) -> dict:
    """Three bounded functionals of ``W_1``: a tanh point value, the cosine of the
    first mode, and a scaled arctan of a local field average."""
    dom = basis.domain
    point = dom.center if point is None else np.asarray(point, dtype=float)
    center = dom.center if center is None else np.asarray(center, dtype=float)
    s = np.sqrt(TWO_PI * basis.lam)
    L_point = s * basis(point)
    r, th = np.meshgrid(np.linspace(0, radius, 12)[1:], np.linspace(0, 2 * np.pi, 24, endpoint=False), indexing="ij")
    ring = center + np.stack([r * np.cos(th), r * np.sin(th)], -1).reshape(-1, 2)
    wts = r.ravel()
    L_mean = s * (basis(ring) @ (wts / wts.sum()))
    e1 = np.zeros(basis.N)
    e1[0] = 1.0
    return {
        "tanh_point": ProjectedTerminal(L_point, lambda p: np.tanh(p[..., 0]), 1.0,
                                        lambda p: 1 - np.tanh(p) ** 2, "tanh_point"),
        "cos_mode1": ProjectedTerminal(e1, lambda p: np.cos(p[..., 0]), 1.0, lambda p: -np.sin(p), "cos_mode1"),
        "atan_mean": ProjectedTerminal(L_mean, lambda p: (2 / np.pi) * np.arctan(p[..., 0]), 1.0,
                                       lambda p: (2 / np.pi) / (1 + p**2), "atan_mean"),
    }


# ---------------------------------------------------------------------------
# Cole-Hopf
# ---------------------------------------------------------------------------


def terminal_samples(terminal: TerminalFunctional, samples: int, seed: int, threads: int = 1, stream: int = 0) -> np.ndarray:
    vals = map_mode_blocks(terminal.evaluate, terminal.N, samples, seed, stream, threads)
    terminal.check(vals)
    return vals


def log_mean_exp(values: np.ndarray, alpha: float, axis: int = -1) -> np.ndarray:
    """``alpha^-1 log mean exp(alpha v)`` with the ``alpha -> 0`` limit ``mean(v)``."""
    if alpha == 0:
        return np.mean(values, axis=axis)
    v = np.asarray(values, dtype=float)
    m = np.mean(v, axis=axis, keepdims=True)
    u = alpha * (v - m)
    # centring at the mean keeps log1p/expm1 accurate for small alpha
    shift = np.max(u, axis=axis, keepdims=True)
    inner = np.exp(shift) * np.mean(np.expm1(u - shift), axis=axis, keepdims=True) + np.expm1(shift)
    out = m + np.log1p(inner) / alpha
    return np.squeeze(out, axis=axis)


def cole_hopf_estimate(values: np.ndarray, alpha: float) -> MCEstimate:
    """Delta-method error bar for ``alpha^-1 log mean exp(alpha v)``."""
    values = np.asarray(values, dtype=float)
    if alpha == 0:
        return mean_estimate(values)
    shift = values.max() if alpha > 0 else values.min()
    e = np.exp(alpha * (values - shift))
    m = e.mean()
    se = np.std(e, ddof=1) / np.sqrt(e.size) / (abs(alpha) * m) if e.size > 1 else float("inf")
    return MCEstimate(float(log_mean_exp(values, alpha)), float(se), e.size)


def cole_hopf_y0(terminal: TerminalFunctional, alpha: float, samples: int, seed: int, threads: int = 1) -> MCEstimate:
    if samples < 1:
        raise ParameterOutOfRange("samples must be >= 1")
    return cole_hopf_estimate(terminal_samples(terminal, samples, seed, threads), alpha)


def conditional_y(terminal: TerminalFunctional, alpha: float, t: float, b_t, inner_samples: int, seed: int,
                  stream: int = 1):
    """Nested Monte Carlo for ``Y_t`` given ``B_t = b_t`` (one row per state)."""
    if not (0.0 <= t <= 1.0):
        raise ParameterOutOfRange(f"t must lie in [0, 1], got {t!r}")
    b = np.atleast_2d(np.asarray(b_t, dtype=float))
    if t == 1.0:
        out = terminal.evaluate(b)
    else:
        z = sample_mode_matrix(terminal.N, inner_samples, seed, stream)
        out = log_mean_exp(terminal.nested(b, z, np.sqrt(1.0 - t)), alpha, axis=1)
    return out if np.ndim(b_t) > 1 else float(out[0])


def zeta_coefficients(terminal: TerminalFunctional, alpha: float, t: float, b_t, bump: float,
                      inner_samples: int, seed: int, stream: int = 1) -> np.ndarray:
    """Central differences of ``Y_t`` in each mode with common inner samples."""
    if not bump >= 1e-8:
        raise DegenerateBump(f"bump {bump!r} is below 1e-8")
    b = np.asarray(b_t, dtype=float)
    E = bump * np.eye(terminal.N)
    pts = np.concatenate([b + E, b - E])
    y = conditional_y(terminal, alpha, t, pts, inner_samples, seed, stream)
    return (y[: terminal.N] - y[terminal.N:]) / (2 * bump)


def zeta_weighted_gradient(terminal: WickCosineTerminal, alpha: float, t: float, b_t, inner_samples: int,
                           seed: int, stream: int = 1) -> np.ndarray:
    """``E[exp(alpha xi) grad xi] / E[exp(alpha xi)]`` on the same inner samples as :func:`zeta_coefficients`."""
    b = np.asarray(b_t, dtype=float)
    z = sample_mode_matrix(terminal.N, inner_samples, seed, stream)
    B1 = b + np.sqrt(1.0 - t) * z
    v = terminal.evaluate(B1)
    w = np.exp(alpha * (v - v.max()))
    return (w @ terminal.gradient(B1)) / w.sum()


def tower_check(terminal: TerminalFunctional, alpha: float, t: float, outer: int, inner: int, seed: int,
                reference: Optional[MCEstimate] = None, batch: int = 250, reference_samples: int = 100_000) -> dict:
    """Compare the outer mean of ``exp(alpha Y_t)`` with ``exp(alpha Y_0)``.

    Outer states are split into batches, each with its own inner sample set,
    so the batch means are independent.
    """
    n_batches = max(2, outer // batch)
    means = []
    for j in range(n_batches):
        bt = np.sqrt(t) * normal_block(seed, 10_000 + int(t * 1000), j, batch, terminal.N)
        y = conditional_y(terminal, alpha, t, bt, inner, seed, stream=20_000 + j)
        means.append(np.mean(np.exp(alpha * y)))
    means = np.array(means)
    est = MCEstimate(float(means.mean()), float(means.std(ddof=1) / np.sqrt(n_batches)), n_batches * batch)
    if reference is None:
        vals = terminal_samples(terminal, reference_samples, seed, stream=30_000)
        reference = mean_estimate(np.exp(alpha * vals))
    gap = abs(est.value - reference.value)
    tol = 3.0 * np.hypot(est.stderr, reference.stderr)
    return {"t": t, "outer_mean": est.value, "outer_stderr": est.stderr, "reference": reference.value,
            "reference_stderr": reference.stderr, "gap": gap, "tolerance": tol, "passed": bool(gap <= tol)}


# ---------------------------------------------------------------------------
# Regression solver
# ---------------------------------------------------------------------------


@dataclass
class BsdeSolution:
    """Paths of ``y`` (``(M+1, S)``) and ``zeta`` (``(M, S, N)``) on ``grid``."""

    grid: np.ndarray
    y: np.ndarray
    zeta: np.ndarray
    alpha: float
    driver_residual: np.ndarray
    paths: np.ndarray
    terminal_values: np.ndarray
    bound: float
    y0_stderr: float = 0.0
    lam: Optional[np.ndarray] = None
    summaries: Optional[np.ndarray] = None

    @property
    def y0(self) -> float:
        return float(self.y[0, 0])

    @property
    def residual_rms(self) -> float:
        return float(np.sqrt(np.mean(self.driver_residual**2)))

    def zeta_h_inverse(self, lam: Optional[np.ndarray] = None) -> np.ndarray:
        """``zeta_k / sqrt(2 pi lambda_k)``, the coordinates of ``Z`` in the eigenbasis."""
        lam = self.lam if lam is None else lam
        if lam is None:
            raise ValueError("eigenvalues needed for the H^-1 view")
        return self.zeta / np.sqrt(TWO_PI * lam).astype(self.zeta.dtype)


def value_design(b: np.ndarray, summary: np.ndarray, lead: int = 8) -> np.ndarray:
    """``[1, s, s^2, s^3]`` plus all monomials of degree <= 2 in the leading coordinates."""
    q = min(lead, b.shape[1])
    lb = b[:, :q]
    iu = np.triu_indices(q)
    quad = (lb[:, :, None] * lb[:, None, :])[:, iu[0], iu[1]]
    return np.column_stack([np.ones(b.shape[0]), summary, summary**2, summary**3, lb, quad])


def least_squares_fit(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Fitted values of ``y`` on ``X`` (first column the intercept).

    Constant non-intercept columns are dropped; a remaining rank deficiency
    raises :class:`SingularRegression`.
    """
    mu = X[:, 1:].mean(axis=0)
    sd = X[:, 1:].std(axis=0)
    live = sd > 1e-12 * (1.0 + np.abs(mu))
    Z = (X[:, 1:][:, live] - mu[live]) / sd[live]
    if Z.shape[1] == 0:
        return np.broadcast_to(y.mean(axis=0), y.shape).copy()
    if Z.shape[0] <= Z.shape[1] + 1:
        raise SingularRegression(f"{Z.shape[0]} samples for {Z.shape[1] + 1} regressors")
    D = np.column_stack([np.ones(Z.shape[0]), Z])
    coef, _, rank, sv = np.linalg.lstsq(D, y, rcond=None)
    if rank < D.shape[1] or sv[-1] < 1e-10 * sv[0]:
        raise SingularRegression(f"design matrix rank {rank} < {D.shape[1]}")
    return D @ coef


def simulate_paths(N: int, grid: np.ndarray, samples: int, seed: int, threads: int = 1) -> np.ndarray:
    """Brownian mode paths on ``grid`` with shape ``(M+1, samples, N)``."""
    dt = np.diff(grid)
    paths = np.zeros((grid.size, samples, N))
    for i, h in enumerate(dt):
        inc = map_mode_blocks(lambda z: z, N, samples, seed, stream=100 + i, threads=threads)
        paths[i + 1] = paths[i] + np.sqrt(h) * inc
    return paths


def solve_bsde_regression(terminal: TerminalFunctional, alpha: float, grid, samples: int, seed: int,
                          basis_functions: Callable = value_design, threads: int = 1,
                          lam: Optional[np.ndarray] = None) -> BsdeSolution:
    """Backward least-squares scheme.

    At each step ``zeta`` is the regression of ``(Y_next - E[Y_next|F_t]) dB / dt``
    on per-mode features, then ``y_t`` is the regression of
    ``Y_next + (alpha/2)|zeta|^2 dt - zeta . dB`` on ``basis_functions``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
        raise ParameterOutOfRange("grid must increase from 0 to 1 with at least 2 points")
    M, N = grid.size - 1, terminal.N
    paths = simulate_paths(N, grid, samples, seed, threads)
    y = np.empty((M + 1, samples))
    zeta = np.empty((M, samples, N), dtype=np.float32)
    resid = np.empty((M, samples))
    summaries = np.empty((M, samples))
    y[M] = terminal.evaluate(paths[M])
    terminal.check(y[M])
    for i in range(M - 1, -1, -1):
        dt = grid[i + 1] - grid[i]
        b, dB = paths[i], paths[i + 1] - paths[i]
        summary, g = terminal.features(b, grid[i])
        Xv = basis_functions(b, summary)
        summaries[i] = summary
        y_next = y[i + 1]
        centred = y_next - least_squares_fit(Xv, y_next)
        z_i = np.empty((samples, N))
        for k in range(N):
            gk = g[:, k]
            Xz = np.column_stack([np.ones(samples), gk, gk * summary, gk * summary**2, b[:, k]])
            z_i[:, k] = least_squares_fit(Xz, centred * dB[:, k] / dt)
        target = y_next + 0.5 * alpha * np.sum(z_i**2, axis=1) * dt - np.sum(z_i * dB, axis=1)
        y[i] = np.clip(least_squares_fit(Xv, target), -terminal.bound, terminal.bound)
        resid[i] = target - y[i]
        zeta[i] = z_i
        if i == 0:
            y0_se = float(np.std(target, ddof=1) / np.sqrt(samples))
    rms = np.sqrt(np.mean(resid**2, axis=1))
    return BsdeSolution(grid, y, zeta, float(alpha), rms, paths, y[M].copy(), terminal.bound, y0_se, lam, summaries)


def bmo_bound_check(solution: BsdeSolution, ledger: BoundsLedger, basis_functions: Callable = value_design) -> dict:
    """Compare regressed ``E[int_t^1 |zeta|^2 ds | F_t]`` with ``2 alpha^-2 exp(|alpha|(b_F + b_rho b_psi C_beta))``."""
    a = abs(solution.alpha)
    bound = np.inf if a == 0 else 2.0 / a**2 * np.exp(a * (ledger.b_F + ledger.xi_bound))
    dt = np.diff(solution.grid)
    inc = np.sum(solution.zeta.astype(float) ** 2, axis=2) * dt[:, None]
    remaining = np.cumsum(inc[::-1], axis=0)[::-1]
    rows = []
    for i in range(dt.size):
        b = solution.paths[i]
        summary = solution.summaries[i] if solution.summaries is not None else np.sum(b**2, axis=1)
        Xv = basis_functions(b, summary)
        fit = least_squares_fit(Xv, remaining[i])
        se = np.std(remaining[i] - fit, ddof=1) * np.sqrt(Xv.shape[1] / b.shape[0])
        est = float(fit.max())
        rows.append({"t": float(solution.grid[i]), "estimate": est, "stderr": float(se),
                     "bound": float(bound), "violation": float(max(0.0, est - 3 * se - bound))})
    return {"bound": float(bound), "rows": rows, "max_violation": max(r["violation"] for r in rows),
            "passed": all(r["violation"] == 0.0 for r in rows)}


# ---------------------------------------------------------------------------
# Tilt and sine-Gordon expectations
# ---------------------------------------------------------------------------


@dataclass
class TiltWeight:
    gamma: np.ndarray
    normalizer: float
    split_mean: float
    split_stderr: float
    values: np.ndarray = field(repr=False)

    def moment(self, p: float) -> MCEstimate:
        return mean_estimate(self.gamma**p)


def tilt_weights(terminal: TerminalFunctional, alpha: float, samples: int, seed: int, threads: int = 1,
                 values: Optional[np.ndarray] = None) -> TiltWeight:
    """Self-normalized ``exp(alpha xi) / mean exp(alpha xi)`` and a split-batch check of ``E[Gamma] = 1``."""
    if samples < 2:
        raise ParameterOutOfRange("need at least 2 samples")
    v = terminal_samples(terminal, samples, seed, threads) if values is None else np.asarray(values)
    if alpha == 0:
        ones = np.ones(v.size)
        return TiltWeight(ones, 1.0, 1.0, 0.0, v)
    e = np.exp(alpha * v)
    gamma = e / e.mean()
    h = v.size // 2
    e1, e2 = e[:h], e[h:]
    m1, m2 = e1.mean(), e2.mean()
    split = e2 / m1
    rel = np.hypot(e1.std(ddof=1) / np.sqrt(e1.size) / m1, e2.std(ddof=1) / np.sqrt(e2.size) / m2)
    return TiltWeight(gamma, float(e.mean()), float(split.mean()), float(split.mean() * rel), v)


def sg_expectation(F: TerminalFunctional, terminal: TerminalFunctional, alpha: float, samples: int, seed: int,
                   threads: int = 1) -> MCEstimate:
    """Tilted mean ``E[Gamma F(W_1)]`` on common samples."""
    def both(z):
        return np.column_stack([terminal.evaluate(z), F.evaluate(z)])

    vals = map_mode_blocks(both, terminal.N, samples, seed, threads=threads)
    return weighted_mean(vals[:, 1], vals[:, 0], alpha)


def weighted_mean(f: np.ndarray, xi: np.ndarray, alpha: float) -> MCEstimate:
    w = np.exp(alpha * (xi - xi.max())) if alpha != 0 else np.ones_like(xi)
    w = w / w.sum()
    est = float(w @ f)
    se = float(np.sqrt(np.sum(w**2 * (f - est) ** 2)))
    return MCEstimate(est, se, f.size)


def taylor_check(terminal: TerminalFunctional, F: TerminalFunctional, alpha: float, deltas: Sequence[float],
                 samples: int, seed: int, threads: int = 1) -> dict:
    """Remainders ``|Y0(xi + dF) - Y0(xi) - d E[Gamma F]| / d^2`` on common samples."""
    def both(z):
        return np.column_stack([terminal.evaluate(z), F.evaluate(z)])

    vals = map_mode_blocks(both, terminal.N, samples, seed, threads=threads)
    xi, f = vals[:, 0], vals[:, 1]
    y0 = log_mean_exp(xi, alpha)
    slope = weighted_mean(f, xi, alpha)
    rows = []
    for d in deltas:
        yd = log_mean_exp(xi + d * f, alpha)
        rows.append({"delta": float(d), "y0_shifted": float(yd), "remainder": float(abs(yd - y0 - d * slope.value)),
                     "ratio": float(abs(yd - y0 - d * slope.value) / d**2)})
    ratios = np.array([r["ratio"] for r in rows])
    spread = float(ratios.max() / ratios.min()) if ratios.min() > 0 else np.inf
    return {"y0": float(y0), "sg_expectation": slope.value, "sg_stderr": slope.stderr, "rows": rows,
            "ratio_spread": spread, "passed": bool(spread < 4.0)}


# ---------------------------------------------------------------------------
# BMO constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BmoConstants:
    p: float
    a: float
    kappa: float
    K: Optional[float]
    p_bar: float

    @property
    def valid(self) -> bool:
        return self.K is not None


def kappa(p: float) -> float:
    if not p > 1:
        raise ParameterOutOfRange(f"p must exceed 1, got {p!r}")
    return float(np.sqrt(1.0 + np.log((2 * p - 1) / (2 * (p - 1))) / p**2) - 1.0)


def reverse_holder_K(p: float, a: float) -> Optional[float]:
    """``2 / (1 - (2(p-1)/(2p-1)) exp(p^2 (a^2 + 2a)))``, or ``None`` when the bracket is nonpositive."""
    if not p > 1:
        raise ParameterOutOfRange(f"p must exceed 1, got {p!r}")
    if a < 0:
        raise ParameterOutOfRange(f"a must be nonnegative, got {a!r}")
    expo = p**2 * (a**2 + 2 * a)
    log_term = np.log(2 * (p - 1) / (2 * p - 1)) + expo
    if log_term >= 0:
        return None
    return float(2.0 / (1.0 - np.exp(log_term)))


def p_bar(a: float) -> float:
    """Solve ``kappa(p) = a`` (``kappa`` decreases from infinity to 0)."""
    if a < 0:
        raise ParameterOutOfRange(f"a must be nonnegative, got {a!r}")
    if a == 0:
        return np.inf
    hi = 2.0
    while kappa(hi) > a:
        hi *= 2.0
    lo = 1.0 + 1e-15
    return float(optimize.brentq(lambda p: kappa(p) - a, lo, hi, xtol=1e-14))


def bmo_constants(p: float, a: float) -> BmoConstants:
    return BmoConstants(float(p), float(a), kappa(p), reverse_holder_K(p, a), p_bar(a))


def valid_p(a: float) -> float:
    """A ``p`` in the middle of the range where the reverse Holder constant is finite."""
    expo_at_1 = a**2 + 2 * a
    # 2(p-1)/(2p-1) exp(p^2 c) < 1 near p = 1 gives p - 1 < exp(-c) / 2 to leading order
    p = 1.0 + 0.25 * np.exp(-expo_at_1)
    while reverse_holder_K(p, a) is None:
        p = 1.0 + 0.5 * (p - 1.0)
    return float(p)


# ---------------------------------------------------------------------------
# epsilon sweep
# ---------------------------------------------------------------------------


def epsilon_sweep(alpha: float, beta: float, rho: TestFunction, psi: Optional[DensityWeight], eps_list, samples: int,
                  seed: int, basis: SpectralBasis, grid_n: int = 64, mollifier=STANDARD_MOLLIFIER,
                  functionals: Optional[dict] = None, threads: int = 1) -> dict:
    """Coupled Cole-Hopf values, tilted catalog means and split-batch ``E[Gamma]`` per ``eps``."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ParameterOutOfRange("eps_list must be strictly decreasing")
    functionals = catalog_functionals(basis) if functionals is None else functionals
    names = list(functionals)
    Fs = [functionals[n] for n in names]

    def fvals(z):
        return np.column_stack([F.evaluate(z) for F in Fs])

    fv = map_mode_blocks(fvals, basis.N, samples, seed, threads=threads)
    rows, prev_e = [], None
    for eps in eps_list:
        cache = build_cache(basis, eps, grid_n, mollifier, support=(rho.center, rho.radius))
        term = WickCosineTerminal(cache, rho, psi, beta)
        xi = terminal_samples(term, samples, seed, threads)
        y0 = cole_hopf_estimate(xi, alpha)
        e = np.exp(alpha * (xi - term.bound)) if alpha != 0 else xi
        row = {"eps": eps, "y0": y0.value, "y0_stderr": y0.stderr}
        if prev_e is not None:
            if alpha != 0:
                lin = e / (alpha * e.mean()) - prev_e / (alpha * prev_e.mean())
            else:
                lin = e - prev_e
            row["diff_prev"] = abs(y0.value - rows[-1]["y0"])
            row["diff_stderr"] = float(np.std(lin, ddof=1) / np.sqrt(samples))
        for n, j in zip(names, range(len(names))):
            est = weighted_mean(fv[:, j], xi, alpha)
            row[f"sg_{n}"], row[f"sg_{n}_stderr"] = est.value, est.stderr
        tw = tilt_weights(term, alpha, samples, seed, values=xi)
        row["split_gamma"], row["split_gamma_stderr"] = tw.split_mean, tw.split_stderr
        row["deterministic_integral"] = float(node_weights(cache, rho, psi).sum())
        rows.append(row)
        prev_e = e
    diffs = [r["diff_prev"] for r in rows[1:]]
    cauchy = all(b < a for a, b in zip(diffs, diffs[1:]))
    stable = {}
    if len(rows) >= 2:
        r1, r2 = rows[-2], rows[-1]
        for n in names:
            gap = abs(r1[f"sg_{n}"] - r2[f"sg_{n}"])
            stable[n] = bool(gap <= 3 * np.hypot(r1[f"sg_{n}_stderr"], r2[f"sg_{n}_stderr"]))
    gamma_ok = all(abs(r["split_gamma"] - 1) <= 3 * r["split_gamma_stderr"] for r in rows)
    return {"rows": rows, "cauchy_decreasing": cauchy, "sg_stable": stable, "split_gamma_ok": gamma_ok}
