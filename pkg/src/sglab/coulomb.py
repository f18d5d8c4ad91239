"""Two-dimensional log-gas partition functions, continuum Ising correlations and
the charge-distribution characteristic functional."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from math import factorial
from typing import Callable, Optional

import mpmath
import numpy as np
from scipy import special
from scipy.stats import qmc

from .bsde import WickCosineTerminal, cole_hopf_estimate, terminal_samples
from .errors import CoincidentCharges, CoincidentPoints, DimensionTooLarge, OutsideDomain, OutsideShrunkenDomain
from .gff import MollifiedEigenCache
from .montecarlo import MCEstimate, map_mode_blocks, mean_estimate
from .spectral import TWO_PI, ConformalMap, SpectralBasis, as_points, green_halfplane
from .wick import Angle, DensityWeight, TestFunction, bounds_ledger, check_beta, node_weights

TENSOR_MAX_N = 4
QMC_MAX_N = 8


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def constants() -> dict:
    """``zeta'(-1)`` by two independent routes and the Ising lattice constant.

    ``zeta'(-1) = 1/12 - log A`` with ``A`` the Glaisher-Kinkelin constant;
    ``C = 2^(5/48) exp(3 zeta'(-1) / 2)``.
    """
    with mpmath.workdps(30):
        direct = mpmath.zeta(-1, derivative=1)
        via_glaisher = mpmath.mpf(1) / 12 - mpmath.log(mpmath.glaisher)
        C = mpmath.power(2, mpmath.mpf(5) / 48) * mpmath.exp(mpmath.mpf(3) / 2 * direct)
        return {
            "zeta_prime_minus_1": float(direct),
            "zeta_prime_minus_1_glaisher": float(via_glaisher),
            "route_gap": float(abs(direct - via_glaisher)),
            "C": float(C),
        }


# ---------------------------------------------------------------------------
# Configurations and energies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChargeConfiguration:
    positions: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        sg = np.asarray(self.signs, dtype=int).reshape(-1)
        if pos.shape[0] != sg.shape[0]:
            raise ValueError("positions and signs differ in length")
        if not np.all(np.isin(sg, (-1, 1))):
            raise ValueError("signs must be +1 or -1")
        if pos.shape[0] > 1:
            d = np.hypot(*(pos[:, None, :] - pos[None, :, :]).transpose(2, 0, 1))
            if d[np.triu_indices(pos.shape[0], 1)].min() <= 0:
                raise CoincidentCharges("two charges share a position")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "signs", sg)

    @property
    def n(self) -> int:
        return self.signs.shape[0]

    def conjugate(self) -> "ChargeConfiguration":
        return ChargeConfiguration(self.positions, -self.signs)


def interaction_energy(config: ChargeConfiguration, green_fn: Callable, domain=None, eps: Optional[float] = None) -> float:
    """``sum_{k<l} gamma_k gamma_l G(x_k, x_l)``.

    ``green_fn(x, y)`` takes paired point arrays.  With ``domain`` and ``eps``
    the charges must sit in the shrunken domain.
    """
    if domain is not None and eps is not None and config.n:
        if not np.all(domain.in_shrunken(config.positions, eps)):
            raise OutsideShrunkenDomain("charge outside the shrunken domain")
    if config.n <= 1:
        return 0.0
    i, j = np.triu_indices(config.n, 1)
    g = np.asarray(green_fn(config.positions[i], config.positions[j]), dtype=float)
    return float(np.sum(config.signs[i] * config.signs[j] * g))


def cache_green(cache: MollifiedEigenCache, basis: SpectralBasis) -> Callable:
    """Matched-truncation mollified Green function at arbitrary points of the shrunken domain."""
    m = cache.multipliers

    def fn(x, y):
        ex = basis(as_points(x)) * m[:, None]
        ey = basis(as_points(y)) * m[:, None]
        return TWO_PI * np.einsum("k,kp,kp->p", basis.lam, ex, ey)

    return fn


# ---------------------------------------------------------------------------
# Configuration sums
# ---------------------------------------------------------------------------


def _sign_vectors(n: int, half: bool) -> np.ndarray:
    if n == 0:
        return np.zeros((1, 0), dtype=int)
    vecs = np.array(list(itertools.product((1, -1), repeat=n)), dtype=int).reshape(-1, n)
    return vecs[vecs[:, 0] == 1] if half else vecs


def _tensor_sum(n, Apm, w):
    """``sum_{i_1..i_n} prod_k w_k[i_k] prod_{k<l} A_kl[i_k, i_l]`` for ``n <= 4``."""
    if n == 0:
        return 1.0
    if n == 1:
        return w[0].sum()
    if n == 2:
        return w[0] @ Apm[0, 1] @ w[1]
    if n == 3:
        T = (Apm[0, 2] * w[2]) @ Apm[1, 2].T
        return np.sum(w[0][:, None] * w[1][None, :] * Apm[0, 1] * T)
    total = 0.0
    P = w[0].shape[0]
    chunk = max(1, int(2e7 // (P * P)))
    E23w = Apm[1, 2] * w[2]
    E24w = Apm[1, 3] * w[3]
    for s in range(0, P, chunk):
        sl = slice(s, s + chunk)
        U = Apm[0, 2][sl][:, None, :] * E23w[None, :, :]
        V = Apm[0, 3][sl][:, None, :] * E24w[None, :, :]
        inner = np.einsum("ijl,ijl->ij", U @ Apm[2, 3], V)
        total = total + np.sum(w[0][sl] * np.sum(w[1][None, :] * Apm[0, 1][sl] * inner, axis=1))
    return total


def configuration_sum_tensor(n: int, G: np.ndarray, beta: float, w_plus: np.ndarray,
                             w_minus: Optional[np.ndarray] = None) -> complex:
    """Sum over sign vectors of the tensor quadrature of ``exp(-beta^2 sum gamma gamma G) prod w_gamma``."""
    if n > TENSOR_MAX_N:
        raise DimensionTooLarge(f"tensor quadrature supports n <= {TENSOR_MAX_N}")
    symmetric = w_minus is None
    w_minus = w_plus if symmetric else w_minus
    A = {1: np.exp(-beta**2 * G), -1: np.exp(beta**2 * G)}
    total = 0.0
    for gam in _sign_vectors(n, symmetric):
        Apm = np.empty((n, n), dtype=object)
        for k, l in itertools.combinations(range(n), 2):
            Apm[k, l] = A[gam[k] * gam[l]]
        w = [w_plus if g == 1 else w_minus for g in gam]
        total = total + _tensor_sum(n, Apm, w)
    return 2 * total if symmetric and n > 0 else total


def configuration_sum_qmc(n: int, basis: SpectralBasis, cache: MollifiedEigenCache, beta: float, weight_fn: Callable,
                          phase_fn: Optional[Callable], center, radius, points: int, seed: int) -> complex:
    """Scrambled-Sobol estimate of the same configuration sum over continuous positions."""
    if n > QMC_MAX_N:
        raise DimensionTooLarge(f"quasi-Monte Carlo route supports n <= {QMC_MAX_N}")
    if n == 0:
        return 1.0
    u = qmc.Sobol(d=2 * n, scramble=True, seed=seed).random(points)
    c = np.asarray(center, dtype=float)
    x = (c - radius) + 2 * radius * u.reshape(points, n, 2)
    vol = (2 * radius) ** (2 * n)
    flat = x.reshape(-1, 2)
    inside = basis.domain.in_shrunken(flat, cache.eps).reshape(points, n)
    w = weight_fn(flat).reshape(points, n) * inside
    phi = (np.sqrt(TWO_PI * basis.lam) * cache.multipliers)[:, None] * basis(flat)
    phi = phi.reshape(basis.N, points, n)
    i, j = np.triu_indices(n, 1)
    Gp = np.einsum("kpi,kpi->pi", phi[:, :, i], phi[:, :, j])
    signs = _sign_vectors(n, False)
    prods = signs[:, i] * signs[:, j]
    boltz = np.exp(-beta**2 * prods @ Gp.T)
    wprod = np.prod(w, axis=1)
    if phase_fn is None:
        vals = boltz.sum(axis=0) * wprod
    else:
        th = phase_fn(flat).reshape(points, n)
        ph = np.exp(1j * signs @ th.T)
        vals = (boltz * ph).sum(axis=0) * wprod
    return vol * vals.mean()


def q_n_quadrature(n: int, beta: float, cache: MollifiedEigenCache, rho: TestFunction,
                   psi: Optional[DensityWeight] = None, method: str = "auto", basis: Optional[SpectralBasis] = None,
                   theta: Optional[Angle] = None, qmc_points: int = 2**16, seed: int = 0):
    """``Q_n = sum_signs int exp(-beta^2 sum_{k<l} gamma_k gamma_l G^eps) prod rho psi``.

    ``method="tensor"`` sums over cache nodes with the cache's Green matrix
    (``n <= 4``); ``method="qmc"`` integrates over continuous positions
    (``n <= 8``, needs ``basis``).  ``theta`` adds the phase ``exp(i sum gamma theta)``.
    """
    check_beta(beta)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if method == "auto":
        method = "tensor" if n <= TENSOR_MAX_N else "qmc"
    if n > QMC_MAX_N or (method == "tensor" and n > TENSOR_MAX_N):
        raise DimensionTooLarge(f"n = {n} exceeds the {method} limit")
    if method == "tensor":
        a = node_weights(cache, rho, psi)
        nz = a != 0
        a, G = a[nz], cache.green_matrix[np.ix_(nz, nz)]
        if theta is None:
            out = configuration_sum_tensor(n, G, beta, a)
        else:
            th = theta(cache.points[nz])
            out = configuration_sum_tensor(n, G, beta, a * np.exp(1j * th), a * np.exp(-1j * th))
    elif method == "qmc":
        if basis is None:
            raise ValueError("qmc route needs the spectral basis")

        def weight(p):
            out = rho(p)
            return out * psi(p) if psi is not None else out

        out = configuration_sum_qmc(n, basis, cache, beta, weight, theta, rho.center, rho.radius, qmc_points, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = complex(out)
    return out.real if theta is None else out


def q_n_moment(n: int, beta: float, cache: MollifiedEigenCache, rho: TestFunction, psi: Optional[DensityWeight],
               samples: int, seed: int, threads: int = 1, values: Optional[np.ndarray] = None) -> MCEstimate:
    """Monte Carlo ``E[(2 xi_eps)^n]``."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if n == 0:
        return MCEstimate(1.0, 0.0, samples)
    if values is None:
        values = terminal_samples(WickCosineTerminal(cache, rho, psi, beta), samples, seed, threads)
    return mean_estimate((2 * values) ** n)


def tail_bound(x: float, n_max: int) -> float:
    """``sum_{n > n_max} x^n / n!`` in closed form."""
    if x == 0:
        return 0.0
    return float(np.exp(x) * special.gammainc(n_max + 1, x))


# ---------------------------------------------------------------------------
# Partition function
# ---------------------------------------------------------------------------


@dataclass
class PartitionReport:
    alpha: float
    beta: float
    eps: float
    n_max: int
    q_terms: list
    q_moments: list
    q_moment_stderr: list
    series_sum: float
    moment_series_sum: float
    tail_bound: float
    mc_partition: float
    mc_stderr: float
    y0: float
    y0_stderr: float
    y0_link: float
    xi_bound: float
    quadrature_tolerance: float
    samples: int
    seed: int
    onsager_exponent: float = 0.0
    onsager_constant: float = 0.0
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def onsager_constant(q_terms, beta: float) -> float:
    """Smallest ``C`` with ``Q_n <= C^n n^(beta^2 n / 4)`` over the supplied terms (logged, not asserted)."""
    c = [(qn / n ** (beta**2 * n / 4)) ** (1.0 / n) for n, qn in enumerate(q_terms) if n >= 1 and qn > 0]
    return float(max(c)) if c else 0.0


def partition(alpha: float, beta: float, cache: MollifiedEigenCache, rho: TestFunction, psi: Optional[DensityWeight],
              n_max: int, samples: int, seed: int, threads: int = 1,
              q_terms: Optional[list] = None) -> PartitionReport:
    """Partition function by configuration series, Monte Carlo moments and exponential tilt.

    ``q_terms`` may pass precomputed quadrature values (they depend on ``beta`` only).
    """
    check_beta(beta)
    if n_max > TENSOR_MAX_N:
        raise DimensionTooLarge(f"n_max must be <= {TENSOR_MAX_N}")
    term = WickCosineTerminal(cache, rho, psi, beta)
    xi = terminal_samples(term, samples, seed, threads)
    q = list(q_terms[: n_max + 1]) if q_terms is not None else [
        q_n_quadrature(n, beta, cache, rho, psi) for n in range(n_max + 1)]
    mom = [q_n_moment(n, beta, cache, rho, psi, samples, seed, values=xi) for n in range(n_max + 1)]
    coef = [alpha**n / (2**n * factorial(n)) for n in range(n_max + 1)]
    series = float(np.dot(coef, q))
    mseries = float(np.dot(coef, [m.value for m in mom]))
    tail = tail_bound(abs(alpha) * term.bound, n_max)
    mc = mean_estimate(np.exp(alpha * xi))
    y0 = cole_hopf_estimate(xi, alpha)
    link = float(np.exp(alpha * y0.value))
    qtol = 1e-9 * max(1.0, abs(series))
    checks = {
        "series_vs_mc": abs(series - mc.value) <= tail + 3 * mc.stderr + qtol,
        "mc_vs_y0_link": abs(mc.value - link) <= 1e-12 * max(1.0, abs(mc.value)),
        "series_vs_y0_link": abs(series - link) <= tail + 3 * mc.stderr + qtol,
        "quadrature_vs_moments": all(abs(qn - m.value) <= 3 * m.stderr + 1e-9 * max(1.0, abs(qn))
                                     for qn, m in zip(q, mom)),
        "q_nonnegative": bool(np.all(np.array(q) >= -1e-12)) if np.all(node_weights(cache, rho, psi) >= 0) else True,
    }
    return PartitionReport(
        onsager_exponent=beta**2 / 4, onsager_constant=onsager_constant(q, beta),
        alpha=float(alpha), beta=float(beta), eps=cache.eps, n_max=n_max, q_terms=[float(v) for v in q],
        q_moments=[m.value for m in mom], q_moment_stderr=[m.stderr for m in mom], series_sum=series,
        moment_series_sum=mseries, tail_bound=tail, mc_partition=mc.value, mc_stderr=mc.stderr, y0=y0.value,
        y0_stderr=y0.stderr, y0_link=link, xi_bound=term.bound, quadrature_tolerance=qtol, samples=samples,
        seed=seed, checks={k: bool(v) for k, v in checks.items()},
    )


# ---------------------------------------------------------------------------
# Continuum Ising correlations
# ---------------------------------------------------------------------------


def ising_npoint_halfplane(points) -> np.ndarray:
    """Continuum spin correlation on the upper half-plane.

    ``points`` is a complex array whose last axis lists the ``n`` points;
    leading axes are vectorised.
    """
    z = np.asarray(points, dtype=complex)
    scalar = z.ndim == 1
    z = np.atleast_2d(z)
    n = z.shape[-1]
    if np.any(z.imag <= 0):
        raise OutsideDomain("points must lie in the upper half-plane")
    i, j = np.triu_indices(n, 1)
    if i.size and np.any(np.abs(z[..., i] - z[..., j]) <= 1e-12 * np.maximum(1, np.abs(z[..., i]))):
        raise CoincidentPoints("correlation points must be distinct")
    ratio = np.abs((z[..., i] - z[..., j]) / (z[..., i] - np.conj(z[..., j])))
    signs = _sign_vectors(n, False)
    expo = 0.5 * (signs[:, i] * signs[:, j])
    inner = np.exp(np.log(ratio) @ expo.T).sum(axis=-1) if i.size else np.full(z.shape[:-1], float(2**n))
    out = np.prod((2 * z.imag) ** (-0.125), axis=-1) * np.sqrt(2.0 ** (-n / 2) * inner)
    return float(out[0]) if scalar else out


def _polar_rule(center, radius, n_r, n_t, offset):
    x, w = np.polynomial.legendre.leggauss(n_r)
    r, wr = radius * 0.5 * (x + 1), radius * 0.5 * w
    th = 2 * np.pi * (np.arange(n_t) + offset) / n_t
    R, T = np.meshgrid(r, th, indexing="ij")
    pts = np.asarray(center) + np.stack([R * np.cos(T), R * np.sin(T)], -1).reshape(-1, 2)
    return pts, (R * wr[:, None] * 2 * np.pi / n_t).ravel()


def _xor_routes(n, rho, cmap, n_r, n_t):
    const = constants()["C"]
    rules = [_polar_rule(rho.center, rho.radius, n_r + k, n_t + k, 0.5 * k / (n + 1)) for k in range(n)]
    pts = [p for p, _ in rules]
    w = [wt * rho(p) for p, wt in rules]
    z = [cmap(p) for p in pts]
    dz = [np.abs(cmap.derivative(p[:, 0] + 1j * p[:, 1])) for p in pts]
    psi = [(d / (2 * zz.imag)) ** 0.25 for d, zz in zip(dz, z)]
    grids = np.meshgrid(*[np.arange(len(p)) for p in pts], indexing="ij")
    idx = [g.ravel() for g in grids]
    Z = np.stack([z[k][idx[k]] for k in range(n)], axis=-1)
    W = np.prod([w[k][idx[k]] for k in range(n)], axis=0)
    Psi = np.prod([psi[k][idx[k]] for k in range(n)], axis=0)
    D = np.prod([dz[k][idx[k]] ** 0.125 for k in range(n)], axis=0)
    # route (a): charge series at beta^2 = 1/2 with the conformal density weight
    signs = _sign_vectors(n, False)
    i, j = np.triu_indices(n, 1)
    if i.size:
        Gp = green_halfplane(Z[:, i], Z[:, j])
        boltz = np.exp(-0.5 * (signs[:, i] * signs[:, j]) @ np.atleast_2d(Gp).T).sum(axis=0)
    else:
        boltz = np.full(Z.shape[0], float(len(signs)))
    route_a = (const**2 / np.sqrt(2)) ** n * np.sum(W * Psi * boltz)
    # route (b): squared continuum correlation with conformal covariance factors
    corr = ising_npoint_halfplane(Z)
    route_b = np.sum(W * (const**n * corr * D) ** 2)
    return float(route_a), float(route_b), float(np.sum(w[0] * psi[0]))


def xor_identity_check(n: int, rho: TestFunction, cmap: ConformalMap, n_r: int = 12, n_t: int = 16) -> dict:
    """Compare the charge-series and squared-correlation forms of the XOR integral.

    Each charge position uses its own polar Gauss-Legendre rule on the support
    of ``rho`` (offset so nodes never coincide).  The quadrature tolerance is
    the change of route (a) under one refinement step.
    """
    if n > 3:
        raise DimensionTooLarge("XOR identity check supports n <= 3")
    if n < 1:
        raise ValueError("n must be >= 1")
    cmap.check(_polar_rule(rho.center, rho.radius, n_r, n_t, 0.0)[0])
    a, b, int1 = _xor_routes(n, rho, cmap, n_r, n_t)
    a_fine, _, _ = _xor_routes(n, rho, cmap, n_r + 4, n_t + 4)
    const = constants()["C"]
    quad_tol = abs(a_fine - a)
    gap = abs(a - b)
    tol = 1e-10 * max(1.0, abs(a)) if n == 1 else max(quad_tol, 1e-10 * abs(a))
    out = {"n": n, "route_a": a, "route_b": b, "difference": gap, "quadrature_tolerance": quad_tol,
           "tolerance": tol, "C": const, "passed": bool(gap <= tol)}
    if n == 1:
        out["closed_form"] = float(2 * const**2 / np.sqrt(2) * int1)
    return out


# ---------------------------------------------------------------------------
# Characteristic functional
# ---------------------------------------------------------------------------


@dataclass
class CharFunctionalReport:
    theta: str
    alpha: float
    beta: float
    psi_tilt: complex
    psi_tilt_stderr: float
    psi_series: complex
    series_tolerance: float
    tail_bound: float
    agreement: float
    tolerance: float
    lipschitz_constant: float
    samples: int
    seed: int

    @property
    def passed(self) -> bool:
        return bool(self.agreement <= self.tolerance)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("psi_tilt", "psi_series"):
            d[k] = [d[k].real, d[k].imag]
        d["passed"] = self.passed
        return d


def _tilt_ratio(xi, shifted, alpha):
    """``mean exp(alpha shifted) / mean exp(alpha xi)`` with a delta-method error bar."""
    s = max(xi.max(), shifted.max()) if alpha > 0 else min(xi.min(), shifted.min())
    e1 = np.exp(alpha * (shifted - s))
    e0 = np.exp(alpha * (xi - s))
    r = e1.mean() / e0.mean()
    se = np.std(e1 - r * e0, ddof=1) / np.sqrt(xi.size) / e0.mean()
    return float(r), float(se)


def char_functional_samples(theta: Angle, beta: float, cache: MollifiedEigenCache, rho: TestFunction,
                            samples: int, seed: int, threads: int = 1):
    """Per-sample ``(xi, xi - 2 F_{rho,theta})`` on shared mode draws."""
    a = node_weights(cache, rho) * np.exp(0.5 * beta**2 * cache.variance)
    nz = a != 0
    phi, a = cache.phi[:, nz], a[nz]
    th = theta(cache.points[nz])

    def fn(z):
        W = beta * (z @ phi)
        return np.column_stack([np.cos(W) @ a, np.cos(W + th) @ a])

    v = map_mode_blocks(fn, cache.N, samples, seed, threads=threads)
    return v[:, 0], v[:, 1]


def lipschitz_constant(alpha: float, ledger) -> float:
    x = 2 * abs(alpha) * ledger.b_rho * ledger.C_beta
    return float(x * np.exp(x))


def char_functional(theta: Angle, alpha: float, beta: float, cache: MollifiedEigenCache, rho: TestFunction,
                    samples: int, n_max: int, seed: int, threads: int = 1) -> CharFunctionalReport:
    """Characteristic functional by exponential tilt and by the phased configuration series (``psi = 1``)."""
    check_beta(beta)
    ledger = bounds_ledger(cache, rho, None, beta)
    xi, shifted = char_functional_samples(theta, beta, cache, rho, samples, seed, threads)
    if alpha == 0:
        tilt, tilt_se = 1.0, 0.0
    else:
        tilt, tilt_se = _tilt_ratio(xi, shifted, alpha)
    coef = [alpha**n / (2**n * factorial(n)) for n in range(n_max + 1)]
    num = sum(c * q_n_quadrature(n, beta, cache, rho, None, theta=theta) for n, c in enumerate(coef))
    den = sum(c * q_n_quadrature(n, beta, cache, rho, None) for n, c in enumerate(coef))
    series = complex(num / den)
    tail = tail_bound(abs(alpha) * ledger.xi_bound, n_max)
    series_tol = tail * (1 + abs(series)) / max(den - tail, 1e-300) if tail > 0 else 0.0
    gap = abs(tilt - series)
    tol = 3 * tilt_se + series_tol + 1e-12
    return CharFunctionalReport(
        theta=theta.name, alpha=float(alpha), beta=float(beta), psi_tilt=complex(tilt), psi_tilt_stderr=tilt_se,
        psi_series=series, series_tolerance=float(series_tol), tail_bound=tail, agreement=float(gap),
        tolerance=float(tol), lipschitz_constant=lipschitz_constant(alpha, ledger), samples=samples, seed=seed,
    )


def lipschitz_check(theta1: Angle, theta2: Angle, alpha: float, beta: float, cache: MollifiedEigenCache,
                    rho: TestFunction, samples: int, seed: int, threads: int = 1) -> dict:
    """``|Psi(theta1) - Psi(theta2)| <= L ||theta1 - theta2||_inf`` on common samples."""
    ledger = bounds_ledger(cache, rho, None, beta)
    xi, s1 = char_functional_samples(theta1, beta, cache, rho, samples, seed, threads)
    _, s2 = char_functional_samples(theta2, beta, cache, rho, samples, seed, threads)
    if alpha == 0:
        return {"difference": 0.0, "stderr": 0.0, "bound": 0.0, "passed": True}
    s = max(xi.max(), s1.max(), s2.max()) if alpha > 0 else min(xi.min(), s1.min(), s2.min())
    e0, e1, e2 = (np.exp(alpha * (v - s)) for v in (xi, s1, s2))
    d = (e1 - e2).mean() / e0.mean()
    se = np.std(e1 - e2 - d * e0, ddof=1) / np.sqrt(xi.size) / e0.mean()
    sup = float(np.abs(theta1(cache.points) - theta2(cache.points)).max())
    L = lipschitz_constant(alpha, ledger)
    return {"difference": float(abs(d)), "stderr": float(se), "sup_norm": sup, "lipschitz_constant": L,
            "bound": L * sup, "passed": bool(abs(d) <= L * sup + 3 * se)}
