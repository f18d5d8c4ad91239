"""scikit-learn style wrappers around the functional API.

Only the parts that map naturally onto fit/transform are wrapped: a field
sampler, a transformer from mode vectors to tested Wick cosines, and a
Cole-Hopf estimator of the initial BSDE value.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bsde import WickCosineTerminal, cole_hopf_estimate, tilt_weights
from .gff import build_cache
from .montecarlo import map_mode_blocks
from .spectral import STANDARD_MOLLIFIER, DomainSpec, build_basis
from .wick import TestFunction


class GaussianFreeFieldSampler(BaseEstimator):
    """Draw truncated field coefficients and evaluate the field at points.

    ``fit`` builds the spectral basis; ``sample`` returns ``(samples, N)`` i.i.d.
    standard normal mode vectors from the seeded block stream.
    """

    def __init__(self, domain="unit_square", n_modes=64, seed=0):
        self.domain = domain
        self.n_modes = n_modes
        self.seed = seed

    def fit(self, X=None, y=None):
        dom = self.domain if isinstance(self.domain, DomainSpec) else getattr(DomainSpec, self.domain)()
        self.basis_ = build_basis(dom, int(self.n_modes))
        self.n_features_in_ = 2
        return self

    def sample(self, n_samples, stream=0):
        check_is_fitted(self, "basis_")
        return map_mode_blocks(lambda z: z, self.basis_.N, int(n_samples), self.seed, stream=stream)

    def field(self, modes, X):
        """Field values ``sum_k sqrt(2 pi lambda_k) xi_k e_k(x)``, shape ``(samples, points)``."""
        check_is_fitted(self, "basis_")
        X = check_array(X)
        modes = np.atleast_2d(np.asarray(modes, dtype=float))
        scaled = np.sqrt(2 * np.pi * self.basis_.lam)[:, None] * self.basis_(X)
        return modes @ scaled


class WickCosineTransformer(TransformerMixin, BaseEstimator):
    """Map rows of mode coefficients to the tested Wick cosine ``xi``.

    ``fit`` tabulates the mollified eigenfunctions; ``transform`` returns a
    single column.
    """

    def __init__(self, domain="unit_square", n_modes=64, eps=0.05, beta=1.0, rho_center=(0.5, 0.5),
                 rho_radius=0.35, grid_n=64, mollifier=STANDARD_MOLLIFIER):
        self.domain = domain
        self.n_modes = n_modes
        self.eps = eps
        self.beta = beta
        self.rho_center = rho_center
        self.rho_radius = rho_radius
        self.grid_n = grid_n
        self.mollifier = mollifier

    def fit(self, X=None, y=None):
        dom = self.domain if isinstance(self.domain, DomainSpec) else getattr(DomainSpec, self.domain)()
        basis = build_basis(dom, int(self.n_modes))
        rho = TestFunction.smooth_bump(self.rho_center, self.rho_radius)
        self.cache_ = build_cache(basis, self.eps, self.grid_n, self.mollifier, support=(rho.center, rho.radius))
        self.terminal_ = WickCosineTerminal(self.cache_, rho, None, self.beta)
        self.bound_ = self.terminal_.bound
        self.n_features_in_ = basis.N
        return self

    def transform(self, X):
        check_is_fitted(self, "terminal_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} mode columns, got {X.shape[1]}")
        return self.terminal_.evaluate(X)[:, None]


class ColeHopfBSDE(BaseEstimator):
    """Estimate ``Y_0 = alpha^-1 log E[exp(alpha xi)]`` from terminal samples.

    ``fit(X)`` takes a column of terminal values; ``y0_`` and ``y0_stderr_``
    hold the estimate and ``gamma_`` the normalized tilt weights.
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        if X.shape[1] != 1:
            raise ValueError("expected a single column of terminal values")
        xi = X[:, 0]
        est = cole_hopf_estimate(xi, self.alpha)
        self.y0_, self.y0_stderr_ = est.value, est.stderr
        self.gamma_ = tilt_weights(None, self.alpha, xi.size, 0, values=xi).gamma
        self.n_features_in_ = 1
        return self

    def score(self, X, y=None):
        """Negative absolute gap between ``y0_`` and the estimate on ``X``."""
        check_is_fitted(self, "y0_")
        X = check_array(X, ensure_min_samples=2)
        return -abs(cole_hopf_estimate(X[:, 0], self.alpha).value - self.y0_)
