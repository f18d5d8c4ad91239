import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from sglab import bsde
from sglab.estimators import ColeHopfBSDE, GaussianFreeFieldSampler, WickCosineTransformer


def test_sampler():
    s = GaussianFreeFieldSampler(n_modes=8, seed=3)
    with pytest.raises(NotFittedError):
        s.sample(10)
    s.fit()
    Z = s.sample(100)
    assert Z.shape == (100, 8)
    np.testing.assert_array_equal(Z, clone(s).fit().sample(100))
    W = s.field(Z[:2], np.array([[0.5, 0.5], [0.2, 0.3]]))
    assert W.shape == (2, 2)
    assert s.get_params()["n_modes"] == 8


def test_transformer_matches_terminal():
    t = WickCosineTransformer(n_modes=8, eps=0.1, rho_radius=0.2, grid_n=16).fit()
    Z = np.random.default_rng(0).standard_normal((20, 8))
    np.testing.assert_allclose(t.transform(Z)[:, 0], t.terminal_.evaluate(Z))
    with pytest.raises(ValueError):
        t.transform(Z[:, :5])


def test_pipeline_cole_hopf():
    Z = GaussianFreeFieldSampler(n_modes=8, seed=1).fit().sample(5000)
    pipe = make_pipeline(WickCosineTransformer(n_modes=8, eps=0.1, rho_radius=0.2, grid_n=16))
    xi = pipe.fit_transform(Z)
    est = ColeHopfBSDE(alpha=1.0).fit(xi)
    assert est.y0_ == pytest.approx(bsde.log_mean_exp(xi[:, 0], 1.0))
    assert est.gamma_.mean() == pytest.approx(1.0)
    assert est.score(xi) == pytest.approx(0.0, abs=1e-15)
