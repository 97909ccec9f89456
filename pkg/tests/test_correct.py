import numpy as np
import pytest
from sklearn.base import clone

from seqcal import FiniteSampleCorrector
from seqcal.dist import gaussian_sd_expectation_factor
from seqcal.exceptions import DimensionError, UnsupportedError


def test_params_and_clone():
    c = FiniteSampleCorrector(dist="exponential", statistic="median", n_sets=3, seed=4)
    assert c.get_params() == {"dist": "exponential", "statistic": "median", "n_sets": 3, "seed": 4, "threshold": 1e-10}
    twin = clone(c)
    assert twin.get_params() == c.get_params() and twin is not c


def test_sd_factor_close_to_exact():
    x = np.random.default_rng(0).normal(size=(2000, 6))
    c = FiniteSampleCorrector(n_sets=5, seed=1).fit(x)
    assert c.n_features_in_ == 6
    assert c.factor_ == pytest.approx(gaussian_sd_expectation_factor(6), abs=0.02)
    out = c.transform(x)
    assert out.shape == (2000, 1)
    np.testing.assert_allclose(out[:, 0], x.std(axis=1, ddof=1) / c.factor_)
    # Corrected sd is close to unbiased on Gaussian rows.
    assert out.mean() == pytest.approx(1.0, abs=0.03)


def test_fit_transform_and_errors():
    x = np.random.default_rng(1).exponential(size=(50, 9))
    c = FiniteSampleCorrector(dist="exponential", statistic="median", n_sets=2)
    assert c.fit_transform(x).shape == (50, 1)
    with pytest.raises(DimensionError):
        c.transform(x[:, :8])
    with pytest.raises(UnsupportedError):
        FiniteSampleCorrector(statistic="mean").fit(np.zeros((3, 5)))
