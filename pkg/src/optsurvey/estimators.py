"""scikit-learn style wrappers around the design and estimation routines."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from ._validation import as_vector
from .cost_model import DiscreteCostDistribution
from .mechanism import design_mechanism
from .moment_design import alloc_at, design_moment_discrete
from .regression_design import RegressionInstance, design_regression
from .simulate import ht_estimate_multi, wls_estimate

SPACES = ("virtual", "true")


def _prior(costs, sample_weight):
    costs = as_vector(costs, "costs")
    if sample_weight is None:
        return DiscreteCostDistribution.from_samples(costs)
    return DiscreteCostDistribution(costs, as_vector(sample_weight, "sample_weight"))


class MomentSurveyDesigner(BaseEstimator):
    """Fit an optimal purchase rule to a cost prior.

    ``fit(costs, sample_weight=pmf)`` takes the support and its masses;
    without weights ``costs`` is treated as a sample and its empirical
    distribution is used. ``space="true"`` designs a truthful mechanism for
    strategic agents; ``"virtual"`` takes the costs as given.
    """

    def __init__(self, budget=1.0, space="virtual"):
        self.budget = budget
        self.space = space

    def fit(self, X, y=None, sample_weight=None):
        if self.space not in SPACES:
            raise ValueError(f"space must be one of {SPACES}, got {self.space!r}")
        self.prior_ = _prior(X, sample_weight)
        if self.space == "true":
            self.mechanism_ = design_mechanism(self.prior_, self.budget)
            self.design_ = self.mechanism_.design
            self.menu_ = self.mechanism_.menu
        else:
            self.design_ = design_moment_discrete(self.prior_, self.budget)
        self.probs_ = self.design_.rule.probs
        self.value_ = self.design_.value
        return self

    def predict(self, X):
        """Purchase probability for each cost in ``X`` (support points only)."""
        check_is_fitted(self, "design_")
        costs = as_vector(X, "costs")
        if self.space == "true":
            support = list(self.prior_.costs)
            return np.array([self.probs_[support.index(c)] if c in support else np.nan for c in costs])
        return np.array([alloc_at(self.design_, c) for c in costs])


class RegressionSurveyDesigner(BaseEstimator):
    def __init__(self, budget=1.0, noise_lo=-1.0, noise_hi=1.0):
        self.budget = budget
        self.noise_lo = noise_lo
        self.noise_hi = noise_hi

    def fit(self, X, y=None, sample_weight=None):
        self.prior_ = _prior(X, sample_weight)
        instance = RegressionInstance(self.prior_, self.noise_lo, self.noise_hi, self.budget)
        self.design_ = design_regression(instance)
        self.probs_ = self.design_.rule.probs
        self.objective_ = self.design_.objective
        return self

    def predict(self, X):
        check_is_fitted(self, "design_")
        costs = as_vector(X, "costs")
        idx = np.searchsorted(self.prior_.costs, costs)
        idx = np.clip(idx, 0, self.probs_.size - 1)
        hit = np.isclose(self.prior_.costs[idx], costs, rtol=1e-12, atol=1e-15)
        return np.where(hit, self.probs_[idx], np.nan)


class HorvitzThompsonMean(BaseEstimator):
    """Inverse-probability weighted mean over a population of ``n_population``."""

    def __init__(self, n_population=None):
        self.n_population = n_population

    def fit(self, X, y=None, alloc=None):
        values = np.asarray(X, dtype=float)
        if alloc is None:
            raise ValueError("alloc (purchase probabilities) is required")
        n = self.n_population if self.n_population is not None else values.shape[0]
        self.mean_ = ht_estimate_multi(values, as_vector(alloc, "alloc"), n)
        return self


class WeightedLeastSquares(RegressorMixin, BaseEstimator):
    """Least squares with each purchased row weighted by ``1 / A_i``."""

    def fit(self, X, y, alloc=None):
        X, y = check_X_y(X, y)
        alloc = np.ones(y.size) if alloc is None else as_vector(alloc, "alloc")
        self.coef_ = wls_estimate(X, y, alloc)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return np.asarray(X, dtype=float) @ self.coef_
