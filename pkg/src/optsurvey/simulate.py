"""Monte Carlo surveys: agents pick menu items, the analyst reweights by 1/A."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_vector, check_unit_interval
from .errors import InvalidConfig, SingularGram, ZeroAllocation

MEAN_ZERO_TOL = 1e-9
_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class DataModel:
    """Binary worst-case data given cost type.

    ``kind="moment"``: each of ``dim`` coordinates is 1 w.p. ``q[t]``.
    ``kind="regression"``: ``y = x @ theta + eps`` with ``x ~ N(0, scale**2 I)``
    and ``eps = U`` w.p. ``q[t]``, else ``L``.
    """

    kind: str
    q: np.ndarray
    dim: int = 1
    theta: np.ndarray | None = None
    noise_lo: float = 0.0
    noise_hi: float = 0.0
    feature_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "q", check_unit_interval(self.q))
        if self.kind == "moment":
            if int(self.dim) < 1:
                raise InvalidConfig("dim must be positive")
            object.__setattr__(self, "dim", int(self.dim))
        elif self.kind == "regression":
            if self.theta is None:
                raise InvalidConfig("regression model needs theta")
            theta = as_vector(self.theta, "theta")
            object.__setattr__(self, "theta", theta)
            object.__setattr__(self, "dim", theta.size)
            if not self.noise_lo <= 0 <= self.noise_hi:
                raise InvalidConfig("noise range must satisfy L <= 0 <= U")
            if not self.feature_scale > 0:
                raise InvalidConfig("feature_scale must be positive")
        else:
            raise InvalidConfig(f"unknown data model {self.kind!r}")

    def check_mean_zero(self, pmf):
        """Regression noise must average to zero under the cost prior."""
        if self.kind != "regression":
            return
        mean = float(np.asarray(pmf) @ ((1 - self.q) * self.noise_lo + self.q * self.noise_hi))
        if abs(mean) > MEAN_ZERO_TOL:
            raise InvalidConfig(f"noise mean is {mean}, not zero")

    def truth(self, pmf):
        if self.kind == "moment":
            return np.full(self.dim, float(np.asarray(pmf) @ self.q))
        return self.theta.copy()

    def second_moment(self):
        """``E[value**2 | t]`` per type for the scalar variance formula."""
        if self.kind == "moment":
            return self.q
        return (1 - self.q) * self.noise_lo**2 + self.q * self.noise_hi**2


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    reps: int
    seed: int
    adversarial: bool = False

    def __post_init__(self):
        if int(self.n) < 1 or int(self.reps) < 1:
            raise InvalidConfig("n and reps must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")


@dataclass(eq=False)
class SurveySample:
    """One survey round. Per-agent arrays cover all ``n`` agents."""

    n: int
    types: np.ndarray
    alloc: np.ndarray
    selected: np.ndarray
    payments: np.ndarray
    values: np.ndarray = field(repr=False)
    features: np.ndarray | None = field(default=None, repr=False)

    @property
    def spend(self):
        return float(self.payments.sum())


@dataclass(eq=False)
class SimulationReport:
    mean_estimate: np.ndarray
    empirical_variance_scaled: float
    mean_spend_per_agent: float
    predicted_value: float
    truth: np.ndarray
    standard_error: np.ndarray
    estimates: np.ndarray = field(repr=False)
    spends: np.ndarray = field(repr=False)

    def summary(self):
        return {
            "mean_estimate": self.mean_estimate.tolist(),
            "empirical_variance_scaled": self.empirical_variance_scaled,
            "mean_spend_per_agent": self.mean_spend_per_agent,
            "predicted_value": self.predicted_value,
            "truth": self.truth.tolist(),
            "standard_error": self.standard_error.tolist(),
        }

    def write_csv(self, path):
        width = self.estimates.shape[1]
        names = ["estimate"] if width == 1 else [f"estimate_{j}" for j in range(width)]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rep", *names, "spend"])
            for rep, (est, spend) in enumerate(zip(self.estimates, self.spends)):
                writer.writerow([rep, *map(repr, est.tolist()), repr(float(spend))])

    def write_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def rep_generator(seed, rep):
    """Counter-based stream for one replication."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(rep)])))


def run_survey(model, dist, menu, n, rng):
    """Draw ``n`` agents, let each take its best menu item, buy, and record data."""
    pmf = np.asarray(dist.pmf, dtype=float)
    choice = np.array([menu.choose(c) for c in dist.costs])
    item_prob, item_price = menu.probs[choice], menu.prices[choice]

    types = rng.choice(pmf.size, size=n, p=pmf)
    alloc = item_prob[types]
    selected = rng.random(n) < alloc
    payments = np.where(selected, item_price[types], 0.0)

    q = model.q[types]
    features = None
    if model.kind == "moment":
        values = (rng.random((n, model.dim)) < q[:, None]).astype(float)
    else:
        features = rng.normal(0.0, model.feature_scale, size=(n, model.dim))
        noise = np.where(rng.random(n) < q, model.noise_hi, model.noise_lo)
        values = features @ model.theta + noise
    return SurveySample(n, types, alloc, selected, payments, values, features)


def ht_estimate(values, alloc, n):
    """Horvitz-Thompson mean: ``(1/n) * sum_{i in S} m_i / A_i``."""
    values = np.asarray(values, dtype=float)
    alloc = np.asarray(alloc, dtype=float)
    if values.size == 0:
        return 0.0
    if np.any(alloc <= 0):
        raise ZeroAllocation("sampled agents need positive purchase probability")
    return float(np.sum(values / alloc) / n)


def ht_estimate_multi(values, alloc, n):
    """Coordinatewise Horvitz-Thompson for an ``(|S|, d)`` array."""
    values = np.asarray(values, dtype=float)
    alloc = np.asarray(alloc, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] == 0:
        return np.zeros(values.shape[1])
    if np.any(alloc <= 0):
        raise ZeroAllocation("sampled agents need positive purchase probability")
    return (values / alloc[:, None]).sum(axis=0) / n


def wls_estimate(features, targets, alloc):
    """Inverse-probability weighted least squares on the purchased rows."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    targets = np.asarray(targets, dtype=float)
    alloc = np.asarray(alloc, dtype=float)
    if np.any(alloc <= 0):
        raise ZeroAllocation("sampled agents need positive purchase probability")
    weighted = features / alloc[:, None]
    gram = weighted.T @ features
    if features.shape[0] < features.shape[1] or np.linalg.cond(gram) > _COND_LIMIT:
        raise SingularGram("weighted Gram matrix is singular")
    return np.linalg.solve(gram, weighted.T @ targets)


def estimate(model, sample):
    keep = sample.selected
    if model.kind == "moment":
        return ht_estimate_multi(sample.values[keep], sample.alloc[keep], sample.n)
    return wls_estimate(sample.features[keep], sample.values[keep], sample.alloc[keep])


def predicted_value(model, dist, menu):
    """Analytic n-scaled variance (moments) or asymptotic risk (regression)."""
    pmf = np.asarray(dist.pmf, dtype=float)
    choice = np.array([menu.choose(c) for c in dist.costs])
    alloc = menu.probs[choice]
    if model.kind == "moment":
        mass = float(pmf @ model.q)
        return model.dim * (float(pmf @ (model.q / alloc)) - mass * mass)
    return model.dim / model.feature_scale**2 * float(pmf @ (model.second_moment() / alloc))


def monte_carlo(model, dist, menu, config):
    """Repeat the survey ``reps`` times; replication ``r`` uses ``rep_generator(seed, r)``."""
    model.check_mean_zero(dist.pmf)
    truth = model.truth(dist.pmf)
    estimates = np.empty((config.reps, model.dim))
    spends = np.empty(config.reps)
    for rep in range(config.reps):
        sample = run_survey(model, dist, menu, config.n, rep_generator(config.seed, rep))
        estimates[rep] = estimate(model, sample)
        spends[rep] = sample.spend / config.n

    if model.kind == "moment":
        spread = estimates.var(axis=0, ddof=1).sum() if config.reps > 1 else 0.0
    else:
        spread = float(np.mean(np.sum((estimates - truth) ** 2, axis=1)))
    se = estimates.std(axis=0, ddof=1) / np.sqrt(config.reps) if config.reps > 1 else np.zeros(model.dim)
    return SimulationReport(
        mean_estimate=estimates.mean(axis=0),
        empirical_variance_scaled=float(config.n * spread),
        mean_spend_per_agent=float(spends.mean()),
        predicted_value=predicted_value(model, dist, menu),
        truth=truth,
        standard_error=se,
        estimates=estimates,
        spends=spends,
    )
