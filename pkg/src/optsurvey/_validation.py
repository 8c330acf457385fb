"""Input validation helpers shared by the functional core and the estimators."""

import numpy as np
from sklearn.utils.validation import column_or_1d

from .errors import DimensionMismatch, InvalidDistribution, ZeroAllocation

PROB_TOL = 1e-12


def as_vector(x, name="array"):
    """Coerce ``x`` to a finite 1-d float array."""
    try:
        arr = column_or_1d(np.asarray(x, dtype=float), warn=False)
    except ValueError as exc:
        raise DimensionMismatch(f"{name} must be one-dimensional") from exc
    if not np.all(np.isfinite(arr)):
        raise InvalidDistribution(f"{name} contains non-finite entries")
    return arr


def check_costs_pmf(costs, pmf):
    costs = as_vector(costs, "costs")
    pmf = as_vector(pmf, "pmf")
    if costs.shape != pmf.shape:
        raise DimensionMismatch(
            f"costs has {costs.size} entries but pmf has {pmf.size}"
        )
    if costs.size == 0:
        raise InvalidDistribution("empty cost support")
    if costs[0] < 0:
        raise InvalidDistribution("costs must be non-negative")
    if np.any(np.diff(costs) <= 0):
        raise InvalidDistribution("costs must be strictly increasing")
    if np.any(pmf <= 0):
        raise InvalidDistribution("pmf entries must be positive")
    if abs(pmf.sum() - 1.0) > PROB_TOL:
        raise InvalidDistribution(f"pmf sums to {pmf.sum()!r}, not 1")
    return costs, pmf


def check_aligned(*arrays, names=None):
    sizes = {np.shape(a)[0] for a in arrays}
    if len(sizes) != 1:
        label = ", ".join(names) if names else "inputs"
        raise DimensionMismatch(f"{label} are not aligned: sizes {sorted(sizes)}")


def check_positive_alloc(alloc, name="allocation"):
    alloc = as_vector(alloc, name)
    if np.any(alloc <= 0):
        raise ZeroAllocation(f"{name} has non-positive entries")
    return alloc


def check_unit_interval(q, name="q"):
    q = as_vector(q, name)
    if np.any(q < 0) or np.any(q > 1):
        raise InvalidDistribution(f"{name} entries must lie in [0, 1]")
    return q
