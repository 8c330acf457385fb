"""Cost priors, virtual costs and discretization."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_costs_pmf
from .errors import BadGrid, InvalidDistribution, NonRegular, OutOfSupport

REGULARITY_GRID = 10_001
REGULARITY_TOL = 1e-10


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteCostDistribution:
    """Finite cost support ``costs`` (strictly increasing) with masses ``pmf``."""

    costs: np.ndarray
    pmf: np.ndarray

    def __post_init__(self):
        costs, pmf = check_costs_pmf(self.costs, self.pmf)
        object.__setattr__(self, "costs", _frozen(costs))
        object.__setattr__(self, "pmf", _frozen(pmf))

    @classmethod
    def from_samples(cls, samples):
        """Empirical distribution of observed costs."""
        values, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
        return cls(values, counts / counts.sum())

    def __len__(self):
        return self.costs.size

    def __eq__(self, other):
        if not isinstance(other, DiscreteCostDistribution):
            return NotImplemented
        return np.array_equal(self.costs, other.costs) and np.array_equal(
            self.pmf, other.pmf
        )

    @property
    def cdf(self):
        """F(c_t) for every support point."""
        return np.cumsum(self.pmf)

    def mean(self):
        return float(self.pmf @ self.costs)

    def mean_sqrt(self):
        return float(self.pmf @ np.sqrt(self.costs))

    def scaled(self, factor):
        return DiscreteCostDistribution(self.costs * factor, self.pmf)

    def to_dict(self):
        return {"costs": self.costs.tolist(), "pmf": self.pmf.tolist()}


FAMILIES = ("uniform", "power")


@dataclass(frozen=True)
class ContinuousCostDistribution:
    """Atomless prior on (0, 1].

    ``uniform`` is the flat density; ``power`` has density ``(p+1) c**p``.
    """

    kind: str = "uniform"
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise InvalidDistribution(f"unknown family {self.kind!r}")
        if self.kind == "uniform" and self.p != 0.0:
            raise InvalidDistribution("uniform family takes no exponent")
        if not self.p > -1:
            raise InvalidDistribution("power exponent must exceed -1")

    def pdf(self, c):
        c = np.asarray(c, dtype=float)
        inside = (c > 0) & (c <= 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = (self.p + 1.0) * np.power(np.where(inside, c, 1.0), self.p)
        return np.where(inside, dens, 0.0)

    def cdf(self, c):
        c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
        return np.power(c, self.p + 1.0)

    def mean(self):
        return (self.p + 1.0) / (self.p + 2.0)

    def expect(self, func):
        """E[func(c)] by adaptive quadrature."""
        from scipy import integrate

        val, _ = integrate.quad(
            lambda c: func(c) * float(self.pdf(c)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200
        )
        return val

    def to_dict(self):
        return {"family": self.kind, "p": self.p}


@dataclass(frozen=True, eq=False)
class VirtualCostDistribution:
    base: DiscreteCostDistribution
    virtual_costs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "virtual_costs", _frozen(self.virtual_costs))

    @property
    def distribution(self):
        """Distribution of virtual costs (same masses, same order)."""
        return DiscreteCostDistribution(self.virtual_costs, self.base.pmf)


def _virtual_costs_raw(dist):
    costs, pmf = dist.costs, dist.pmf
    prev_costs = np.concatenate(([0.0], costs[:-1]))
    prev_cdf = np.concatenate(([0.0], np.cumsum(pmf)[:-1]))
    return costs + (costs - prev_costs) * prev_cdf / pmf


def virtual_costs_discrete(dist):
    """Information-rent adjusted costs of a discrete prior.

    Raises :class:`NonRegular` when the result is not strictly increasing,
    since non-regular priors would need ironing.
    """
    phi = _virtual_costs_raw(dist)
    if np.any(np.diff(phi) <= 0):
        raise NonRegular(f"virtual costs are not strictly increasing: {phi.tolist()}")
    return VirtualCostDistribution(dist, phi)


def virtual_cost_continuous(dist, c):
    c = float(c)
    if not 0.0 < c <= 1.0:
        raise OutOfSupport(f"cost {c} outside (0, 1]")
    dens = float(dist.pdf(c))
    if dens <= 0:
        raise OutOfSupport(f"density vanishes at {c}")
    return c + float(dist.cdf(c)) / dens


def check_regular(dist):
    if isinstance(dist, DiscreteCostDistribution):
        return bool(np.all(np.diff(_virtual_costs_raw(dist)) > 0))
    grid = np.linspace(0.0, 1.0, REGULARITY_GRID + 1)[1:]
    phi = grid + dist.cdf(grid) / dist.pdf(grid)
    return bool(np.all(np.diff(phi) > -REGULARITY_TOL))


def discretize(dist, eps):
    """Mass of each cell ``((t-1)eps, t eps]`` placed at its right endpoint."""
    if not 0 < eps <= 1:
        raise BadGrid(f"eps={eps} outside (0, 1]")
    cells = int(round(1.0 / eps))
    if abs(cells * eps - 1.0) > 1e-9:
        raise BadGrid(f"1/eps={1.0 / eps} is not an integer")
    grid = np.arange(1, cells + 1) / cells
    mass = np.diff(dist.cdf(np.concatenate(([0.0], grid))))
    keep = mass > 0
    return DiscreteCostDistribution(grid[keep], mass[keep] / mass[keep].sum())
