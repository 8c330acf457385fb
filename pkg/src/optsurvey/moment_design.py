"""Optimal allocation rules for (multi-dimensional) moment estimation.

All costs handled here are optimization-space costs: for a strategic
population these are the virtual costs of the true prior.
"""

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cost_model import ContinuousCostDistribution, DiscreteCostDistribution
from .errors import IndexOutOfRange, InfeasibleBudget, Infeasible, OutOfSupport
from .game_verify import best_response_adversary, variance

BISECT_MAX_ITER = 200
BISECT_RTOL = 1e-12
_SHAPE_TOL = 1e-12


class DesignCase(str, enum.Enum):
    FLAT_HIGH_BUDGET = "FlatHighBudget"
    POOLED_INTERIOR = "PooledInterior"
    NO_POOL_LOW_BUDGET = "NoPoolLowBudget"


@dataclass(frozen=True, eq=False)
class AllocationRule:
    """Purchase probability per cost type; non-increasing, entries in (0, 1]."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("allocation must be a non-empty vector")
        if np.any(probs <= 0) or np.any(probs > 1 + _SHAPE_TOL):
            raise Infeasible(f"allocation leaves (0, 1]: {probs.tolist()}")
        if np.any(np.diff(probs) > _SHAPE_TOL):
            raise Infeasible(f"allocation is not non-increasing: {probs.tolist()}")
        probs = np.minimum(probs, 1.0)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __len__(self):
        return self.probs.size


@dataclass(frozen=True, eq=False)
class MomentDesign:
    dist: DiscreteCostDistribution
    budget: float
    rule: AllocationRule
    pool_end: int
    pooled_level: float
    alpha: float
    case: DesignCase
    adversary: np.ndarray = field(repr=False)
    value: float
    budget_spend: float
    # Search internals, kept so designs can be audited.
    k_star: int | None = None
    x_star: float | None = None
    k_tilde: int | None = None
    x_tilde: float | None = None
    # number of moment coordinates sharing the rule; value is the total risk
    dim: int = 1

    @property
    def probs(self):
        return self.rule.probs

    def to_dict(self):
        return {
            "kind": "moment",
            "costs": self.dist.costs.tolist(),
            "pmf": self.dist.pmf.tolist(),
            "budget_per_agent": self.budget,
            "probs": self.rule.probs.tolist(),
            "pool_end": self.pool_end,
            "pooled_level": self.pooled_level,
            "alpha": self.alpha,
            "case": self.case.value,
            "adversary": np.asarray(self.adversary).tolist(),
            "value": self.value,
            "budget_spend": self.budget_spend,
            "k_star": self.k_star,
            "x_star": self.x_star,
            "k_tilde": self.k_tilde,
            "x_tilde": self.x_tilde,
            "dim": self.dim,
        }


@dataclass(frozen=True)
class ContinuousDesign:
    dist: ContinuousCostDistribution
    budget: float
    x_star: float
    pooled_level: float
    alpha: float

    def __call__(self, c):
        return alloc_at(self, c)

    def to_dict(self):
        return {
            "kind": "continuous",
            **self.dist.to_dict(),
            "budget_per_agent": self.budget,
            "x_star": self.x_star,
            "pooled_level": self.pooled_level,
            "alpha": self.alpha,
        }


# -- Q, R, B --------------------------------------------------------------

def _check_k(dist, k):
    if not 0 <= k <= len(dist):
        raise IndexOutOfRange(f"k={k} outside 0..{len(dist)}")


def _threshold_cost(dist, k):
    return 0.0 if k == 0 else float(dist.costs[k - 1])


def q_fun(dist, k, x):
    """Q(k, x): head spend at true cost plus tail spend scaled by sqrt(c_k / x)."""
    _check_k(dist, k)
    c, pi = dist.costs, dist.pmf
    ck = _threshold_cost(dist, k)
    head = float(pi[:k] @ c[:k])
    if ck == 0.0:
        return head
    return head + float(pi[k:] @ np.sqrt(c[k:] * ck / x))


def r_fun(dist, k, x):
    """R(k, x) = 2 <pi, q> for the adversary q_t = x c_t / c_k (t <= k), 1 above."""
    _check_k(dist, k)
    c, pi = dist.costs, dist.pmf
    ck = _threshold_cost(dist, k)
    tail = float(pi[k:].sum())
    if k == 0:
        return 2.0 * tail
    if ck == 0.0:
        # only c_1 can be zero; the ratio c_1 / c_1 is taken as 1
        return 2.0 * (float(pi[0]) * x + tail)
    return 2.0 * (float(pi[:k] @ c[:k]) * x / ck + tail)


def b_fun(dist, k, x):
    return q_fun(dist, k, x) / r_fun(dist, k, x)


def _profiles_at_one(dist):
    """Q(k, 1), R(k, 1), B(k, 1) for k = 0..|C| in one pass."""
    c, pi = dist.costs, dist.pmf
    ck = np.concatenate(([0.0], c))
    head_c = np.concatenate(([0.0], np.cumsum(pi * c)))
    tail_sqrt = np.concatenate((np.cumsum((pi * np.sqrt(c))[::-1])[::-1], [0.0]))
    tail_pi = np.concatenate((np.cumsum(pi[::-1])[::-1], [0.0]))
    q = head_c + np.sqrt(ck) * tail_sqrt
    with np.errstate(divide="ignore", invalid="ignore"):
        head_ratio = np.where(ck > 0, head_c / np.where(ck > 0, ck, 1.0), 0.0)
    if c[0] == 0.0:
        head_ratio[1] = pi[0]
    r = 2.0 * (head_ratio + tail_pi)
    return q, r, q / r


def _bisect_decreasing(func, target, lo, hi):
    """Root of a continuous decreasing ``func`` on [lo, hi]."""
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if func(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BISECT_RTOL * hi * 1e-3:
            break
    return 0.5 * (lo + hi)


# -- discrete design ------------------------------------------------------

def _pool_spend(dist, pool_end):
    return float(dist.pmf[:pool_end] @ dist.costs[:pool_end])


def _alpha(dist, budget, pool_end, level):
    tail = float(dist.pmf[pool_end:] @ np.sqrt(dist.costs[pool_end:]))
    if tail == 0.0:
        return 0.0
    return (budget - level * _pool_spend(dist, pool_end)) / tail


def _shape(dist, pool_end, level, alpha):
    probs = np.empty(len(dist))
    probs[:pool_end] = level
    probs[pool_end:] = alpha / np.sqrt(dist.costs[pool_end:])
    return probs


def _threshold_adversary(dist, k, x):
    c = dist.costs
    q = np.ones(len(dist))
    ck = _threshold_cost(dist, k)
    q[:k] = x if ck == 0.0 else c[:k] * x / ck
    return np.clip(q, 0.0, 1.0)


def design_moment_discrete(dist, budget, dim=1):
    """Exact variance-minimizing allocation for a discrete cost prior.

    Returns the allocation together with the adversary's worst-case
    conditional probabilities, so the pair can be certified as an equilibrium.
    With ``dim`` coordinates the worst case hits every coordinate at once, so
    the rule is the scalar one and the value (total risk) scales by ``dim``.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    design = _design_scalar(dist, budget)
    if dim == 1:
        return design
    return replace(design, dim=dim, value=dim * design.value)


def _design_scalar(dist, budget):
    if not isinstance(dist, DiscreteCostDistribution):
        dist = DiscreteCostDistribution(*dist)
    budget = float(budget)
    if not budget > 0:
        raise InfeasibleBudget(f"budget per agent must be positive, got {budget}")
    c, pi = dist.costs, dist.pmf
    size = len(dist)
    mean_cost = dist.mean()
    k_star = x_star = k_tilde = x_tilde = None

    if budget >= mean_cost:
        probs = np.ones(size)
        q = best_response_adversary(probs, dist)
        return _finish(dist, budget, probs, size, 1.0, 0.0, DesignCase.FLAT_HIGH_BUDGET, q)

    mean_sqrt = dist.mean_sqrt()
    if c[0] > 0 and budget <= math.sqrt(c[0]) * mean_sqrt / 2.0:
        probs = budget / (np.sqrt(c) * mean_sqrt)
        return _finish(
            dist, budget, probs, 0, float(probs[0]), budget / mean_sqrt,
            DesignCase.NO_POOL_LOW_BUDGET, np.ones(size),
        )

    q_one, r_one, b_one = _profiles_at_one(dist)
    k_star = int(np.flatnonzero(b_one <= budget).max())
    if c[k_star - 1] == 0.0:
        # zero threshold cost: B(k, x) degenerates and the tail stays fully bought
        x_star = 0.0
    elif k_star == size:
        # B(|C|, x) = c_max / (2x)
        x_star = c[-1] / (2.0 * budget)
    else:
        ratio = 0.0 if k_star == size else c[k_star - 1] / c[k_star]
        s = _bisect_decreasing(
            lambda s: b_fun(dist, k_star, s * s), budget, math.sqrt(ratio), 1.0
        )
        x_star = s * s
    r_star = r_fun(dist, k_star, x_star)

    if r_star >= 1.0:
        pool_end, level = k_star, 1.0 / r_star
        q = _threshold_adversary(dist, k_star, x_star)
    else:
        pool_end, level = int(np.flatnonzero(budget > q_one).max()), 1.0
        valid = np.flatnonzero((r_one[:-1] > 1.0) & (r_one[1:] <= 1.0))
        k_tilde = int(valid.min())
        head = float(pi[0]) if c[k_tilde - 1] == 0.0 else float(
            pi[:k_tilde] @ c[:k_tilde]
        ) / c[k_tilde - 1]
        x_tilde = (0.5 - float(pi[k_tilde:].sum())) / head
        q = _threshold_adversary(dist, k_tilde, x_tilde)

    if np.any(c[pool_end:] == 0.0):
        raise Infeasible("zero-cost type left outside the pooling region")
    alpha = _alpha(dist, budget, pool_end, level)
    probs = _shape(dist, pool_end, level, alpha)
    return _finish(
        dist, budget, probs, pool_end, level, alpha, DesignCase.POOLED_INTERIOR, q,
        k_star=k_star, x_star=x_star, k_tilde=k_tilde, x_tilde=x_tilde,
    )


def _finish(dist, budget, probs, pool_end, level, alpha, case, q, **search):
    rule = AllocationRule(probs)
    q = np.asarray(q, dtype=float)
    q.setflags(write=False)
    return MomentDesign(
        dist=dist,
        budget=budget,
        rule=rule,
        pool_end=int(pool_end),
        pooled_level=float(level),
        alpha=float(alpha),
        case=case,
        adversary=q,
        value=variance(rule.probs, q, dist),
        budget_spend=float(dist.pmf @ (dist.costs * rule.probs)),
        **search,
    )


# -- continuous design ----------------------------------------------------

def _split_expect(dist, func_lo, func_hi, x):
    """E[func_lo(c) 1{c <= x}] + E[func_hi(c) 1{c > x}]."""
    from scipy import integrate

    def piece(func, a, b):
        if b <= a:
            return 0.0
        val, _ = integrate.quad(
            lambda c: func(c) * float(dist.pdf(c)), a, b, epsabs=1e-14, epsrel=1e-13, limit=200
        )
        return val

    return piece(func_lo, 0.0, x), piece(func_hi, x, 1.0)


def q_infinity(dist, x):
    lo, hi = _split_expect(dist, lambda c: c, lambda c: math.sqrt(c * x), x)
    return lo + hi


def r_infinity(dist, x):
    lo, hi = _split_expect(dist, lambda c: c / x, lambda c: 1.0, x)
    return 2.0 * (lo + hi)


def g_infinity(dist, x):
    return q_infinity(dist, x) / max(1.0, r_infinity(dist, x))


def design_moment_continuous(dist, budget):
    budget = float(budget)
    if not budget > 0:
        raise InfeasibleBudget(f"budget per agent must be positive, got {budget}")
    mean_cost = dist.mean()
    if budget >= g_infinity(dist, 1.0):
        # everyone pooled; the flat level is whatever the budget affords
        return ContinuousDesign(dist, budget, 1.0, min(1.0, budget / mean_cost), 0.0)
    lo, hi = 0.0, 1.0
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if g_infinity(dist, mid) < budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15:
            break
    x_star = 0.5 * (lo + hi)
    level = 1.0 / max(1.0, r_infinity(dist, x_star))
    pooled, _ = _split_expect(dist, lambda c: c, lambda c: 0.0, x_star)
    _, tail = _split_expect(dist, lambda c: 0.0, math.sqrt, x_star)
    alpha = (budget - level * pooled) / tail
    return ContinuousDesign(dist, budget, x_star, level, alpha)


def alloc_at(design, c):
    """Allocation probability a design assigns to cost ``c``."""
    c = float(c)
    if isinstance(design, ContinuousDesign):
        if not 0.0 < c <= 1.0:
            raise OutOfSupport(f"cost {c} outside (0, 1]")
        if c <= design.x_star:
            return design.pooled_level
        return design.alpha / math.sqrt(c)
    costs = design.dist.costs
    idx = int(np.searchsorted(costs, c))
    for j in (idx - 1, idx):
        if 0 <= j < costs.size and math.isclose(costs[j], c, rel_tol=1e-12, abs_tol=1e-15):
            return float(design.rule.probs[j])
    raise OutOfSupport(f"cost {c} is not a support point")
