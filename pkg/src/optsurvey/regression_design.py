"""Optimal allocation rules for regression data acquisition.

The worst-case noise is two-point on ``{L, U}`` with mean zero; its
correlation with cost solves a fractional knapsack, after which the design
problem is a weighted water-filling with one pooled stretch around the
knapsack's split type ``t_star``. Type indices in results are 1-based.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cost_model import DiscreteCostDistribution
from .errors import DegenerateNoise, Infeasible, InfeasibleBudget, InvalidConfig, TooLarge
from .game_verify import ORACLE_MAX_TYPES
from .moment_design import AllocationRule

BUDGET_TOL = 1e-9
_FEAS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RegressionInstance:
    costs_dist: DiscreteCostDistribution
    noise_lo: float
    noise_hi: float
    budget_per_agent: float

    def __post_init__(self):
        if not isinstance(self.costs_dist, DiscreteCostDistribution):
            object.__setattr__(self, "costs_dist", DiscreteCostDistribution(*self.costs_dist))
        lo, hi = float(self.noise_lo), float(self.noise_hi)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > 0 or hi < 0:
            raise InvalidConfig(f"noise range must satisfy L <= 0 <= U, got [{lo}, {hi}]")
        object.__setattr__(self, "noise_lo", lo)
        object.__setattr__(self, "noise_hi", hi)
        object.__setattr__(self, "budget_per_agent", float(self.budget_per_agent))

    @property
    def swapped(self):
        return self.noise_lo**2 > self.noise_hi**2

    def canonical(self):
        """Same instance with ``L**2 <= U**2`` (negating the noise if needed)."""
        if not self.swapped:
            return self
        return RegressionInstance(self.costs_dist, -self.noise_hi, -self.noise_lo, self.budget_per_agent)

    def to_dict(self):
        return {
            **self.costs_dist.to_dict(),
            "L": self.noise_lo,
            "U": self.noise_hi,
            "budget_per_agent": self.budget_per_agent,
        }


@dataclass(frozen=True, eq=False)
class KnapsackAdversary:
    """Worst-case noise: ``eps = U`` w.p. ``q_t`` and ``L`` otherwise, per type."""

    t_star: int
    q_star: float
    r_sq: float
    gamma: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "t_star": self.t_star,
            "q_star": self.q_star,
            "r_sq": self.r_sq,
            "gamma": self.gamma.tolist(),
            "q": self.q.tolist(),
        }


def adversary_knapsack(instance):
    lo, hi = instance.noise_lo, instance.noise_hi
    if lo == 0 or hi == 0:
        raise DegenerateNoise(f"mean-zero noise on [{lo}, {hi}] is identically zero")
    pi = instance.costs_dist.pmf
    capacity = -lo / (hi - lo)
    tails = np.concatenate((np.cumsum(pi[::-1])[::-1][1:], [0.0]))
    idx = int(np.flatnonzero(capacity > tails)[0])
    q_star = min(1.0, (capacity - tails[idx]) / pi[idx])
    r_sq = (hi * hi - lo * lo) * q_star + lo * lo
    gamma = np.full(pi.size, abs(lo))
    gamma[idx] = math.sqrt(r_sq)
    gamma[idx + 1:] = hi
    q = np.zeros(pi.size)
    q[idx] = q_star
    q[idx + 1:] = 1.0
    return KnapsackAdversary(idx + 1, float(q_star), float(r_sq), gamma, q)


def regression_objective(alloc, instance, adversary=None):
    """``sum_t pi_t gamma_t**2 / A_t`` against the knapsack adversary."""
    from ._validation import check_aligned, check_positive_alloc

    alloc = check_positive_alloc(alloc)
    if adversary is None:
        adversary = adversary_knapsack(instance.canonical())
    pi = instance.costs_dist.pmf
    check_aligned(alloc, pi, names=("allocation", "pmf"))
    return float(pi @ (adversary.gamma**2 / alloc))


@dataclass(frozen=True, eq=False)
class RegressionDesign:
    instance: RegressionInstance
    rule: AllocationRule
    t_minus: int
    t_plus: int
    t_one: int
    pooled_level: float
    mu: float
    objective: float
    swapped: bool
    adversary: KnapsackAdversary | None = None
    degenerate: bool = False

    @property
    def probs(self):
        return self.rule.probs

    @property
    def t_star(self):
        return None if self.adversary is None else self.adversary.t_star

    @property
    def budget(self):
        return self.instance.budget_per_agent

    def to_dict(self):
        out = {
            "kind": "regression",
            "instance": self.instance.to_dict(),
            "probs": self.rule.probs.tolist(),
            "t_minus": self.t_minus,
            "t_plus": self.t_plus,
            "t_one": self.t_one,
            "t_star": self.t_star,
            "pooled_level": self.pooled_level,
            "mu": self.mu,
            "objective": self.objective,
            "swapped": self.swapped,
            "adversary": None if self.adversary is None else self.adversary.to_dict(),
            "degenerate": self.degenerate,
        }
        if self.degenerate:
            out["warning"] = "noise is identically zero; every feasible rule is optimal"
        return out


def _flat_design(instance, adversary, degenerate):
    dist = instance.costs_dist
    size = len(dist)
    level = min(1.0, instance.budget_per_agent / dist.mean()) if dist.mean() > 0 else 1.0
    probs = np.full(size, level)
    if adversary is None:
        objective, mu = 0.0, 0.0
    else:
        objective = float(dist.pmf @ (adversary.gamma**2 / probs))
        # the smallest multiplier that caps every type
        mu = float(np.max(np.sqrt(dist.costs) / adversary.gamma))
    return RegressionDesign(
        instance=instance,
        rule=AllocationRule(probs),
        t_minus=1,
        t_plus=size,
        t_one=0,
        pooled_level=level,
        mu=mu,
        objective=objective,
        swapped=instance.swapped,
        adversary=adversary,
        degenerate=degenerate,
    )


def _mu_candidates(budget_rest, kw, s_pool, g_pool, edges):
    """Multipliers at which a tuple's rule can be optimal.

    ``edges`` holds ``(gamma, cost, capped)`` for the neighbours just outside
    the pool; a neighbour fixes ``mu`` by meeting the pooled level.
    """
    cands = []
    if kw > 0:
        # pooled level at the cap (a free pool sits there and costs nothing)
        cands.append((budget_rest - s_pool) / kw)
        if s_pool > 0:
            cands.append(budget_rest / (kw + math.sqrt(g_pool * s_pool)))
        for gamma, cost, capped in edges:
            if not capped and s_pool > 0 and cost > 0:
                cands.append(budget_rest / (s_pool * gamma / math.sqrt(cost) + kw))
    return [mu for mu in cands if mu > 0 and math.isfinite(mu)]


def _evaluate(costs, pi, gamma, budget, pool, capped, mu):
    """Allocation for a tuple at multiplier ``mu``, or None if inconsistent."""
    size = costs.size
    outside = ~pool
    wet = outside & ~capped
    with np.errstate(divide="ignore"):
        free = np.where(costs > 0, mu * gamma / np.sqrt(np.where(costs > 0, costs, 1.0)), np.inf)
    # capped types must want at least 1, uncapped ones strictly less
    if np.any(free[capped] < 1 - _FEAS_TOL) or np.any(free[wet] > 1 + _FEAS_TOL):
        return None
    s_pool = float(pi[pool] @ costs[pool])
    rest = budget - float(pi[capped] @ costs[capped]) - float(pi[wet] @ (costs[wet] * free[wet]))
    if s_pool > 0:
        level = rest / s_pool
    elif rest >= -BUDGET_TOL:
        level = 1.0
    else:
        return None
    if not 0 < level <= 1 + _FEAS_TOL:
        return None
    alloc = np.empty(size)
    alloc[capped] = 1.0
    alloc[wet] = free[wet]
    alloc[pool] = min(level, 1.0)
    if np.any(np.diff(alloc) > _FEAS_TOL * max(1.0, alloc.max())):
        return None
    if abs(float(pi @ (costs * alloc)) - budget) > BUDGET_TOL * max(1.0, budget):
        return None
    return alloc, min(level, 1.0)


def design_regression(instance):
    """Budget-feasible allocation minimizing the worst-case asymptotic risk.

    Searches every pooled stretch ``[t_minus, t_plus]`` containing the
    knapsack split type and every cap index ``t_one``; for each, the
    multiplier ``mu`` is taken at the stationary point of the reduced
    one-variable objective or where a constraint becomes tight. The
    cheapest consistent candidate wins, ties going to the lexicographically
    first tuple.
    """
    budget = instance.budget_per_agent
    if not budget > 0:
        raise InfeasibleBudget(f"budget per agent must be positive, got {budget}")
    canon = instance.canonical()
    dist = instance.costs_dist
    if canon.noise_lo == 0:
        return _flat_design(instance, None, degenerate=True)
    adversary = adversary_knapsack(canon)
    if budget >= dist.mean():
        return _flat_design(instance, adversary, degenerate=False)

    costs, pi, gamma = dist.costs, dist.pmf, adversary.gamma
    size = costs.size
    t_star = adversary.t_star - 1
    index = np.arange(size)
    best = None
    for lo in range(t_star + 1):
        for hi in range(t_star, size):
            pool = (index >= lo) & (index <= hi)
            s_pool = float(pi[pool] @ costs[pool])
            g_pool = float(pi[pool] @ gamma[pool] ** 2)
            for t_one in range(size + 1):
                capped = (index < t_one) & ~pool
                wet = ~pool & ~capped
                kw = float(pi[wet] @ (gamma[wet] * np.sqrt(costs[wet])))
                rest = budget - float(pi[capped] @ costs[capped])
                edges = [
                    (gamma[j], costs[j], bool(capped[j]))
                    for j in (lo - 1, hi + 1)
                    if 0 <= j < size
                ]
                if kw > 0:
                    mus = _mu_candidates(rest, kw, s_pool, g_pool, edges)
                elif s_pool > 0 and g_pool > 0:
                    # no free types: the budget fixes the pooled level
                    mus = [rest / s_pool * math.sqrt(s_pool / g_pool)] if rest > 0 else []
                else:
                    mus = []
                for mu in mus:
                    found = _evaluate(costs, pi, gamma, budget, pool, capped, mu)
                    if found is None:
                        continue
                    alloc, level = found
                    value = float(pi @ (gamma**2 / alloc))
                    if best is None or value < best[0] * (1 - 1e-12):
                        best = (value, lo, hi, t_one, mu, alloc, level)
    if best is None:
        raise Infeasible("no pooled stretch yields a consistent allocation")
    value, lo, hi, t_one, mu, alloc, level = best
    return RegressionDesign(
        instance=instance,
        rule=AllocationRule(alloc),
        t_minus=lo + 1,
        t_plus=hi + 1,
        t_one=t_one,
        pooled_level=level,
        mu=mu,
        objective=value,
        swapped=instance.swapped,
        adversary=adversary,
    )


def brute_force_regression(instance, a_step):
    """Grid minimum of the regression objective over monotone feasible rules.

    The adversary is held at its knapsack response. All but the last
    coordinate run over the grid; the objective falls as any coordinate
    grows, so the last one takes the largest value the budget and
    monotonicity allow.
    """
    dist = instance.costs_dist
    size = len(dist)
    if size > ORACLE_MAX_TYPES:
        raise TooLarge(f"oracle supports at most {ORACLE_MAX_TYPES} types, got {size}")
    if not 0 < a_step <= 0.5:
        raise ValueError(f"grid step {a_step} outside (0, 0.5]")
    canon = instance.canonical()
    if canon.noise_lo == 0:
        return 0.0
    gamma_sq = adversary_knapsack(canon).gamma ** 2
    costs, pi = dist.costs, dist.pmf
    budget = instance.budget_per_agent
    count = int(round(1.0 / a_step))
    grid = np.arange(1, count + 1) / count

    best = math.inf
    outer = size - 2
    for prefix in itertools.product(range(count), repeat=max(outer, 0)):
        if any(prefix[i] < prefix[i + 1] for i in range(len(prefix) - 1)):
            continue
        head = grid[list(prefix)]
        head_spend = float(pi[:outer] @ (costs[:outer] * head))
        head_val = float(pi[:outer] @ (gamma_sq[:outer] / head))
        if size == 1:
            last = 1.0 if costs[0] == 0 else min(1.0, budget / (pi[0] * costs[0]))
            return float(pi[0] * gamma_sq[0] / last)
        # vectorize over the penultimate coordinate
        top = prefix[-1] if prefix else count - 1
        pen = grid[: top + 1]
        rest = budget - head_spend - pi[-2] * costs[-2] * pen
        last = pen.copy()
        if costs[-1] > 0:
            last = np.minimum(last, rest / (pi[-1] * costs[-1]))
        else:
            last = np.where(rest >= 0, last, -1.0)
        ok = last > 0
        if not ok.any():
            continue
        vals = head_val + pi[-2] * gamma_sq[-2] / pen[ok] + pi[-1] * gamma_sq[-1] / last[ok]
        best = min(best, float(vals.min()))
    if best == math.inf:
        raise InfeasibleBudget("no grid allocation fits the budget")
    return best
