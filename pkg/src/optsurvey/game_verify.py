"""The zero-sum game between the analyst (allocation) and the adversary (data).

``V(A, q) = <pi, q / A> - <pi, q>**2`` is the n-normalized variance of the
Horvitz-Thompson estimate when ``q_t = Pr[m(z) = 1 | c_t]``.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_aligned, check_positive_alloc, check_unit_interval
from .errors import InfeasibleBudget, TooLarge, ZeroAdversaryEntry

DEFAULT_TOL = 1e-8


def _pmf(dist):
    return np.asarray(dist.pmf, dtype=float)


def variance(alloc, q, dist):
    alloc = check_positive_alloc(alloc)
    q = check_unit_interval(q)
    pi = _pmf(dist)
    check_aligned(alloc, q, pi, names=("allocation", "q", "pmf"))
    mass = float(pi @ q)
    return float(pi @ (q / alloc)) - mass * mass


def _knapsack_order(alloc):
    # largest 1/A first; stable sort keeps the lowest index first on ties
    return np.argsort(alloc, kind="stable")


def _optimal_mass(alloc, pi):
    """Maximize h(m) - m^2 where h is the fractional-knapsack value.

    h is concave piecewise linear, with slopes 1/A in decreasing order, so the
    maximizer is where the slope crosses 2m.
    """
    order = _knapsack_order(alloc)
    filled = 0.0
    for t in order:
        slope = 1.0 / alloc[t]
        if slope / 2.0 <= filled:
            return filled, order
        if slope / 2.0 <= filled + pi[t]:
            return slope / 2.0, order
        filled += pi[t]
    return filled, order


def _fill(order, pi, mass):
    q = np.zeros(pi.size)
    left = mass
    for t in order:
        if left <= 0:
            break
        take = min(pi[t], left)
        q[t] = take / pi[t]
        left -= take
    q[q > 1.0] = 1.0
    return q


def worst_case_variance(alloc, dist):
    """sup over q in [0,1]^|C| of V(A, q), with the maximizing q."""
    alloc = check_positive_alloc(alloc)
    pi = _pmf(dist)
    check_aligned(alloc, pi, names=("allocation", "pmf"))
    mass, order = _optimal_mass(alloc, pi)
    q = _fill(order, pi, mass)
    return variance(alloc, q, dist), q


def best_response_adversary(alloc, dist):
    return worst_case_variance(alloc, dist)[1]


def _spend_at(lam, q, costs, pi):
    with np.errstate(divide="ignore"):
        alloc = np.where(costs > 0, np.minimum(1.0, np.sqrt(q / (lam * costs))), 1.0)
    return alloc, float(pi @ (costs * alloc))


def best_response_alloc(q, dist, budget):
    """Analyst's best response ``A_t = min(1, sqrt(q_t / (lam c_t)))``.

    ``lam`` makes the budget bind; it is found exactly by walking the
    breakpoints ``q_t / c_t`` where types switch from capped to interior.
    Returns ``(allocation, lam)``.
    """
    q = check_unit_interval(q)
    costs = np.asarray(dist.costs, dtype=float)
    pi = _pmf(dist)
    check_aligned(q, pi, names=("q", "pmf"))
    if np.any(q <= 0):
        raise ZeroAdversaryEntry("best response needs q_t > 0 for every type")
    budget = float(budget)
    if not budget > 0:
        raise InfeasibleBudget(f"budget per agent must be positive, got {budget}")

    paid = costs > 0
    if not paid.any():
        return np.ones(q.size), 0.0
    breaks = q[paid] / costs[paid]
    if float(pi @ costs) <= budget:
        # every type capped at 1; largest such multiplier
        return np.ones(q.size), float(breaks.min())

    # For lam in (breaks[j+1], breaks[j]] types with break >= lam are capped.
    order = np.argsort(-breaks, kind="stable")
    pc = (pi * costs)[paid][order]
    root = (pi * np.sqrt(q * costs))[paid][order]
    capped_spend = np.concatenate(([0.0], np.cumsum(pc)))
    interior_root = np.concatenate((np.cumsum(root[::-1])[::-1], [0.0]))
    sorted_breaks = breaks[order]
    for j in range(sorted_breaks.size):
        # the first j types (largest breaks) capped, the rest interior
        rest = budget - capped_spend[j]
        if rest <= 0 or interior_root[j] == 0:
            continue
        lam = (interior_root[j] / rest) ** 2
        upper = np.inf if j == 0 else sorted_breaks[j - 1]
        if sorted_breaks[j] <= lam * (1 + 1e-12) and lam <= upper * (1 + 1e-12):
            alloc, _ = _spend_at(lam, q, costs, pi)
            return alloc, float(lam)
    raise InfeasibleBudget("no multiplier makes the budget bind")


@dataclass
class EquilibriumCertificate:
    min_player_ok: bool
    max_player_ok: bool
    budget_binding: bool
    lam: float
    per_index_slack: np.ndarray = field(repr=False)
    value: float
    skipped: list = field(default_factory=list)
    spend: float = float("nan")

    @property
    def passed(self):
        return self.min_player_ok and self.max_player_ok and self.budget_binding

    def to_dict(self):
        return {
            "passed": self.passed,
            "min_player_ok": self.min_player_ok,
            "max_player_ok": self.max_player_ok,
            "budget_binding": self.budget_binding,
            "lambda": self.lam,
            "per_index_slack": np.asarray(self.per_index_slack).tolist(),
            "skipped": list(self.skipped),
            "value": self.value,
            "spend": self.spend,
        }


def verify_equilibrium(alloc, q, dist, budget, tol=DEFAULT_TOL):
    """Certify that ``(alloc, q)`` is an equilibrium of the budgeted game.

    Failures are recorded in the certificate rather than raised. Indices with
    ``q_t <= tol`` are skipped in the analyst-side check (the analyst's best
    response is only pinned down where the adversary puts mass).
    """
    alloc = np.asarray(alloc, dtype=float)
    q = np.asarray(q, dtype=float)
    costs = np.asarray(dist.costs, dtype=float)
    pi = _pmf(dist)
    check_aligned(alloc, q, pi, names=("allocation", "q", "pmf"))
    size = alloc.size

    if np.any(alloc <= 0) or np.any(q < -tol) or np.any(q > 1 + tol):
        return EquilibriumCertificate(
            False, False, False, float("nan"), np.full(size, np.inf), float("nan")
        )

    spend = float(pi @ (costs * alloc))
    all_ones = bool(np.all(alloc >= 1 - tol))
    budget_ok = abs(spend - budget) <= tol * max(1.0, abs(budget)) or (
        all_ones and spend <= budget + tol * max(1.0, abs(budget))
    )

    # Analyst side: A_t = min(1, sqrt(q_t / (lam c_t))) for a common lam.
    active = q > tol
    skipped = np.flatnonzero(~active).tolist()
    interior = active & (costs > 0) & (alloc < 1 - tol)
    if interior.any():
        lam = float(np.median(q[interior] / (alloc[interior] ** 2 * costs[interior])))
    else:
        paid = active & (costs > 0)
        lam = float((q[paid] / costs[paid]).min()) if paid.any() else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        target = np.where(
            costs > 0,
            np.minimum(1.0, np.sqrt(q / (lam * np.where(costs > 0, costs, 1.0)))),
            1.0,
        )
    alloc_slack = np.where(active, np.abs(alloc - target), 0.0)
    min_ok = bool(np.all(alloc_slack <= tol))

    # Adversary side: q_j = 0 needs A_j s >= 1, q_j = 1 needs A_j s <= 1, s = 2<pi,q>.
    s = 2.0 * float(pi @ q)
    gap = alloc * s - 1.0
    adv_slack = np.zeros(size)
    low = q < 1 - tol
    high = q > tol
    adv_slack[low] = np.maximum(adv_slack[low], -gap[low])
    adv_slack[high] = np.maximum(adv_slack[high], gap[high])
    max_ok = bool(np.all(adv_slack <= tol))

    return EquilibriumCertificate(
        min_player_ok=min_ok,
        max_player_ok=max_ok,
        budget_binding=bool(budget_ok),
        lam=lam,
        per_index_slack=np.maximum(alloc_slack, adv_slack),
        value=variance(alloc, np.clip(q, 0.0, 1.0), dist),
        skipped=skipped,
        spend=spend,
    )


# -- brute-force oracle ---------------------------------------------------

ORACLE_MAX_TYPES = 4


def _grid(step):
    count = int(round(1.0 / step))
    return np.arange(1, count + 1) * (1.0 / count)


def _grid_max_variance(alloc, pi, q_grid, head, head_mass):
    """max over grid q of V(A, q), exact on the grid.

    All but the last coordinate are enumerated (``head``); V is a concave
    quadratic in the last coordinate, so its grid maximum sits at one of the
    two grid points around the stationary point (or an end of the grid).
    """
    weights = pi / alloc
    lin = head @ weights[:-1]
    mass = head_mass
    w_last, p_last = weights[-1], pi[-1]
    # d/dq (w q - (mass + p q)^2) = 0  ->  q = (w / (2 p) - mass) / p
    station = (w_last / (2.0 * p_last) - mass) / p_last
    step = q_grid[1] - q_grid[0]
    base = np.floor((station - q_grid[0]) / step)
    best = np.full(lin.shape, -np.inf)
    for offset in (0, 1):
        idx = np.clip(base + offset, 0, q_grid.size - 1).astype(int)
        cand = q_grid[idx]
        val = lin + w_last * cand - (mass + p_last * cand) ** 2
        best = np.maximum(best, val)
    for cand in (q_grid[0], q_grid[-1]):
        val = lin + w_last * cand - (mass + p_last * cand) ** 2
        best = np.maximum(best, val)
    return float(best.max())


def brute_force_minimax(dist, budget, a_step, q_step, slack=0.0):
    """Grid minimax of V over monotone budget-feasible A and all grid q.

    Independent of the closed form and of the knapsack adversary. All but the
    last coordinate of A run over the grid; since the worst-case variance is
    non-increasing in every coordinate, the last one is set to the largest
    value the budget (plus ``slack``) and monotonicity allow.
    """
    size = len(dist)
    if size > ORACLE_MAX_TYPES:
        raise TooLarge(f"oracle supports at most {ORACLE_MAX_TYPES} types, got {size}")
    for step in (a_step, q_step):
        if not 0 < step <= 0.5:
            raise ValueError(f"grid step {step} outside (0, 0.5]")
    pi = _pmf(dist)
    costs = np.asarray(dist.costs, dtype=float)
    limit = float(budget) + float(slack)
    a_grid = _grid(a_step)
    q_grid = np.concatenate(([0.0], _grid(q_step)))
    combos = list(itertools.product(q_grid, repeat=size - 1))
    q_head = np.array(combos, dtype=float).reshape(len(combos), size - 1)
    q_head_mass = q_head @ pi[:-1]

    best = math.inf
    for head in itertools.product(range(a_grid.size), repeat=size - 1):
        if any(head[i] < head[i + 1] for i in range(len(head) - 1)):
            continue
        head_alloc = a_grid[list(head)]
        rest = limit - float(pi[:-1] @ (costs[:-1] * head_alloc))
        last = 1.0 if not head else float(head_alloc[-1])
        if costs[-1] > 0:
            last = min(last, rest / (pi[-1] * costs[-1]))
        elif rest < 0:
            continue
        if last <= 0:
            continue
        alloc = np.append(head_alloc, last)
        best = min(best, _grid_max_variance(alloc, pi, q_grid, q_head, q_head_mass))
    if best == math.inf:
        raise InfeasibleBudget("no grid allocation fits the budget")
    return best
