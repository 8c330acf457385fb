"""Truthful payments and posted menus built on top of an allocation rule."""

from dataclasses import dataclass

import numpy as np

from ._validation import as_vector, check_aligned, check_positive_alloc
from .cost_model import DiscreteCostDistribution, virtual_costs_discrete
from .errors import NonMonotoneAllocation, ZeroAllocation
from .moment_design import MomentDesign, design_moment_discrete

IC_TOL = 1e-10
SPEND_TOL = 1e-9
_MENU_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PaymentRule:
    prices: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.prices, dtype=dtype)


@dataclass(frozen=True)
class Menu:
    """Posted (price, probability) items, highest probability first."""

    items: tuple

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    @property
    def prices(self):
        return np.array([p for p, _ in self.items])

    @property
    def probs(self):
        return np.array([a for _, a in self.items])

    def choose(self, cost):
        """Index of the utility-maximizing item for an agent with ``cost``.

        Ties go to the item with the higher allocation probability.
        """
        utility = (self.prices - cost) * self.probs
        best = utility.max()
        return int(np.flatnonzero(utility >= best - IC_TOL)[0])

    def to_list(self):
        return [[p, a] for p, a in self.items]


def payments_discrete(alloc, costs):
    """Cheapest truthful prices for a monotone allocation.

    The top type is paid its cost; every lower type is paid just enough to
    be indifferent with mimicking the next type up.
    """
    alloc = np.asarray(alloc, dtype=float)
    costs = as_vector(costs, "costs")
    check_aligned(alloc, costs, names=("allocation", "costs"))
    if np.any(alloc <= 0):
        raise ZeroAllocation("payments need a strictly positive allocation")
    if np.any(np.diff(alloc) > _MENU_TOL):
        raise NonMonotoneAllocation(f"allocation must be non-increasing: {alloc.tolist()}")
    steps = np.diff(costs)
    # rent[t] = sum_{j>t} A_j (c_j - c_{j-1})
    rent = np.concatenate((np.cumsum((alloc[1:] * steps)[::-1])[::-1], [0.0]))
    return PaymentRule(costs + rent / alloc)


def payment_continuous(alloc_fn, c, c_max):
    """Truthful price ``c + (1/A(c)) * integral_c^c_max A(z) dz``."""
    from scipy import integrate

    a_c = float(alloc_fn(c))
    if a_c <= 0:
        raise ZeroAllocation(f"allocation vanishes at {c}")
    if c >= c_max:
        return float(c)
    area, _ = integrate.quad(alloc_fn, c, c_max, epsabs=1e-11, epsrel=1e-11, limit=200)
    return float(c + area / a_c)


def expected_budget(alloc, prices, dist):
    """Expected payment per agent, ``sum_t pi_t P_t A_t``."""
    alloc = as_vector(alloc, "allocation")
    prices = as_vector(prices, "prices")
    pmf = np.asarray(dist.pmf, dtype=float)
    check_aligned(alloc, prices, pmf, names=("allocation", "prices", "pmf"))
    return float(pmf @ (prices * alloc))


def build_menu(alloc, prices):
    alloc = as_vector(alloc, "allocation")
    prices = as_vector(prices, "prices")
    check_aligned(alloc, prices, names=("allocation", "prices"))
    items = []
    for p, a in sorted(zip(prices.tolist(), alloc.tolist()), key=lambda it: (-it[1], it[0])):
        if items and abs(items[-1][1] - a) <= _MENU_TOL and abs(items[-1][0] - p) <= 1e-9 * max(1.0, abs(p)):
            continue
        items.append((p, a))
    return Menu(tuple(items))


def check_ic_ir(costs, alloc, prices, tol=IC_TOL):
    """Verify truthfulness and individual rationality.

    Returns ``(ok, witness)``; the witness is ``None`` on success, else
    ``("IR", t)`` or ``("IC", t, t_mimic)`` for the first violation found.
    """
    costs = as_vector(costs, "costs")
    alloc = as_vector(alloc, "allocation")
    prices = as_vector(prices, "prices")
    check_aligned(costs, alloc, prices, names=("costs", "allocation", "prices"))
    for t in range(costs.size):
        if prices[t] < costs[t] - tol:
            return False, ("IR", t)
        truthful = (prices[t] - costs[t]) * alloc[t]
        mimic = (prices - costs[t]) * alloc
        bad = np.flatnonzero(mimic > truthful + tol)
        if bad.size:
            return False, ("IC", t, int(bad[0]))
    return True, None


@dataclass(frozen=True, eq=False)
class MechanismDesign:
    true_costs: DiscreteCostDistribution
    virtual: object
    design: MomentDesign
    payments: PaymentRule
    menu: Menu
    expected_spend_per_agent: float

    @property
    def budget(self):
        return self.design.budget

    @property
    def probs(self):
        return self.design.rule.probs

    def item_of_type(self):
        """Menu item chosen by each cost type."""
        return np.array([self.menu.choose(c) for c in self.true_costs.costs])

    def to_dict(self):
        return {
            "kind": "mechanism",
            "budget_per_agent": self.budget,
            "true_costs": self.true_costs.to_dict(),
            "virtual_costs": np.asarray(self.virtual.virtual_costs).tolist(),
            "design": self.design.to_dict(),
            "payments": np.asarray(self.payments.prices).tolist(),
            "menu": self.menu.to_list(),
            "expected_spend_per_agent": self.expected_spend_per_agent,
        }


def design_mechanism(dist, budget):
    """Optimal truthful survey for a regular prior of true costs.

    The allocation is designed against virtual costs; prices are then the
    cheapest truthful ones for the true costs.
    """
    if not isinstance(dist, DiscreteCostDistribution):
        dist = DiscreteCostDistribution(*dist)
    virtual = virtual_costs_discrete(dist)
    design = design_moment_discrete(virtual.distribution, budget)
    payments = payments_discrete(design.rule.probs, dist.costs)
    ok, witness = check_ic_ir(dist.costs, design.rule.probs, payments.prices)
    if not ok:
        raise AssertionError(f"designed mechanism violates IC/IR at {witness}")
    spend = expected_budget(design.rule.probs, payments.prices, dist)
    virtual_spend = float(dist.pmf @ (virtual.virtual_costs * design.rule.probs))
    if spend > design.budget + SPEND_TOL or abs(spend - virtual_spend) > SPEND_TOL * max(1.0, spend):
        raise AssertionError(
            f"spend {spend} breaks the budget {design.budget} or the virtual-cost identity {virtual_spend}"
        )
    return MechanismDesign(
        true_costs=dist,
        virtual=virtual,
        design=design,
        payments=payments,
        menu=build_menu(design.rule.probs, payments.prices),
        expected_spend_per_agent=spend,
    )


def mechanism_for_allocation(dist, alloc):
    """Payments, menu and spend for an arbitrary monotone allocation."""
    alloc = check_positive_alloc(alloc)
    payments = payments_discrete(alloc, dist.costs)
    return payments, build_menu(alloc, payments.prices), expected_budget(alloc, payments.prices, dist)
