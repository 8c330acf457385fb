import numpy as np
import pytest
from conftest import random_regular

from optsurvey import (
    DiscreteCostDistribution,
    build_menu,
    check_ic_ir,
    design_mechanism,
    payments_discrete,
    virtual_costs_discrete,
)
from optsurvey.errors import NonMonotoneAllocation, NonRegular, ZeroAllocation
from optsurvey.mechanism import Menu, expected_budget, payment_continuous


def test_intro_mechanism(intro):
    mech = design_mechanism(intro, 7.0)
    assert len(mech.menu) == 2
    np.testing.assert_allclose(mech.menu.to_list(), [[7.2, 1.0], [8.0, 0.8]], atol=1e-9)
    assert mech.expected_spend_per_agent == pytest.approx(7.0, abs=1e-9)
    np.testing.assert_array_equal(mech.item_of_type(), [0, 0, 1])


def test_intro_payments(intro):
    prices = payments_discrete([1.0, 1.0, 0.8], intro.costs).prices
    np.testing.assert_allclose(prices, [7.2, 7.2, 8.0])


def test_top_type_paid_its_cost():
    prices = payments_discrete([0.9, 0.5, 0.2], [1.0, 2.0, 3.0]).prices
    assert prices[-1] == 3.0


def test_payments_reject_bad_alloc(intro):
    with pytest.raises(ZeroAllocation):
        payments_discrete([1.0, 0.0, 0.0], intro.costs)
    with pytest.raises(NonMonotoneAllocation):
        payments_discrete([0.5, 1.0, 0.2], intro.costs)


def test_non_regular_prior():
    with pytest.raises(NonRegular):
        design_mechanism(DiscreteCostDistribution([1, 100, 101], [1 / 3] * 3), 5.0)


def test_ic_witness():
    ok, witness = check_ic_ir([1.0, 2.0], [1.0, 0.5], [1.0, 3.0])
    assert not ok and witness == ("IC", 0, 1)
    ok, witness = check_ic_ir([1.0, 2.0], [1.0, 0.5], [0.5, 3.0])
    assert not ok and witness == ("IR", 0)


def test_menu_dedup_and_ties():
    menu = build_menu([1.0, 1.0, 0.5], [3.0, 3.0, 4.0])
    assert menu.to_list() == [[3.0, 1.0], [4.0, 0.5]]
    # indifferent agent takes the higher probability
    tie = Menu(((2.0, 1.0), (3.0, 0.5)))
    assert tie.choose(1.0) == 0


def test_continuous_payment_constant_alloc():
    assert payment_continuous(lambda c: 0.5, 0.25, 1.0) == pytest.approx(1.0)
    assert payment_continuous(lambda c: 0.5, 1.0, 1.0) == 1.0


@pytest.mark.parametrize("seed", range(50))
def test_identity_random_allocations(seed):
    rng = np.random.default_rng(seed)
    dist = random_regular(rng, int(rng.integers(1, 9)), zero_first=seed % 4 == 0)
    alloc = np.sort(rng.uniform(0.01, 1.0, len(dist)))[::-1]
    prices = payments_discrete(alloc, dist.costs).prices
    phi = virtual_costs_discrete(dist).virtual_costs
    assert expected_budget(alloc, prices, dist) == pytest.approx(float(dist.pmf @ (phi * alloc)), abs=1e-9)
    assert check_ic_ir(dist.costs, alloc, prices)[0]


@pytest.mark.parametrize("seed", range(30))
def test_designed_mechanism_within_budget(seed):
    rng = np.random.default_rng(100 + seed)
    dist = random_regular(rng, int(rng.integers(1, 8)))
    budget = rng.uniform(0.1, 3.0) * dist.mean()
    mech = design_mechanism(dist, budget)
    assert mech.expected_spend_per_agent <= budget + 1e-9
    probs = mech.menu.probs
    assert np.all(np.diff(probs) < 0)
    assert np.all(np.diff(mech.menu.prices) > 0)
    # each type takes the item priced for it
    chosen = mech.menu.probs[mech.item_of_type()]
    np.testing.assert_allclose(chosen, mech.probs)
