import math

import numpy as np
import pytest
from conftest import random_regular

from optsurvey import (
    ContinuousCostDistribution,
    DiscreteCostDistribution,
    design_moment_continuous,
    design_moment_discrete,
)
from optsurvey.errors import IndexOutOfRange, InfeasibleBudget, Infeasible, OutOfSupport
from optsurvey.moment_design import (
    AllocationRule,
    DesignCase,
    alloc_at,
    b_fun,
    g_infinity,
    q_fun,
    q_infinity,
    r_fun,
    r_infinity,
)

UNIFORM = ContinuousCostDistribution()


def test_profiles_on_intro(intro_virtual):
    assert q_fun(intro_virtual, 2, 1.0) == pytest.approx(3 + math.sqrt(240) / 4, rel=1e-12)
    assert r_fun(intro_virtual, 2, 1.0) == pytest.approx(1.0, rel=1e-12)
    assert q_fun(intro_virtual, 3, 1.0) == pytest.approx(8.0)
    assert r_fun(intro_virtual, 3, 1.0) == pytest.approx(0.8)
    assert b_fun(intro_virtual, 3, 1.0) == pytest.approx(10.0)
    assert r_fun(intro_virtual, 0, 1.0) == 2.0


def test_profile_index_checked(intro_virtual):
    with pytest.raises(IndexOutOfRange):
        q_fun(intro_virtual, 4, 1.0)


def test_intro_design(intro_virtual):
    design = design_moment_discrete(intro_virtual, 7.0)
    np.testing.assert_allclose(design.probs, [1.0, 1.0, 0.8], atol=1e-12)
    assert design.pool_end == 2
    assert design.pooled_level == 1.0
    assert design.case is DesignCase.POOLED_INTERIOR
    assert design.budget_spend == pytest.approx(7.0, abs=1e-12)
    assert design.value == pytest.approx(0.3125, abs=1e-12)


def test_flat_corner():
    design = design_moment_discrete(DiscreteCostDistribution([1, 2], [0.5, 0.5]), 1.2)
    np.testing.assert_allclose(design.probs, [0.8, 0.8], atol=1e-12)


def test_low_budget_corner():
    design = design_moment_discrete(DiscreteCostDistribution([1, 4], [0.5, 0.5]), 0.6)
    np.testing.assert_allclose(design.probs, [0.4, 0.2], atol=1e-12)
    assert design.pool_end == 0
    assert design.case is DesignCase.NO_POOL_LOW_BUDGET


def test_budget_above_mean_buys_everyone(intro_virtual):
    design = design_moment_discrete(intro_virtual, 100.0)
    np.testing.assert_array_equal(design.probs, 1.0)
    assert design.case is DesignCase.FLAT_HIGH_BUDGET
    assert design.value == pytest.approx(0.25)


@pytest.mark.parametrize("budget", [0.0, -1.0])
def test_non_positive_budget(intro_virtual, budget):
    with pytest.raises(InfeasibleBudget):
        design_moment_discrete(intro_virtual, budget)


def test_rule_validation():
    with pytest.raises(Infeasible):
        AllocationRule([0.5, 0.9])
    with pytest.raises(Infeasible):
        AllocationRule([1.0, 0.0])


def test_alloc_at(intro_virtual):
    design = design_moment_discrete(intro_virtual, 7.0)
    assert alloc_at(design, 20.0) == pytest.approx(0.8)
    with pytest.raises(OutOfSupport):
        alloc_at(design, 5.0)


def test_dim_scales_value_only(intro_virtual):
    one = design_moment_discrete(intro_virtual, 7.0)
    three = design_moment_discrete(intro_virtual, 7.0, dim=3)
    np.testing.assert_array_equal(one.probs, three.probs)
    assert three.value == 3 * one.value


@pytest.mark.parametrize("seed", range(40))
def test_shape_and_binding(seed):
    rng = np.random.default_rng(seed)
    dist = random_regular(rng, int(rng.integers(1, 9)), zero_first=bool(seed % 3 == 0))
    budget = rng.uniform(0.02, 1.2) * dist.mean()
    design = design_moment_discrete(dist, budget)
    probs = design.probs
    assert np.all(probs > 0) and np.all(probs <= 1)
    assert np.all(np.diff(probs) <= 1e-12)
    k = design.pool_end
    np.testing.assert_allclose(probs[:k], design.pooled_level, atol=1e-9)
    np.testing.assert_allclose(probs[k:], design.alpha / np.sqrt(dist.costs[k:]), rtol=1e-9)
    if budget < dist.mean():
        assert design.budget_spend == pytest.approx(budget, abs=1e-9 * max(1, budget))


@pytest.mark.parametrize("seed", range(20))
def test_scale_invariance(seed):
    rng = np.random.default_rng(100 + seed)
    dist = random_regular(rng, int(rng.integers(1, 7)))
    budget = rng.uniform(0.05, 1.0) * dist.mean()
    scale = rng.uniform(0.1, 10)
    base = design_moment_discrete(dist, budget).probs
    scaled = design_moment_discrete(dist.scaled(scale), budget * scale).probs
    np.testing.assert_allclose(base, scaled, atol=1e-12)


@pytest.mark.parametrize("seed", range(100))
def test_profile_monotonicity(seed):
    rng = np.random.default_rng(1000 + seed)
    dist = random_regular(rng, int(rng.integers(1, 9)))
    size = len(dist)
    r = [r_fun(dist, k, 1.0) for k in range(size + 1)]
    q = [q_fun(dist, k, 1.0) for k in range(size + 1)]
    b = [q_fun(dist, k, 1.0) / r_fun(dist, k, 1.0) for k in range(size + 1)]
    assert np.all(np.diff(r) <= 1e-12)
    assert np.all(np.diff(q) >= -1e-12)
    assert np.all(np.diff(b) >= -1e-12)


def test_continuous_high_budget():
    design = design_moment_continuous(UNIFORM, 0.5)
    assert design.x_star == 1.0 and design.pooled_level == 1.0


def test_continuous_uniform_example():
    design = design_moment_continuous(UNIFORM, 0.3)
    assert abs(design.x_star - 0.54) <= 0.01
    assert design.pooled_level == pytest.approx(1 / (2 - design.x_star), rel=1e-9)
    assert alloc_at(design, 0.25) == design.pooled_level
    assert design(1.0) == pytest.approx(design.alpha)


def test_continuous_budget_binds():
    design = design_moment_continuous(UNIFORM, 0.3)
    spend = UNIFORM.expect(lambda c: c * design(c))
    assert spend == pytest.approx(0.3, abs=1e-7)


def test_uniform_closed_forms():
    for x in (0.1, 0.37, 0.9):
        assert q_infinity(UNIFORM, x) == pytest.approx((2 / 3) * math.sqrt(x) - x * x / 6, abs=1e-12)
        assert r_infinity(UNIFORM, x) == pytest.approx(2 - x, abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.5, 2.0])
def test_g_bracket(p):
    dist = ContinuousCostDistribution("power", p) if p else UNIFORM
    for x in (0.2, 0.6, 1.0):
        g = g_infinity(dist, x)
        qv = q_infinity(dist, x)
        # 1 <= max(1, R) <= 2
        assert qv / 2 - 1e-12 <= g <= qv + 1e-12
        assert r_infinity(dist, x) == pytest.approx(2 * (1 - x ** (p + 1) / (p + 2)), abs=1e-10)
