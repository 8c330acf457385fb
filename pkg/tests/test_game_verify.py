import numpy as np
import pytest
from conftest import random_regular

from optsurvey import (
    DiscreteCostDistribution,
    best_response_adversary,
    best_response_alloc,
    brute_force_minimax,
    design_moment_discrete,
    variance,
    verify_equilibrium,
    worst_case_variance,
)
from optsurvey.errors import TooLarge, ZeroAdversaryEntry, ZeroAllocation

TWO = DiscreteCostDistribution([1.0, 4.0], [0.5, 0.5])


def test_variance_examples(intro_virtual):
    assert variance([1, 1, 1], [0, 1, 1], intro_virtual) == pytest.approx(0.25)
    assert variance([0.4, 0.2], [1, 1], TWO) == pytest.approx(2.75)


def test_variance_zero_alloc():
    with pytest.raises(ZeroAllocation):
        variance([0.0, 1.0], [1, 1], TWO)


def test_worst_case_intro(intro_virtual):
    value, q = worst_case_variance([1.0, 1.0, 0.8], intro_virtual)
    assert value == pytest.approx(0.3125, abs=1e-12)
    assert q[2] == 1.0
    assert 2 * float(intro_virtual.pmf @ q) == pytest.approx(1.0)


def test_adversary_trichotomy():
    np.testing.assert_array_equal(best_response_adversary([0.4, 0.2], TWO), [1, 1])
    q = best_response_adversary([1.0, 1.0], TWO)
    assert float(TWO.pmf @ q) == pytest.approx(0.5)
    np.testing.assert_array_equal(q, [1.0, 0.0])  # lowest index filled first


def test_best_response_alloc():
    alloc, lam = best_response_alloc([1.0, 1.0], TWO, 0.6)
    np.testing.assert_allclose(alloc, [0.4, 0.2], atol=1e-12)
    assert lam == pytest.approx(6.25)
    with pytest.raises(ZeroAdversaryEntry):
        best_response_alloc([0.0, 1.0], TWO, 0.6)


@pytest.mark.parametrize("seed", range(30))
def test_best_response_alloc_binds(seed):
    rng = np.random.default_rng(seed)
    dist = random_regular(rng, int(rng.integers(1, 8)))
    q = rng.uniform(0.05, 1.0, len(dist))
    budget = rng.uniform(0.05, 0.95) * dist.mean()
    alloc, lam = best_response_alloc(q, dist, budget)
    assert float(dist.pmf @ (dist.costs * alloc)) == pytest.approx(budget, rel=1e-10)
    np.testing.assert_allclose(alloc, np.minimum(1, np.sqrt(q / (lam * dist.costs))), rtol=1e-10)


def test_certificate_intro(intro_virtual):
    design = design_moment_discrete(intro_virtual, 7.0)
    cert = verify_equilibrium(design.probs, design.adversary, intro_virtual, 7.0)
    assert cert.passed
    assert cert.value == pytest.approx(0.3125)


def test_certificate_flat():
    cert = verify_equilibrium([1.0, 1.0], [1.0, 0.0], TWO, 5.0)
    assert cert.passed


def test_certificate_catches_bad_adversary():
    cert = verify_equilibrium([0.4, 0.2], [1.0, 0.5], TWO, 0.6)
    assert not cert.max_player_ok
    assert not cert.passed


@pytest.mark.parametrize("seed", range(50))
def test_worst_case_dominates_random_q(seed):
    rng = np.random.default_rng(seed)
    dist = random_regular(rng, int(rng.integers(1, 7)))
    alloc = np.sort(rng.uniform(0.05, 1.0, len(dist)))[::-1]
    value, q_star = worst_case_variance(alloc, dist)
    assert variance(alloc, q_star, dist) == value
    qs = rng.uniform(0, 1, (1000, len(dist)))
    mass = qs @ dist.pmf
    values = qs @ (dist.pmf / alloc) - mass**2
    assert np.all(values <= value + 1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_minimax_sandwich(seed):
    rng = np.random.default_rng(500 + seed)
    dist = random_regular(rng, int(rng.integers(2, 7)))
    budget = rng.uniform(0.05, 0.95) * dist.mean()
    design = design_moment_discrete(dist, budget)
    q = design.adversary
    sup, _ = worst_case_variance(design.probs, dist)
    assert sup == pytest.approx(design.value, rel=1e-9)
    if np.all(q > 0):
        alloc, _ = best_response_alloc(q, dist, budget)
        assert variance(alloc, q, dist) == pytest.approx(design.value, rel=1e-8)


def test_oracle_examples(intro_virtual):
    assert brute_force_minimax(TWO, 0.6, 0.01, 0.01) == pytest.approx(2.75, rel=0.02)
    assert brute_force_minimax(DiscreteCostDistribution([1, 2], [0.5, 0.5]), 2.0, 0.05, 0.05) == pytest.approx(0.25)
    value = design_moment_discrete(intro_virtual, 7.0).value
    assert brute_force_minimax(intro_virtual, 7.0, 0.02, 0.02) == pytest.approx(value, rel=0.02)


def test_oracle_slack_only_helps():
    strict = brute_force_minimax(TWO, 0.6, 0.02, 0.02)
    loose = brute_force_minimax(TWO, 0.6, 0.02, 0.02, slack=0.02 * TWO.mean())
    assert loose <= strict


def test_oracle_size_limit():
    dist = DiscreteCostDistribution(np.arange(1, 6), np.full(5, 0.2))
    with pytest.raises(TooLarge):
        brute_force_minimax(dist, 1.0, 0.1, 0.1)
