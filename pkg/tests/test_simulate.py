import numpy as np
import pytest

from optsurvey import DataModel, DiscreteCostDistribution, SimulationConfig, design_mechanism, monte_carlo
from optsurvey.errors import InvalidConfig, SingularGram, ZeroAllocation
from optsurvey.game_verify import worst_case_variance
from optsurvey.mechanism import Menu
from optsurvey.simulate import (
    ht_estimate,
    ht_estimate_multi,
    rep_generator,
    run_survey,
    wls_estimate,
)


@pytest.fixture
def intro_mech(intro):
    return design_mechanism(intro, 7.0)


def test_ht_examples():
    assert ht_estimate([0, 1, 1, 0], np.ones(4), 4) == 0.5
    assert ht_estimate([1.0], [0.5], 2) == 1.0
    assert ht_estimate([], [], 10) == 0.0
    with pytest.raises(ZeroAllocation):
        ht_estimate([1.0], [0.0], 1)


def test_ht_multi_matches_scalar():
    values = np.array([1.0, 0.0, 1.0])
    alloc = np.array([0.5, 0.8, 1.0])
    both = ht_estimate_multi(np.column_stack([values, values]), alloc, 5)
    np.testing.assert_allclose(both, ht_estimate(values, alloc, 5))
    assert ht_estimate_multi(values, alloc, 5)[0] == ht_estimate(values, alloc, 5)


def test_wls_noiseless_recovers_theta():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 3))
    theta = np.array([1.0, -2.0, 0.5])
    alloc = rng.uniform(0.1, 1.0, 50)
    np.testing.assert_allclose(wls_estimate(x, x @ theta, alloc), theta, atol=1e-10)


def test_wls_constant_feature_is_ht_mean():
    # x = -1 turns weighted least squares into a ratio of weighted sums
    values = np.array([1.0, 0.0, 1.0, 1.0])
    alloc = np.array([0.5, 0.5, 1.0, 0.25])
    fit = wls_estimate(-np.ones((4, 1)), -values, alloc)
    assert fit[0] == pytest.approx(np.sum(values / alloc) / np.sum(1 / alloc))


def test_wls_singular():
    with pytest.raises(SingularGram):
        wls_estimate(np.ones((5, 2)), np.ones(5), np.ones(5))


def test_single_type_buys_everyone():
    dist = DiscreteCostDistribution([3.0], [1.0])
    sample = run_survey(DataModel("moment", [1.0]), dist, Menu(((3.0, 1.0),)), 100, rep_generator(1, 0))
    assert sample.selected.all()
    assert sample.spend == 300.0


def test_intro_spend_and_selection(intro, intro_mech):
    sample = run_survey(DataModel("moment", [0, 1, 1]), intro, intro_mech.menu, 10**5, rep_generator(7, 0))
    spend = sample.spend / sample.n
    # binomial-type bound on per-agent spend
    sd = np.std(sample.payments) / np.sqrt(sample.n)
    assert abs(spend - 7.0) <= 3 * sd
    top = sample.types == 2
    frac = sample.selected[top].mean()
    assert abs(frac - 0.8) <= 3 * np.sqrt(0.16 / top.sum())


def test_zero_data_zero_variance(intro, intro_mech):
    rep = monte_carlo(DataModel("moment", [0, 0, 0]), intro, intro_mech.menu, SimulationConfig(500, 20, 3))
    assert rep.empirical_variance_scaled == 0.0
    np.testing.assert_array_equal(rep.estimates, 0.0)


def test_report_is_deterministic(intro, intro_mech, tmp_path):
    model = DataModel("moment", [0.2, 0.5, 0.9], dim=2)
    cfg = SimulationConfig(300, 15, 42)
    a = monte_carlo(model, intro, intro_mech.menu, cfg)
    b = monte_carlo(model, intro, intro_mech.menu, cfg)
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == "rep,estimate_0,estimate_1,spend"


def test_user_q_dominated_by_worst_case(intro, intro_mech):
    model = DataModel("moment", [0.3, 0.6, 0.7])
    rep = monte_carlo(model, intro, intro_mech.menu, SimulationConfig(2000, 400, 11))
    worst, _ = worst_case_variance(intro_mech.probs, intro_mech.design.dist)
    # standard error of a sample variance is about v * sqrt(2 / reps)
    assert rep.empirical_variance_scaled <= worst + 3 * worst * np.sqrt(2 / 400)
    assert abs(rep.mean_estimate[0] - rep.truth[0]) <= 4 * rep.standard_error[0]
    spend_se = rep.spends.std(ddof=1) / np.sqrt(400)
    assert abs(rep.mean_spend_per_agent - intro_mech.expected_spend_per_agent) <= 4 * spend_se


def test_regression_consistency():
    dist = DiscreteCostDistribution([1.0, 4.0], [0.5, 0.5])
    menu = Menu(((4.0, 0.9), (4.5, 0.4)))
    model = DataModel("regression", [1 / 3, 1 / 3], theta=[1.0, -1.0], noise_lo=-1.0, noise_hi=2.0)
    errs = []
    for n in (1000, 10000):
        rep = monte_carlo(model, dist, menu, SimulationConfig(n, 30, 5))
        errs.append(np.mean(np.sum((rep.estimates - rep.truth) ** 2, axis=1)))
    assert errs[1] < errs[0]


def test_model_validation():
    with pytest.raises(InvalidConfig):
        DataModel("moment", [0.5], dim=0)
    with pytest.raises(InvalidConfig):
        DataModel("regression", [0.5])
    with pytest.raises(InvalidConfig):
        DataModel("other", [0.5])
    skewed = DataModel("regression", [1.0, 1.0], theta=[1.0], noise_lo=-1.0, noise_hi=1.0)
    with pytest.raises(InvalidConfig):
        skewed.check_mean_zero([0.5, 0.5])
    with pytest.raises(InvalidConfig):
        SimulationConfig(0, 1, 1)
