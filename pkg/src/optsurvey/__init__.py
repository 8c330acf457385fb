"""Variance-optimal budgeted surveys for buying data from strategic agents."""

from .cost_model import (
    ContinuousCostDistribution,
    DiscreteCostDistribution,
    check_regular,
    discretize,
    virtual_cost_continuous,
    virtual_costs_discrete,
)
from .estimators import (
    HorvitzThompsonMean,
    MomentSurveyDesigner,
    RegressionSurveyDesigner,
    WeightedLeastSquares,
)
from .game_verify import (
    best_response_adversary,
    best_response_alloc,
    brute_force_minimax,
    variance,
    verify_equilibrium,
    worst_case_variance,
)
from .mechanism import build_menu, check_ic_ir, design_mechanism, payments_discrete
from .moment_design import design_moment_continuous, design_moment_discrete
from .regression_design import (
    RegressionInstance,
    adversary_knapsack,
    brute_force_regression,
    design_regression,
    regression_objective,
)
from .simulate import DataModel, SimulationConfig, monte_carlo

__version__ = "0.1.0"

__all__ = [
    "ContinuousCostDistribution",
    "DataModel",
    "DiscreteCostDistribution",
    "HorvitzThompsonMean",
    "MomentSurveyDesigner",
    "RegressionInstance",
    "RegressionSurveyDesigner",
    "SimulationConfig",
    "WeightedLeastSquares",
    "adversary_knapsack",
    "best_response_adversary",
    "best_response_alloc",
    "brute_force_minimax",
    "brute_force_regression",
    "build_menu",
    "check_ic_ir",
    "check_regular",
    "design_mechanism",
    "design_moment_continuous",
    "design_moment_discrete",
    "design_regression",
    "discretize",
    "monte_carlo",
    "payments_discrete",
    "regression_objective",
    "variance",
    "verify_equilibrium",
    "virtual_cost_continuous",
    "virtual_costs_discrete",
    "worst_case_variance",
]
