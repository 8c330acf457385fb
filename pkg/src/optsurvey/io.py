"""JSON configs and design artifacts."""

import json

import numpy as np

from .cost_model import ContinuousCostDistribution, DiscreteCostDistribution
from .errors import InvalidConfig
from .regression_design import RegressionInstance

DISCRETE_FIELDS = {"costs", "pmf"}
CONTINUOUS_FIELDS = {"family", "p"}
REGRESSION_FIELDS = {"costs", "pmf", "L", "U", "budget_per_agent"}
MODEL_FIELDS = {"q", "dim", "theta", "feature_scale"}


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read {path}: {exc}") from exc


def save_json(obj, path=None):
    text = json.dumps(obj, indent=2, allow_nan=False) + "\n"
    if path is None:
        return text
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def _check_fields(obj, allowed, required, what):
    if not isinstance(obj, dict):
        raise InvalidConfig(f"{what} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise InvalidConfig(f"unknown {what} fields: {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise InvalidConfig(f"missing {what} fields: {sorted(missing)}")


def parse_prior(obj):
    """Discrete ``{"costs", "pmf"}`` or continuous ``{"family", "p"}`` prior."""
    if isinstance(obj, dict) and "family" in obj:
        _check_fields(obj, CONTINUOUS_FIELDS, {"family"}, "prior")
        return ContinuousCostDistribution(obj["family"], float(obj.get("p", 0.0)))
    _check_fields(obj, DISCRETE_FIELDS, DISCRETE_FIELDS, "prior")
    return DiscreteCostDistribution(obj["costs"], obj["pmf"])


def parse_regression_instance(obj):
    _check_fields(obj, REGRESSION_FIELDS, REGRESSION_FIELDS, "regression instance")
    dist = DiscreteCostDistribution(obj["costs"], obj["pmf"])
    return RegressionInstance(dist, obj["L"], obj["U"], obj["budget_per_agent"])


def parse_model_fields(obj):
    _check_fields(obj, MODEL_FIELDS, (), "data model")
    return dict(obj)


def design_from_artifact(obj):
    """Rebuild the design recorded in an artifact (recomputed, then compared)."""
    from .mechanism import design_mechanism
    from .moment_design import design_moment_continuous, design_moment_discrete
    from .regression_design import design_regression

    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidConfig("artifact lacks a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "mechanism":
            prior = DiscreteCostDistribution(obj["true_costs"]["costs"], obj["true_costs"]["pmf"])
            return design_mechanism(prior, obj["budget_per_agent"])
        if kind == "moment":
            prior = DiscreteCostDistribution(obj["costs"], obj["pmf"])
            return design_moment_discrete(prior, obj["budget_per_agent"])
        if kind == "continuous":
            prior = ContinuousCostDistribution(obj["family"], float(obj.get("p", 0.0)))
            return design_moment_continuous(prior, obj["budget_per_agent"])
        if kind == "regression":
            return design_regression(parse_regression_instance(obj["instance"]))
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"malformed {kind} artifact: {exc}") from exc
    raise InvalidConfig(f"unknown artifact kind {kind!r}")


def artifact_allocation(obj):
    """Allocation vector stored in a discrete artifact."""
    try:
        probs = obj["design"]["probs"] if obj["kind"] == "mechanism" else obj["probs"]
        return np.asarray(probs, dtype=float)
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"artifact has no allocation: {exc}") from exc
