"""Command-line front end.

Exit codes: 0 ok, 2 invalid input, 3 non-regular prior, 4 infeasible budget,
5 failed verification, 1 internal error. Errors go to stderr as one JSON line.
"""

import argparse
import csv
import io as _stringio
import json
import math
import sys

import numpy as np

from . import io
from .cost_model import ContinuousCostDistribution, DiscreteCostDistribution, discretize
from .errors import InfeasibleBudget, InvalidConfig, NonRegular, SurveyError
from .game_verify import brute_force_minimax, verify_equilibrium
from .mechanism import Menu, design_mechanism, mechanism_for_allocation
from .moment_design import design_moment_continuous, design_moment_discrete
from .regression_design import BUDGET_TOL, design_regression
from .simulate import DataModel, SimulationConfig, monte_carlo

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_NONREGULAR, EXIT_BUDGET, EXIT_VERIFY = 0, 1, 2, 3, 4, 5


def _emit(obj, out):
    text = io.save_json(obj, out)
    if out is None:
        sys.stdout.write(text)


def _discrete(prior):
    if not isinstance(prior, DiscreteCostDistribution):
        raise InvalidConfig("this command needs a discrete prior")
    return prior


def cmd_design_moment(args):
    prior = io.parse_prior(io.load_json(args.config))
    if isinstance(prior, ContinuousCostDistribution):
        if args.space != "virtual":
            raise InvalidConfig("continuous priors are designed in virtual space only")
        _emit(design_moment_continuous(prior, args.budget).to_dict(), args.out)
    elif args.space == "true":
        _emit(design_mechanism(prior, args.budget).to_dict(), args.out)
    else:
        _emit(design_moment_discrete(prior, args.budget).to_dict(), args.out)
    return EXIT_OK


def cmd_design_regression(args):
    instance = io.parse_regression_instance(io.load_json(args.config))
    _emit(design_regression(instance).to_dict(), args.out)
    return EXIT_OK


def cmd_menu(args):
    prior = _discrete(io.parse_prior(io.load_json(args.config)))
    mech = design_mechanism(prior, args.budget)
    _emit({"menu": mech.menu.to_list(), "expected_spend_per_agent": mech.expected_spend_per_agent}, args.out)
    return EXIT_OK


def _verify_discrete(art, tol):
    body = art["design"] if art["kind"] == "mechanism" else art
    try:
        dist = DiscreteCostDistribution(body["costs"], body["pmf"])
        alloc, q = np.asarray(body["probs"], float), np.asarray(body["adversary"], float)
        budget = float(art["budget_per_agent"])
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"malformed artifact: {exc}") from exc
    return verify_equilibrium(alloc, q, dist, budget, tol=tol).to_dict()


def _verify_regression(art, tol):
    fresh = io.design_from_artifact(art)
    alloc = io.artifact_allocation(art)
    inst = fresh.instance
    spend = float(inst.costs_dist.pmf @ (inst.costs_dist.costs * alloc))
    flat_ok = np.all(alloc >= 1 - tol) and spend <= inst.budget_per_agent + tol
    binding = abs(spend - inst.budget_per_agent) <= max(tol, BUDGET_TOL) * max(1.0, inst.budget_per_agent)
    monotone = bool(np.all(np.diff(alloc) <= tol))
    positive = bool(np.all(alloc > 0))
    objective = float(inst.costs_dist.pmf @ (fresh.adversary.gamma**2 / alloc)) if (
        positive and fresh.adversary is not None
    ) else fresh.objective
    optimal = abs(objective - fresh.objective) <= tol * max(1.0, abs(fresh.objective))
    return {
        "passed": bool((binding or flat_ok) and monotone and positive and optimal),
        "budget_binding": bool(binding or flat_ok),
        "monotone": monotone,
        "optimal": bool(optimal),
        "objective": objective,
        "reference_objective": fresh.objective,
        "spend": spend,
    }


def _verify_continuous(art, tol):
    fresh = io.design_from_artifact(art)
    gaps = {key: abs(float(art[key]) - getattr(fresh, key)) for key in ("x_star", "pooled_level", "alpha")}
    return {"passed": all(g <= tol for g in gaps.values()), "gaps": gaps}


def cmd_verify(args):
    if not args.tol > 0:
        raise InvalidConfig("tol must be positive")
    art = io.load_json(args.config)
    kind = art.get("kind") if isinstance(art, dict) else None
    if kind in ("mechanism", "moment"):
        cert = _verify_discrete(art, args.tol)
    elif kind == "regression":
        cert = _verify_regression(art, args.tol)
    elif kind == "continuous":
        cert = _verify_continuous(art, args.tol)
    else:
        raise InvalidConfig(f"unknown artifact kind {kind!r}")
    sys.stdout.write(json.dumps(cert, indent=2) + "\n")
    return EXIT_OK if cert["passed"] else EXIT_VERIFY


def cmd_oracle(args):
    prior = _discrete(io.parse_prior(io.load_json(args.config)))
    closed = design_moment_discrete(prior, args.budget).value
    oracle = brute_force_minimax(prior, args.budget, args.step, args.step)
    _emit({"oracle": oracle, "closed_form": closed, "relative_gap": (oracle - closed) / closed}, args.out)
    return EXIT_OK


def _survey_plan(art):
    """True-cost prior, menu and per-type allocation for a discrete artifact."""
    kind = art.get("kind")
    if kind == "mechanism":
        tc = art["true_costs"]
        dist = DiscreteCostDistribution(tc["costs"], tc["pmf"])
        menu = Menu(tuple((float(p), float(a)) for p, a in art["menu"]))
        return dist, menu
    if kind == "moment":
        dist = DiscreteCostDistribution(art["costs"], art["pmf"])
    elif kind == "regression":
        inst = art["instance"]
        dist = DiscreteCostDistribution(inst["costs"], inst["pmf"])
    else:
        raise InvalidConfig(f"cannot simulate a {kind!r} artifact")
    # non-strategic artifacts: the recorded costs are paid as true costs
    _, menu, _ = mechanism_for_allocation(dist, io.artifact_allocation(art))
    return dist, menu


def _data_model(art, fields, adversarial):
    kind = art["kind"]
    if adversarial and "q" in fields:
        raise InvalidConfig("q is set by the adversary under --adversarial")
    if kind == "regression":
        inst = art["instance"]
        if adversarial:
            q = np.asarray(art["adversary"]["q"], float)
            if art["swapped"]:
                q = 1.0 - q  # adversary was computed for the negated noise
        elif "q" in fields:
            q = fields["q"]
        else:
            raise InvalidConfig("data model needs q unless --adversarial")
        if "dim" in fields:
            raise InvalidConfig("regression models take their dimension from theta")
        return DataModel(
            "regression", q, theta=fields.get("theta", [1.0]),
            noise_lo=inst["L"], noise_hi=inst["U"],
            feature_scale=float(fields.get("feature_scale", 1.0)),
        )
    if "theta" in fields or "feature_scale" in fields:
        raise InvalidConfig("moment models take only q and dim")
    if adversarial:
        body = art["design"] if kind == "mechanism" else art
        q = body["adversary"]
    elif "q" in fields:
        q = fields["q"]
    else:
        raise InvalidConfig("data model needs q unless --adversarial")
    return DataModel("moment", q, dim=int(fields.get("dim", 1)))


def cmd_simulate(args):
    if args.seed is None:
        raise InvalidConfig("--seed is required")
    art = io.load_json(args.config)
    if not isinstance(art, dict):
        raise InvalidConfig("artifact must be a JSON object")
    fields = io.parse_model_fields(io.load_json(args.model)) if args.model else {}
    try:
        dist, menu = _survey_plan(art)
        model = _data_model(art, fields, args.adversarial)
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"malformed artifact: {exc}") from exc
    if model.q.size != len(dist):
        raise InvalidConfig("q must have one entry per cost type")
    config = SimulationConfig(args.n, args.reps, args.seed, args.adversarial)
    report = monte_carlo(model, dist, menu, config)
    report.write_csv(f"{args.out}.csv")
    report.write_json(f"{args.out}.json")
    return EXIT_OK


def _budget_grid(text):
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            return np.linspace(float(lo), float(hi), int(count))
        return np.array([float(b) for b in text.split(",")])
    except ValueError as exc:
        raise InvalidConfig(f"bad budget grid {text!r}; use lo:hi:count or a comma list") from exc


def cmd_curve(args):
    prior = _discrete(io.parse_prior(io.load_json(args.config)))
    buf = _stringio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["budget", "value", "t_star", "pooled_level", "alpha"])
    for budget in _budget_grid(args.budget_grid):
        if args.space == "true":
            design = design_mechanism(prior, budget).design
        else:
            design = design_moment_discrete(prior, budget)
        writer.writerow([repr(float(budget)), repr(design.value), design.pool_end,
                         repr(design.pooled_level), repr(design.alpha)])
    if args.out is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


def cmd_discretize(args):
    prior = io.parse_prior(io.load_json(args.config))
    if not isinstance(prior, ContinuousCostDistribution):
        raise InvalidConfig("discretize needs a continuous prior")
    _emit(discretize(prior, args.eps).to_dict(), args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="optsurvey", description="Budgeted optimal survey design.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="input JSON")
        p.set_defaults(func=func)
        return p

    p = command("design-moment", cmd_design_moment, "design a moment-estimation survey")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--space", choices=("true", "virtual"), default="true")
    p.add_argument("--out")

    p = command("design-regression", cmd_design_regression, "design a regression survey")
    p.add_argument("--out")

    p = command("menu", cmd_menu, "posted menu for a true-cost prior")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--out")

    p = command("verify", cmd_verify, "certify a design artifact")
    p.add_argument("--tol", type=float, default=1e-8)

    p = command("oracle", cmd_oracle, "brute-force minimax next to the closed form")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--out")

    p = command("simulate", cmd_simulate, "Monte Carlo surveys from a design artifact")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--adversarial", action="store_true")
    p.add_argument("--model", help="data model JSON: q, dim, theta, feature_scale")
    p.add_argument("--out", required=True, help="output prefix for .csv and .json")

    p = command("curve", cmd_curve, "design summary across budgets (CSV)")
    p.add_argument("--budget-grid", required=True, help="lo:hi:count or comma list")
    p.add_argument("--space", choices=("true", "virtual"), default="virtual")
    p.add_argument("--out")

    p = command("discretize", cmd_discretize, "discretize a continuous prior")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out")
    return parser


def _exit_code(exc):
    if isinstance(exc, NonRegular):
        return EXIT_NONREGULAR
    if isinstance(exc, InfeasibleBudget):
        return EXIT_BUDGET
    if isinstance(exc, (ValueError, SurveyError, OSError)) and not isinstance(exc, RuntimeError):
        return EXIT_INVALID
    return EXIT_INTERNAL


def main(argv=None):
    args = build_parser().parse_args(argv)
    budget = getattr(args, "budget", None)
    try:
        if budget is not None and not math.isfinite(budget):
            raise InvalidConfig("budget must be finite")
        return args.func(args)
    except (SurveyError, ValueError, OSError) as exc:
        kind = getattr(exc, "kind", type(exc).__name__)
        sys.stderr.write(json.dumps({"error": kind, "message": str(exc)}) + "\n")
        return _exit_code(exc)
