"""
imc-hit - command-line entry point
Lower/upper hitting probabilities for imprecise Markov chains
"""

import argparse
import json
import sys
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger
from pydantic import ValidationError

from imchit.config import configure_logging, get_settings
from imchit.credal import ExtremeSelection, center_matrix
from imchit.errors import DomainError, ImcHitError
from imchit.experiments import ExperimentConfig, lambda_peak_scan, parse_grid, run_batch
from imchit.hitting import hitting_probabilities
from imchit.imprecise import SolveOptions, lower_hitting, upper_hitting
from imchit.instances import (
    CredalModel,
    Family,
    FixtureRegistry,
    InstanceSpec,
    gen_random_instance,
    propagation_chain_instance,
    worst_case_instance,
)
from imchit.oracle import McConfig, brute_force_bounds, simulate_hitting
from imchit.reachability import (
    closed_set_check,
    lower_reach_report,
    lr2_minimal_n,
    lr3_holds,
    upper_reach_report,
)

MODEL_ALIASES = {"eps": CredalModel.EPS_CONTAM, "eps_contam": CredalModel.EPS_CONTAM,
                 "hull": CredalModel.VERTEX_HULL, "vertex_hull": CredalModel.VERTEX_HULL}


def _model(name: str) -> CredalModel:
    if name not in MODEL_ALIASES:
        raise DomainError(f"unknown credal model '{name}'", known=sorted(MODEL_ALIASES))
    return MODEL_ALIASES[name]


def _selection(text: Optional[str]) -> Optional[ExtremeSelection]:
    if not text:
        return None
    try:
        return ExtremeSelection(tuple(int(v) for v in text.split(",")))
    except ValueError as exc:
        raise DomainError("start selection must be comma-separated integers", start=text) from exc


class HittingWorkbench:
    """Turns each subcommand into a status dictionary"""

    def __init__(self):
        self.fixtures = FixtureRegistry()

    def generate(self, args: argparse.Namespace) -> Dict[str, Any]:
        family = Family(args.family)
        if family is Family.RANDOM:
            instance = gen_random_instance(args.n, args.lam, _model(args.model), args.epsilon, args.seed,
                                       args.full_support)
        elif family is Family.WORST_CASE:
            instance = worst_case_instance(args.m)
        elif family is Family.PROPAGATION_CHAIN:
            instance = propagation_chain_instance(args.n, args.b)
        else:
            instance = self.fixtures.build(family.value)
        result: Dict[str, Any] = {"status": "success", "family": family.value, "states": instance.states}
        if args.out:
            result["path"] = str(instance.save(args.out))
        else:
            result["instance"] = json.loads(instance.to_json())
        return result

    def solve(self, args: argparse.Namespace, lower: bool) -> Dict[str, Any]:
        instance = InstanceSpec.load(args.instance)
        opts = SolveOptions(residual_tol=args.tol, max_iterations=args.max_iters, record_trace=args.trace)
        solver = lower_hitting if lower else upper_hitting
        outcome = solver(instance.credal_set(), instance.target_set(), opts, _selection(args.start))
        return {"status": "success", **outcome.to_dict()}

    def reach(self, args: argparse.Namespace) -> Dict[str, Any]:
        instance = InstanceSpec.load(args.instance)
        C, A = instance.credal_set(), instance.target_set()
        report = lower_reach_report(C, A) if args.mode == "lower" else upper_reach_report(C, A)
        result = {"status": "success", **report.to_dict(), "target_closed": closed_set_check(C, A.members)}
        if args.state is not None:
            result["lr3"] = lr3_holds(C, A.members, args.state)
            result["lr2_minimal_n"] = lr2_minimal_n(C, A.members, args.state, args.n_cap, args.combo_limit)
        return result

    def oracle(self, args: argparse.Namespace) -> Dict[str, Any]:
        instance = InstanceSpec.load(args.instance)
        C, A = instance.credal_set(), instance.target_set()
        opts = SolveOptions(residual_tol=args.tol, max_iterations=args.max_iters, record_trace=args.trace)
        lower, upper = brute_force_bounds(C, A, args.combo_limit)
        solved = {"lower": lower_hitting(C, A, opts), "upper": upper_hitting(C, A, opts)}
        gaps = {
            "lower": float(np.max(np.abs(solved["lower"].probabilities.values - lower.values))),
            "upper": float(np.max(np.abs(solved["upper"].probabilities.values - upper.values))),
        }
        center = center_matrix(C)
        exact = hitting_probabilities(center, A)
        cfg = McConfig(trials=args.trials, horizon=args.horizon, seed=args.seed)
        simulated = [simulate_hitting(center, A, x, cfg)._asdict() for x in range(C.size)]
        return {
            "status": "success",
            "lower": lower.tolist(),
            "upper": upper.tolist(),
            "solver": {bound: result.to_dict() for bound, result in solved.items()},
            "gap": gaps,
            "agrees": max(gaps.values()) <= args.tol,
            "center_exact": exact.tolist(),
            "center_simulated": simulated,
        }

    def experiment(self, args: argparse.Namespace) -> Dict[str, Any]:
        config = ExperimentConfig.from_yaml(args.config) if args.config else ExperimentConfig()
        overrides = {
            "N": args.n,
            "lambdas": parse_grid(args.lam) if args.lam else None,
            "model": _model(args.model) if args.model else None,
            "runs": args.runs,
            "epsilon": args.epsilon,
            "seed": args.seed,
            "out": args.out,
        }
        config = config.model_copy(update={k: v for k, v in overrides.items() if v is not None})
        config = ExperimentConfig.model_validate(config.model_dump())
        stats = run_batch(config.N, config.lambdas, config.model, config.runs, config.epsilon, config.seed,
                          config.out, config.full_support or args.full_support, args.threads)
        return {"status": "success", "out": config.out,
                "cells": [{k: v for k, v in s.to_dict().items() if k != "per_run"} for s in stats]}

    def scan(self, args: argparse.Namespace) -> Dict[str, Any]:
        table = lambda_peak_scan([int(n) for n in parse_grid(args.n_grid)], parse_grid(args.lam),
                                 _model(args.model), args.runs, args.seed, args.epsilon, args.bound, args.out)
        peaks = [{"N": int(row.N), "lambda_star": float(row.lambda_star), "peak_mean": float(row.peak_mean)}
                 for row in table.itertuples()]
        return {"status": "success", "out": args.out, "peaks": peaks}

    def list_fixtures(self, args: argparse.Namespace) -> Dict[str, Any]:
        if args.name:
            return {"status": "success", "name": args.name,
                    "instance": json.loads(self.fixtures.build(args.name).to_json())}
        return {"status": "success", "fixtures": self.fixtures.list_fixtures()}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imc-hit", description=__doc__.strip().splitlines()[-1])
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance")
    gen.add_argument("--family", choices=[f.value for f in Family], default=Family.RANDOM.value)
    gen.add_argument("--n", type=int, default=10)
    gen.add_argument("--lambda", dest="lam", type=float, default=2.0)
    gen.add_argument("--model", default="eps")
    gen.add_argument("--epsilon", type=float, default=0.1)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--full-support", action="store_true")
    gen.add_argument("--m", type=int, default=3)
    gen.add_argument("--b", type=float, default=0.95)
    gen.add_argument("--out")

    for name in ("solve-lower", "solve-upper"):
        solve = sub.add_parser(name, help=f"{name.split('-')[1]} hitting probabilities")
        solve.add_argument("instance")
        solve.add_argument("--tol", type=float, default=1e-9)
        solve.add_argument("--max-iters", type=int)
        solve.add_argument("--trace", action="store_true")
        solve.add_argument("--start", help="comma-separated extreme point indices")

    reach = sub.add_parser("reach", help="reachability report")
    reach.add_argument("instance")
    reach.add_argument("--mode", choices=["lower", "upper"], default="lower")
    reach.add_argument("--state", type=int, help="also decide LR3 and the least LR2 horizon from this state")
    reach.add_argument("--n-cap", type=int)
    reach.add_argument("--combo-limit", type=int)

    oracle = sub.add_parser("oracle", help="brute-force bounds and Monte-Carlo check")
    oracle.add_argument("instance")
    oracle.add_argument("--tol", type=float, default=1e-9)
    oracle.add_argument("--max-iters", type=int)
    oracle.add_argument("--trace", action="store_true")
    oracle.add_argument("--trials", type=int, default=10_000)
    oracle.add_argument("--horizon", type=int)
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--combo-limit", type=int)

    experiment = sub.add_parser("experiment", help="batch iteration-count study")
    experiment.add_argument("--config")
    experiment.add_argument("--n", type=int)
    experiment.add_argument("--lambda", dest="lam")
    experiment.add_argument("--model")
    experiment.add_argument("--runs", type=int)
    experiment.add_argument("--epsilon", type=float)
    experiment.add_argument("--seed", type=int)
    experiment.add_argument("--full-support", action="store_true")
    experiment.add_argument("--threads", type=int)
    experiment.add_argument("--out")

    scan = sub.add_parser("scan", help="lambda with the most iterations per N")
    scan.add_argument("--n-grid", default="10,20")
    scan.add_argument("--lambda", dest="lam", default="1..10")
    scan.add_argument("--model", default="eps")
    scan.add_argument("--runs", type=int, default=100)
    scan.add_argument("--epsilon", type=float, default=0.1)
    scan.add_argument("--seed", type=int, default=0)
    scan.add_argument("--bound", choices=["lower", "upper", "mean"], default="upper")
    scan.add_argument("--out")

    fixtures = sub.add_parser("fixtures", help="list or print the example instances")
    fixtures.add_argument("--name")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; JSON result on stdout, JSON error on stderr"""
    args = build_parser().parse_args(argv)
    configure_logging("DEBUG" if args.verbose else get_settings().log_level)
    bench = HittingWorkbench()
    handlers = {
        "gen": bench.generate,
        "solve-lower": lambda a: bench.solve(a, lower=True),
        "solve-upper": lambda a: bench.solve(a, lower=False),
        "reach": bench.reach,
        "oracle": bench.oracle,
        "experiment": bench.experiment,
        "scan": bench.scan,
        "fixtures": bench.list_fixtures,
    }
    try:
        result = handlers[args.command](args)
    except ImcHitError as exc:
        logger.error("{} failed: {}", args.command, exc.message)
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 1
    except ValidationError as exc:
        logger.error("{} rejected its options", args.command)
        print(json.dumps({"error": "ValidationError", "message": "invalid options",
                          "diagnostics": json.loads(exc.json())}), file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
