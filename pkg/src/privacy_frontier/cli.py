"""Command-line front end.

Subcommands write JSON (or CSV, for ``frontier``) to standard output and exit
with 0 on success, 2 on usage errors and 1 on domain errors. Domain errors are
reported as a JSON envelope naming the error class.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .errors import PrivacyFrontierError
from .frontier import (
    APPENDIX,
    MAIN_TEXT,
    MatrixMechanismFrontier,
    RandomizedResponseFrontier,
    epsilon_grid,
    frontier_curve,
    rr_epsilon_of_rho,
    rr_rho_of_epsilon,
    rr_variance,
)
from .histogram import DataDomain, QueryWorkload, load_workload
from .mechanisms import randomized_response_publish, rr_estimator
from .noise import NoiseSource
from .reconstruction import (
    contingency_2x2_workload,
    enumerate_consistent,
    zero_cell_pruning_count,
)
from .semantics import (
    SUBSTITUTE,
    certify_discrete_mechanism,
    certify_laplace_mechanism,
    constant_mechanism,
    identity_publication,
    rr_bayes_factor,
    rr_count_mechanism,
)
from .social import PreferenceProfile, matrix_mechanism_optimal_epsilon, optimal_epsilon, wta
from .title1 import (
    K_BAR_ROUNDED,
    Title1Calibration,
    implied_eta,
    load_districts,
    simulate_allocation,
    synthetic_districts,
    title1_report,
)

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


def _parse_grid(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, count = text.split(":")
        return float(lo), float(hi), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {text!r}") from None


def _parse_pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None


def _parse_numbers(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def _dollars(value: float) -> float:
    return round(value, 2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privacy-frontier",
        description="Privacy-accuracy frontiers, optimal privacy budgets, and the Title I calibration.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit RNG seed (default 0)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("frontier", parents=[common], help="tabulate a production frontier")
    p.add_argument("--mechanism", choices=["rr", "matrix", "identity"], required=True)
    p.add_argument("--eps", type=_parse_grid, default=(0.1, 5.0, 50), metavar="LO:HI:COUNT",
                   help="epsilon grid, inclusive; geometric spacing unless --linear")
    p.add_argument("--linear", action="store_true", help="arithmetic grid spacing")
    p.add_argument("--pi", type=float, default=0.5, help="RR: population proportion")
    p.add_argument("--mu", type=float, default=0.5, help="RR: innocuous-question probability")
    p.add_argument("--n", type=int, default=100, help="RR: number of respondents")
    p.add_argument("--convention", choices=[MAIN_TEXT, APPENDIX], default=MAIN_TEXT)
    p.add_argument("--workload", help="matrix: workload file ('domain <size>' + rows)")
    p.add_argument("--strategy", help="matrix: strategy file (defaults to the workload)")
    p.add_argument("--k", type=int, default=1, help="identity: number of cells")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("optimize", parents=[common], help="solve MRT = WTA for the matrix mechanism")
    p.add_argument("--mechanism", choices=["matrix", "identity"], default="identity")
    p.add_argument("--workload")
    p.add_argument("--strategy")
    p.add_argument("--k", type=int, default=1, help="identity: number of cells")
    p.add_argument("--wta", type=float, help="willingness to accept (sum k / sum b)")
    p.add_argument("--profile", help="CSV of preferences with columns k,a,b[,count]")
    p.add_argument("--bracket", type=_parse_pair, default=(1e-6, 1e6), metavar="LO:HI")

    p = sub.add_parser("title1", parents=[common], help="Title I school-funding calibration")
    p.add_argument("--eta", type=float, default=1.0, help="relative welfare weight on privacy")
    p.add_argument("--epsilon", type=float, help="evaluate at this epsilon instead of the optimum")
    p.add_argument("--k-bar", type=float, default=K_BAR_ROUNDED, help="mean privacy weight, dollars")
    p.add_argument("--districts", help="CSV with district_id,sppe,eligible_count")
    p.add_argument("--synthetic", action="store_true", help="use the seeded synthetic district fixture")
    p.add_argument("--num-students", type=float, help="override the number of students")
    p.add_argument("--replications", type=int, help="also run the allocation simulation")

    p = sub.add_parser("verify-dp", parents=[common], help="certify a mechanism's privacy loss")
    p.add_argument("--mechanism", choices=["rr", "constant", "identity", "laplace"], required=True)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=1.0, help="claimed epsilon (non-RR mechanisms)")
    p.add_argument("--max-n", type=int, default=3, help="largest database size enumerated")
    p.add_argument("--workload", help="laplace: workload file (defaults to a single count)")

    p = sub.add_parser("reconstruct", parents=[common], help="enumerate histograms consistent with exact answers")
    p.add_argument("--workload", help="workload file; omit to use the 2x2 contingency demo")
    p.add_argument("--answers", type=_parse_numbers, help="published answers, comma separated")
    p.add_argument("--n", type=int, help="number of records")
    p.add_argument("--histogram", type=_parse_numbers, default=[1, 0, 1, 1],
                   help="demo: true 2x2 histogram whose exact marginals are published")

    p = sub.add_parser("rr-demo", parents=[common], help="simulate randomized response and its estimator")
    p.add_argument("--pi", type=float, default=0.3)
    p.add_argument("--rho", type=float, help="truthful-answer probability")
    p.add_argument("--epsilon", type=float, help="privacy loss (alternative to --rho)")
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--n", type=int, default=1000)
    return parser


def _read_workload(path: str) -> QueryWorkload:
    with open(path, encoding="utf-8") as f:
        return load_workload(f)


def _matrix_pair(args) -> tuple[QueryWorkload, QueryWorkload, dict]:
    if args.mechanism == "identity":
        q = QueryWorkload.identity(args.k)
        return q, q, {"k": args.k}
    if not args.workload:
        raise UsageError("--workload is required for the matrix mechanism")
    q = _read_workload(args.workload)
    a = _read_workload(args.strategy) if args.strategy else q
    return q, a, {"workload": args.workload, "strategy": args.strategy or args.workload}


def cmd_frontier(args) -> dict | str:
    lo, hi, count = args.eps
    try:
        grid = epsilon_grid(lo, hi, count, geometric=not args.linear)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.mechanism == "rr":
        spec = RandomizedResponseFrontier(pi=args.pi, n=args.n, mu=args.mu, convention=args.convention)
        params = {"pi": args.pi, "mu": args.mu, "n": args.n, "convention": args.convention}
    else:
        q, a, params = _matrix_pair(args)
        spec = MatrixMechanismFrontier(q, a)
    curve = frontier_curve(spec, grid)
    if args.format == "csv":
        return curve.to_csv()
    out = curve.to_dict()
    out["slopes"] = [spec.slope(e) for e in curve.epsilons]
    params.update({"mechanism": args.mechanism, "eps": f"{lo}:{hi}:{count}", "linear": args.linear})
    return {"params": params, **out}


def cmd_optimize(args) -> dict:
    q, a, params = _matrix_pair(args)
    frontier = MatrixMechanismFrontier(q, a)
    prefs = None
    if args.profile:
        with open(args.profile, encoding="utf-8") as f:
            prefs = PreferenceProfile.from_csv(f)
        wta_value = wta(prefs)
    elif args.wta is not None:
        wta_value = args.wta
    else:
        raise UsageError("give either --wta or --profile")
    eps = optimal_epsilon(frontier.slope, wta_value, args.bracket)
    out = {
        "params": {**params, "mechanism": args.mechanism, "wta": args.wta, "profile": args.profile,
                   "bracket": list(args.bracket)},
        "epsilon": eps,
        "closed_form_epsilon": matrix_mechanism_optimal_epsilon(q, a, wta_value),
        "wta": wta_value,
        "mrt": frontier.slope(eps),
        "accuracy": frontier.accuracy(eps),
    }
    if prefs is not None:
        from .social import swf

        out["swf"] = swf(eps, frontier.accuracy(eps), prefs)
    return out


def cmd_title1(args, noise: NoiseSource) -> dict:
    records = None
    if args.districts:
        with open(args.districts, encoding="utf-8", newline="") as f:
            records = load_districts(f)
    elif args.synthetic or args.replications:
        records = synthetic_districts(seed=args.seed)
    if records is not None:
        cal = Title1Calibration.from_districts(records, args.eta, args.k_bar, args.num_students)
    else:
        cal = Title1Calibration.national(args.eta, args.k_bar)
        if args.num_students:
            cal = Title1Calibration(cal.num_districts, args.num_students, cal.mean_squared_sppe, cal.k_bar, cal.eta)
    epsilon = args.epsilon
    if epsilon is None and cal.eta == 0:
        raise UsageError("--eta 0 has no finite optimum; pass --epsilon")
    report = title1_report(cal, epsilon)
    simulation = None
    if args.replications:
        simulation = simulate_allocation(records, report.epsilon, args.replications, noise)
        report = title1_report(cal, report.epsilon, simulation)
    out = report.to_dict()
    out["rmse_dollars"] = _dollars(report.rmse_dollars)
    out["per_student_dollars"] = _dollars(report.per_student_dollars)
    if simulation is not None:
        out["empirical_rmse"] = _dollars(simulation.empirical_rmse)
    out["implied_eta"] = implied_eta(cal, report.epsilon)
    out["calibration"] = {
        "num_districts": cal.num_districts,
        "num_students": cal.num_students,
        "mean_squared_sppe": cal.mean_squared_sppe,
        "k_bar": cal.k_bar,
    }
    out["params"] = {
        "eta": args.eta,
        "epsilon": args.epsilon,
        "k_bar": args.k_bar,
        "districts": args.districts,
        "synthetic": records is not None and not args.districts,
        "num_students": args.num_students,
        "replications": args.replications,
    }
    return out


def cmd_verify_dp(args) -> dict:
    params = {"mechanism": args.mechanism, "max_n": args.max_n}
    if args.mechanism == "rr":
        claimed = rr_epsilon_of_rho(args.rho)
        cert = certify_discrete_mechanism(
            rr_count_mechanism(args.rho, args.mu), DataDomain(2, ("x=0", "x=1")), args.max_n,
            claimed_epsilon=claimed, neighbors=SUBSTITUTE, name="randomized-response",
        )
        params.update(rho=args.rho, mu=args.mu)
        extra = {"bayes_factor_bound": rr_bayes_factor(args.rho, args.mu)}
    elif args.mechanism == "laplace":
        q = _read_workload(args.workload) if args.workload else QueryWorkload([[1.0]])
        cert = certify_laplace_mechanism(q, args.epsilon)
        params.update(epsilon=args.epsilon, workload=args.workload)
        extra = {}
    else:
        mech = constant_mechanism() if args.mechanism == "constant" else identity_publication(0)
        cert = certify_discrete_mechanism(
            mech, DataDomain(1), args.max_n, claimed_epsilon=args.epsilon, name=args.mechanism
        )
        params.update(epsilon=args.epsilon)
        extra = {}
    return {"params": params, "certificate": cert.to_dict(), **extra}


def cmd_reconstruct(args) -> dict:
    if args.workload:
        q = _read_workload(args.workload)
        if args.answers is None or args.n is None:
            raise UsageError("--answers and --n are required with --workload")
        answers, n = args.answers, args.n
        params = {"workload": args.workload, "answers": answers, "n": n}
    else:
        q = contingency_2x2_workload()
        x = np.array(args.histogram)
        if x.shape != (4,):
            raise UsageError("--histogram needs four cell counts for the 2x2 demo")
        answers = (q.rows @ x).tolist()
        n = int(x.sum())
        params = {"demo": "2x2", "histogram": args.histogram, "answers": answers, "n": n}
    result = enumerate_consistent(q, answers, n, q.domain)
    before, after = zero_cell_pruning_count(q, answers, n, q.domain)
    return {"params": params, **result.to_dict(), "candidates_before_pruning": before,
            "candidates_after_pruning": after}


def cmd_rr_demo(args, noise: NoiseSource) -> dict:
    if (args.rho is None) == (args.epsilon is None):
        raise UsageError("give exactly one of --rho or --epsilon")
    rho = args.rho if args.rho is not None else rr_rho_of_epsilon(args.epsilon)
    ones = int(round(args.pi * args.n))
    bits = np.zeros(args.n, dtype=np.int8)
    bits[:ones] = 1
    d = randomized_response_publish(bits, rho, args.mu, noise)
    estimate = rr_estimator(d, rho, args.mu)
    true_pi = ones / args.n
    return {
        "params": {"pi": args.pi, "rho": args.rho, "epsilon": args.epsilon, "mu": args.mu, "n": args.n},
        "rho": rho,
        "epsilon": rr_epsilon_of_rho(rho),
        "true_pi": true_pi,
        "published_mean": float(d.mean()),
        "estimate": estimate,
        "variance": rr_variance(rho, true_pi, args.mu, args.n),
    }


def _emit(payload, stream) -> None:
    if isinstance(payload, str):
        stream.write(payload)
    else:
        stream.write(json.dumps(payload, indent=2, allow_nan=False, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    noise = NoiseSource(args.seed)
    try:
        if args.command == "frontier":
            payload = cmd_frontier(args)
        elif args.command == "optimize":
            payload = cmd_optimize(args)
        elif args.command == "title1":
            payload = cmd_title1(args, noise)
        elif args.command == "verify-dp":
            payload = cmd_verify_dp(args)
        elif args.command == "reconstruct":
            payload = cmd_reconstruct(args)
        else:
            payload = cmd_rr_demo(args, noise)
    except UsageError as exc:
        stderr.write(f"{parser.prog} {args.command}: error: {exc}\n")
        return 2
    except (PrivacyFrontierError, OSError) as exc:
        _emit({"schema_version": SCHEMA_VERSION, "command": args.command,
               "error": type(exc).__name__, "message": str(exc)}, stdout)
        return 1
    if isinstance(payload, dict):
        payload = {"schema_version": SCHEMA_VERSION, "command": args.command, "seed": args.seed, **payload}
    _emit(payload, stdout)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
