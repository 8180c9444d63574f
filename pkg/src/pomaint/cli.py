"""Command-line driver.

Subcommands: simulate, fit, solve, benchmark, sensitivity, check-orders,
motivating. All structured inputs are JSON, tabular outputs CSV. Exit codes:
0 success, 1 validation failure, 2 numerical failure (non-convergence or a
zero-likelihood dataset), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .estimate import (
    ZeroLikelihoodError,
    default_template,
    multi_start_fit,
    parameter_count,
)
from .model import read_costs, read_model
from .orders import check_assumptions
from .render import policy_heatmap, write_policy_csv, write_rows_csv, write_value_csv
from .simulate import read_trajectories, simulate_trajectories, write_trajectories
from .solver import BeliefGrid, SolverError, policy_structure_report, value_iteration

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="root random seed")
    parser.add_argument("--threads", type=int, default=1, help="worker processes")
    parser.add_argument("--out-dir", default=".", help="directory for outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pomaint", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate trajectories of the free-running system")
    _common(p)
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--T", type=int, required=True, help="number of trajectories")
    p.add_argument("--n", type=int, required=True, help="epochs per trajectory")
    p.add_argument("--reveal-hidden", action="store_true",
                   help="include the hidden path in the output (testing aid)")
    p.add_argument("--out", required=True, help="output CSV")

    p = sub.add_parser("fit", help="estimate parameters from a trajectory CSV")
    _common(p)
    p.add_argument("--data", required=True, help="trajectory CSV")
    p.add_argument("--L2", type=int, required=True, help="highest hidden state index")
    p.add_argument("--M", type=int, required=True, help="highest signal index")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--freeze-absorbing-emissions", action="store_true",
                   help="pin the absorbing hidden state's emission row at its template value")
    p.add_argument("--out", required=True, help="output JSON")

    p = sub.add_parser("solve", help="optimal policy by grid value iteration")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--costs", required=True)
    p.add_argument("--grid-step", type=float, default=0.002)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--out-prefix", required=True)

    p = sub.add_parser("benchmark", help="factorial policy comparison")
    _common(p)
    p.add_argument("--instances", default=None,
                   help="JSON manifest with a 'choices' list; default all 64")
    p.add_argument("--grid-step", type=float, default=0.002)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--xi-step", type=float, default=0.01)
    p.add_argument("--kernel", default="best-condition",
                   choices=["best-condition", "stationary-mixture"],
                   help="hidden kernel assumed by the independence baseline")
    p.add_argument("--out", default=None, help="per-instance CSV path (defaults into out-dir)")

    p = sub.add_parser("sensitivity", help="base case vs independence and observation variants")
    _common(p)
    p.add_argument("--grid-step", type=float, default=0.002)
    p.add_argument("--tol", type=float, default=1e-3)

    p = sub.add_parser("check-orders", help="validate a model and its order assumptions")
    _common(p)
    p.add_argument("--model", required=True)

    p = sub.add_parser("motivating", help="small-system reproduction run")
    _common(p)
    p.add_argument("--T", type=int, default=200)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--restarts", type=int, default=30)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--grid-step", type=float, default=0.002)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--skip-fit", action="store_true",
                   help="solve the shipped reference estimates instead of fitting")
    return parser


def cmd_simulate(args) -> int:
    model = read_model(args.model)
    data = simulate_trajectories(model, T=args.T, n=args.n, seed=args.seed,
                                 reveal_hidden=args.reveal_hidden)
    write_trajectories(data, args.out)
    print(f"wrote {data.T} trajectories x {data.n} epochs to {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    data = read_trajectories(args.data, L2=args.L2, M=args.M)
    template = default_template(int(data.x1.max()), args.L2, args.M)
    result = multi_start_fit(data, template, restarts=args.restarts, seed=args.seed,
                             max_iter=args.max_iter, tol=args.tol,
                             freeze_absorbing_emissions=args.freeze_absorbing_emissions)
    best = result.best
    out = {
        "theta_hat": {"Q": best.theta_hat.Q.tolist(), "P": best.theta_hat.P.tolist(),
                      "B": best.theta_hat.B.tolist()},
        "P_mean": result.P_mean.tolist(), "P_sd": result.P_sd.tolist(),
        "B_mean": result.B_mean.tolist(), "B_sd": result.B_sd.tolist(),
        "loglik_trace": best.loglik_trace.tolist(),
        "iterations": best.iterations, "converged": best.converged,
        "flags": list(best.flags + best.q_flags),
        "restarts": result.restarts,
        "parameter_count": parameter_count(int(data.x1.max()), args.L2, args.M),
    }
    Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
    trace_csv = Path(args.out).with_suffix(".trace.csv")
    write_rows_csv(trace_csv, ["iter", "loglik"],
                   [[i, f"{v:.10g}"] for i, v in enumerate(best.loglik_trace)])
    print(f"fit: loglik {best.loglik_trace[-1]:.4f} after {best.iterations} iterations "
          f"({'converged' if best.converged else 'iteration cap'}); wrote {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    model = read_model(args.model)
    costs = read_costs(args.costs)
    grid = BeliefGrid.from_step(args.grid_step, model.n_s2)
    res = value_iteration(model, costs, grid, tol=args.tol)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_value_csv(res.value, f"{prefix}_value.csv")
    write_policy_csv(res.policy, f"{prefix}_policy.csv")
    if model.L2 == 1:
        report = policy_structure_report(model, costs, res.value, res.policy)
        Path(f"{prefix}_structure.json").write_text(
            json.dumps(report.as_dict(), indent=2) + "\n")
        Path(f"{prefix}_heatmap.txt").write_text(policy_heatmap(res.policy) + "\n")
    meta = {"iterations": res.iterations, "residual": res.residual,
            "grid_step": args.grid_step, "tol": args.tol,
            "value_at_new_system": float(res.value.values[0, 0])}
    Path(f"{prefix}_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"solved in {res.iterations} iterations, residual {res.residual:.2e}; "
          f"V(new system) = {res.value.values[0, 0]:.4f}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    subset = None
    if args.instances:
        manifest = json.loads(Path(args.instances).read_text())
        subset = manifest["choices"]
    out_dir = Path(args.out_dir)
    report = experiments.run_benchmark64(out_dir, subset=subset,
                                         grid_step=args.grid_step, tol=args.tol,
                                         xi_step=args.xi_step, kernel=args.kernel,
                                         threads=args.threads)
    if args.out:
        (out_dir / "benchmark_instances.csv").replace(args.out)
    n_ok, n_bad = len(report["records"]), len(report["failures"])
    print(f"benchmark: {n_ok} instances solved, {n_bad} failed; outputs in {out_dir}")
    return EXIT_OK if n_bad == 0 else EXIT_NUMERICAL


def cmd_sensitivity(args) -> int:
    report = experiments.run_sensitivity(Path(args.out_dir), grid_step=args.grid_step,
                                         tol=args.tol)
    for name, v in report["values"].items():
        print(f"{name}: V(new system) = {v:.2f}")
    return EXIT_OK


def cmd_check_orders(args) -> int:
    model = read_model(args.model)
    report = check_assumptions(model)
    for name, cert in report.items():
        extra = f" witness={cert.witness}" if cert.witness is not None else ""
        print(f"{name}: {cert.verdict}{extra}")
    return EXIT_OK


def cmd_motivating(args) -> int:
    report = experiments.run_motivating(
        Path(args.out_dir), seed=args.seed if args.seed != 0 else experiments.MOTIVATING_SEED,
        T=args.T, n=args.n, restarts=args.restarts, max_iter=args.max_iter,
        grid_step=args.grid_step, tol=args.tol, skip_fit=args.skip_fit)
    vals = report["values"]
    ref = report["reference"]
    print(f"V(true parameters)      = {vals['value_true']:.2f}   "
          f"(reference {ref['motivating_value_true']})")
    print(f"V(estimated parameters) = {vals['value_estimated']:.2f}   "
          f"(reference {ref['motivating_value_estimated']})")
    print(f"difference              = {vals['gap_percent']:.2f}%   "
          f"(reference {ref['motivating_gap_percent']}%)")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "solve": cmd_solve,
    "benchmark": cmd_benchmark,
    "sensitivity": cmd_sensitivity,
    "check-orders": cmd_check_orders,
    "motivating": cmd_motivating,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ZeroLikelihoodError, SolverError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as err:
        print(f"validation failure: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as err:
        print(f"i/o failure: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
