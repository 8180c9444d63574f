"""Canned reproduction experiments: motivating, benchmark64, sensitivity.

Every experiment writes a ``manifest.json`` echo of all resolved settings and
seeds next to its outputs; re-running with the echoed settings reproduces the
outputs bit-for-bit. Reference values quoted in the reports are the published
figures the runs are compared against; comparisons never feed back into the
computation.
"""

from __future__ import annotations

import json
import multiprocessing
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import numpy as np

from .baselines import GapRecord, benchmark_instance
from .estimate import estimate_q_matrix, multi_start_fit, parameter_count
from .model import (
    CostStructure,
    SystemModel,
    costs_from_dict,
    model_from_dict,
    model_to_dict,
    validate_model,
)
from .orders import check_assumptions
from .render import (
    policy_heatmap,
    replacement_thresholds,
    write_policy_csv,
    write_rows_csv,
    write_value_csv,
)
from .simulate import simulate_trajectories, write_trajectories
from .solver import BeliefGrid, policy_structure_report, value_iteration

#: data seed whose simulated dataset reproduces the reference estimate table
MOTIVATING_SEED = 42
#: restart stream seed for the motivating multi-start fit
MOTIVATING_RESTART_SEED = 1234

#: benchmark settings the source tables leave unstated (see repo docs)
BENCHMARK_SETUP_COST = 2.0
BENCHMARK_GAMMA = 0.95

FACTORS = ("operating_cost", "replacement_cost_u1", "replacement_cost_u2",
           "observation_matrix", "transition_matrix_u1", "transition_matrix_u2")

#: published reference values for the reports
REFERENCE = {
    "motivating_value_true": 950.59,
    "motivating_value_estimated": 976.74,
    "motivating_gap_percent": 2.75,
    "sensitivity_value_base": 137.03,
    "sensitivity_value_independent": 128.11,
}


def _data_json(name: str) -> dict:
    return json.loads(resources.files("pomaint.data").joinpath(name).read_text())


def motivating_model() -> SystemModel:
    return model_from_dict(_data_json("motivating_model.json"))


def motivating_costs() -> CostStructure:
    return costs_from_dict(_data_json("motivating_costs.json"))


def reference_estimates() -> SystemModel:
    """The published mean parameter estimates for the motivating system."""
    return model_from_dict(_data_json("motivating_reference_estimates.json"))


# --- benchmark instance generator ---------------------------------------------


def benchmark_q(choice: int) -> np.ndarray:
    if choice == 1:
        return np.array([
            [0.8, 0.04, 0.04, 0.04, 0.04, 0.04],
            [0.0, 0.8, 0.05, 0.05, 0.05, 0.05],
            [0.0, 0.0, 0.8, 1 / 15, 1 / 15, 1 / 15],
            [0.0, 0.0, 0.0, 0.8, 0.1, 0.1],
            [0.0, 0.0, 0.0, 0.0, 0.9, 0.1],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]])
    return np.array([
        [0.6, 0.08, 0.08, 0.08, 0.08, 0.08],
        [0.0, 0.6, 0.1, 0.1, 0.1, 0.1],
        [0.0, 0.0, 0.6, 2 / 15, 2 / 15, 2 / 15],
        [0.0, 0.0, 0.0, 0.6, 0.2, 0.2],
        [0.0, 0.0, 0.0, 0.0, 0.6, 0.4],
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]])


def benchmark_p(choice: int) -> np.ndarray:
    if choice == 1:
        lo = [[0.9, 0.1], [0.0, 1.0]]
        hi = [[0.8, 0.2], [0.0, 1.0]]
    else:
        lo = [[0.7, 0.3], [0.0, 1.0]]
        hi = [[0.6, 0.4], [0.0, 1.0]]
    return np.array([lo, lo, lo, hi, hi, hi])


def benchmark_b(choice: int) -> np.ndarray:
    if choice == 1:
        return np.array([[0.8, 0.2], [0.2, 0.8]])
    return np.array([[0.7, 0.3], [0.3, 0.7]])


def benchmark_operating(choice: int) -> tuple[np.ndarray, np.ndarray]:
    if choice == 1:
        return np.array([1.0, 1.5, 2.0, 2.5, 3.0, 3.5]), np.array([1.0, 10.0])
    return np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), np.array([1.0, 8.0])


def benchmark_cr1(choice: int) -> float:
    return 15.0 if choice == 1 else 8.0


def benchmark_cr2(choice: int) -> float:
    return 8.0 if choice == 1 else 6.0


def make_benchmark_instance(choices, c_s: float = BENCHMARK_SETUP_COST,
                            gamma: float = BENCHMARK_GAMMA
                            ) -> tuple[str, SystemModel, CostStructure]:
    """One factorial instance from six factor choices in {1, 2}.

    Factor order: operating cost, replacement cost of the observable /
    hidden component, observation matrix, observable / hidden transition
    matrix.
    """
    choices = tuple(int(c) for c in choices)
    if len(choices) != len(FACTORS) or any(c not in (1, 2) for c in choices):
        raise ValueError(f"choices must be six values in {{1,2}}, got {choices}")
    c_o1, c_o2 = benchmark_operating(choices[0])
    model = SystemModel(L1=5, L2=1, M=1, Q=benchmark_q(choices[4]),
                        P=benchmark_p(choices[5]), B=benchmark_b(choices[3]))
    costs = CostStructure(c_o1=c_o1, c_o2=c_o2, c_s=c_s,
                          c_r1=benchmark_cr1(choices[1]),
                          c_r2=benchmark_cr2(choices[2]), gamma=gamma)
    return "".join(str(c) for c in choices), model, costs


def all_benchmark_choices() -> list[tuple[int, ...]]:
    return [tuple(1 + (i >> b) % 2 for b in range(5, -1, -1)) for i in range(64)]


# --- experiment drivers --------------------------------------------------------


def _write_manifest(out: Path, name: str, settings: dict) -> None:
    from . import __version__
    echo = {"experiment": name, "version": __version__, **settings}
    (out / "manifest.json").write_text(json.dumps(echo, indent=2) + "\n")


def _check_and_store_orders(model: SystemModel, out: Path, name: str) -> None:
    report = validate_model(model)
    if report:
        raise ValueError(f"{name}: invalid model: " + "; ".join(report))
    orders = {k: v.verdict for k, v in check_assumptions(model).items()}
    (out / f"{name}_assumptions.json").write_text(json.dumps(orders, indent=2) + "\n")


def _solve_and_dump(model, costs, grid_step, tol, out: Path, prefix: str):
    grid = BeliefGrid.from_step(grid_step, model.n_s2)
    res = value_iteration(model, costs, grid, tol=tol)
    write_value_csv(res.value, out / f"{prefix}_value.csv")
    write_policy_csv(res.policy, out / f"{prefix}_policy.csv")
    (out / f"{prefix}_heatmap.txt").write_text(policy_heatmap(res.policy) + "\n")
    structure = policy_structure_report(model, costs, res.value, res.policy)
    (out / f"{prefix}_structure.json").write_text(
        json.dumps(structure.as_dict(), indent=2) + "\n")
    return res


def run_motivating(out_dir, seed: int = MOTIVATING_SEED, T: int = 200, n: int = 50,
                   restarts: int = 30, max_iter: int = 30,
                   restart_seed: int = MOTIVATING_RESTART_SEED,
                   grid_step: float = 0.002, tol: float = 1e-3,
                   skip_fit: bool = False) -> dict:
    """Full small-system walkthrough: simulate, estimate, solve, compare.

    With ``skip_fit`` the estimation stage is skipped and the shipped
    reference estimates are solved instead (deterministic).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = motivating_model()
    costs = motivating_costs()
    _check_and_store_orders(model, out, "model")

    report: dict = {"reference": REFERENCE}
    if skip_fit:
        theta_hat = reference_estimates()
        report["estimation"] = {"skipped": True, "theta_hat": "shipped reference estimates"}
    else:
        data = simulate_trajectories(model, T=T, n=n, seed=seed)
        write_trajectories(data, out / "trajectories.csv")
        Q_hat, _, q_flags = estimate_q_matrix(data, n_states=model.n_s1)
        ms = multi_start_fit(data, model, restarts=restarts, seed=restart_seed,
                             max_iter=max_iter, freeze_absorbing_emissions=True)
        traces = ms.best.loglik_trace
        write_rows_csv(out / "loglik_trace.csv", ["iter", "loglik"],
                       [[i, f"{v:.10g}"] for i, v in enumerate(traces)])
        rows = []
        for j in range(model.n_s1):
            for col in range(model.n_s2):
                rows.append([f"P[{j}](0,{col})", f"{ms.P_mean[j, 0, col]:.6f}",
                             f"{ms.P_sd[j, 0, col]:.6f}"])
        for i in range(model.n_s2):
            for z in range(model.n_signals):
                rows.append([f"B({i},{z})", f"{ms.B_mean[i, z]:.6f}", f"{ms.B_sd[i, z]:.6f}"])
        for j in range(model.n_s1):
            for k in range(model.n_s1):
                rows.append([f"Q({j},{k})", f"{Q_hat[j, k]:.6f}", ""])
        write_rows_csv(out / "estimates_table.csv", ["parameter", "mean", "sd"], rows)
        theta_hat = model.replace(Q=Q_hat, P=ms.P_mean, B=ms.B_mean)
        report["estimation"] = {
            "T": T, "n": n, "restarts": restarts,
            "loglik_final": float(traces[-1]),
            "q_flags": list(q_flags),
            "parameter_count": parameter_count(model.L1, model.L2, model.M),
        }

    res_true = _solve_and_dump(model, costs, grid_step, tol, out, "true")
    res_est = _solve_and_dump(theta_hat, costs, grid_step, tol, out, "estimated")
    v_true = float(res_true.value.values[0, 0])
    v_est = float(res_est.value.values[0, 0])
    report["values"] = {
        "value_true": v_true,
        "value_estimated": v_est,
        "gap_percent": 100.0 * (v_est - v_true) / v_true,
        "solver": {"grid_step": grid_step, "tol": tol,
                   "iterations_true": res_true.iterations,
                   "residual_true": res_true.residual},
    }
    _write_manifest(out, "motivating", {
        "seed": seed, "restart_seed": restart_seed, "T": T, "n": n,
        "restarts": restarts, "max_iter": max_iter, "grid_step": grid_step,
        "tol": tol, "skip_fit": skip_fit})
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def _solve_one_benchmark(args) -> dict:
    choices, settings = args
    instance, model, costs = make_benchmark_instance(
        choices, c_s=settings["c_s"], gamma=settings["gamma"])
    grid = BeliefGrid.from_step(settings["grid_step"], model.n_s2)
    try:
        rec = benchmark_instance(instance, model, costs, grid,
                                 xi_step=settings["xi_step"], tol=settings["tol"],
                                 kernel=settings["kernel"])
        return {"ok": True, "record": asdict(rec), "choices": choices}
    except Exception as err:  # isolate per-instance failures, keep the run going
        return {"ok": False, "instance": instance, "choices": choices, "error": repr(err)}


def run_benchmark64(out_dir, subset: list | None = None, grid_step: float = 0.002,
                    tol: float = 1e-3, xi_step: float = 0.01,
                    c_s: float = BENCHMARK_SETUP_COST, gamma: float = BENCHMARK_GAMMA,
                    kernel: str = "best-condition", threads: int = 1) -> dict:
    """Solve the 2^6 factorial benchmark and summarize gaps per factor choice."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    choice_list = [tuple(c) for c in subset] if subset else all_benchmark_choices()
    settings = {"grid_step": grid_step, "tol": tol, "xi_step": xi_step,
                "c_s": c_s, "gamma": gamma, "kernel": kernel}
    jobs = [(c, settings) for c in choice_list]
    if threads > 1:
        with multiprocessing.get_context("fork").Pool(threads) as pool:
            results = pool.map(_solve_one_benchmark, jobs)
    else:
        results = [_solve_one_benchmark(job) for job in jobs]

    records = [r for r in results if r["ok"]]
    failures = [r for r in results if not r["ok"]]
    header = ["instance", "V0", "V1", "V2", "V3", "gap1", "gap2", "gap3",
              "xi1", "xi2", "upsilon2"]
    rows = [[r["record"][k] for k in header] for r in records]
    write_rows_csv(out / "benchmark_instances.csv", header, rows)

    summary_rows = []
    if records:
        gaps = {i: np.array([r["record"][f"gap{i}"] for r in records]) for i in (1, 2, 3)}
        choice_arr = np.array([r["choices"] for r in records])
        for f_i, factor in enumerate(FACTORS):
            for choice in (1, 2):
                mask = choice_arr[:, f_i] == choice
                if not mask.any():
                    continue
                row = [factor, choice]
                for i in (1, 2, 3):
                    row += [f"{gaps[i][mask].min():.2f}", f"{gaps[i][mask].mean():.2f}",
                            f"{gaps[i][mask].max():.2f}"]
                summary_rows.append(row)
        row = ["total", ""]
        for i in (1, 2, 3):
            row += [f"{gaps[i].min():.2f}", f"{gaps[i].mean():.2f}", f"{gaps[i].max():.2f}"]
        summary_rows.append(row)
    write_rows_csv(out / "benchmark_summary.csv",
                   ["factor", "choice",
                    "p1_min", "p1_mean", "p1_max",
                    "p2_min", "p2_mean", "p2_max",
                    "p3_min", "p3_mean", "p3_max"], summary_rows)
    _write_manifest(out, "benchmark64", {**settings, "threads": threads,
                                         "instances": [list(c) for c in choice_list]})
    if failures:
        (out / "failures.json").write_text(json.dumps(failures, indent=2) + "\n")
    return {"records": [r["record"] for r in records], "failures": failures,
            "summary_rows": summary_rows}


def run_sensitivity(out_dir, grid_step: float = 0.002, tol: float = 1e-3,
                    c_s: float = BENCHMARK_SETUP_COST,
                    gamma: float = BENCHMARK_GAMMA) -> dict:
    """Base factorial instance against independence and observation-precision variants."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, base_model, costs = make_benchmark_instance((1,) * 6, c_s=c_s, gamma=gamma)
    variants = {
        "base": base_model,
        "independent": base_model.replace(P=np.stack([base_model.P[0]] * base_model.n_s1)),
        "better_observation": base_model.replace(B=np.array([[0.9, 0.1], [0.1, 0.9]])),
        "worse_observation": base_model.replace(B=np.array([[0.7, 0.3], [0.3, 0.7]])),
    }
    values = {}
    thresholds = {}
    for name, model in variants.items():
        _check_and_store_orders(model, out, name)
        res = _solve_and_dump(model, costs, grid_step, tol, out, name)
        values[name] = float(res.value.values[0, 0])
        thresholds[name] = replacement_thresholds(res.policy)
    report = {
        "values": values,
        "replacement_thresholds": thresholds,
        "reference": {"base": REFERENCE["sensitivity_value_base"],
                      "independent": REFERENCE["sensitivity_value_independent"]},
    }
    _write_manifest(out, "sensitivity", {"grid_step": grid_step, "tol": tol,
                                         "c_s": c_s, "gamma": gamma})
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report
