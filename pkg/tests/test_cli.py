import json
from pathlib import Path

import numpy as np
import pytest

from pomaint.cli import main
from pomaint.experiments import motivating_costs, motivating_model
from pomaint.model import write_costs, write_model
from pomaint.simulate import read_trajectories


@pytest.fixture()
def model_files(tmp_path):
    mp, cp = tmp_path / "model.json", tmp_path / "costs.json"
    write_model(motivating_model(), mp)
    write_costs(motivating_costs(), cp)
    return mp, cp


def test_simulate_then_fit_roundtrip(model_files, tmp_path):
    mp, _ = model_files
    traj = tmp_path / "traj.csv"
    rc = main(["simulate", "--model", str(mp), "--T", "15", "--n", "20",
               "--seed", "3", "--out", str(traj)])
    assert rc == 0
    data = read_trajectories(traj)
    assert data.T == 15 and data.n == 20 and data.seed == 3

    out = tmp_path / "fit.json"
    rc = main(["fit", "--data", str(traj), "--L2", "1", "--M", "1",
               "--restarts", "2", "--seed", "5", "--max-iter", "5",
               "--out", str(out)])
    assert rc == 0
    result = json.loads(out.read_text())
    assert result["restarts"] == 2
    assert len(result["loglik_trace"]) >= 2
    assert out.with_suffix(".trace.csv").exists()


def test_simulate_determinism_bitwise(model_files, tmp_path):
    mp, _ = model_files
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["simulate", "--model", str(mp), "--T", "5", "--n", "8",
                     "--seed", "11", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_outputs(model_files, tmp_path):
    mp, cp = model_files
    prefix = tmp_path / "solve" / "run"
    rc = main(["solve", "--model", str(mp), "--costs", str(cp),
               "--grid-step", "0.02", "--tol", "1e-3",
               "--out-prefix", str(prefix)])
    assert rc == 0
    for suffix in ("_value.csv", "_policy.csv", "_structure.json", "_heatmap.txt",
                   "_meta.json"):
        assert Path(f"{prefix}{suffix}").exists()
    meta = json.loads(Path(f"{prefix}_meta.json").read_text())
    assert meta["residual"] <= 1e-3
    header = Path(f"{prefix}_value.csv").read_text().splitlines()[0]
    assert header == "j,pi1,value"


def test_validation_failure_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"L1": 2, "L2": 1, "M": 1,
                               "Q": [[0.5, 0.4, 0.0], [0, 0.7, 0.3], [0, 0, 1]],
                               "P": [[[1, 0], [0, 1]]] * 3,
                               "B": [[1, 0], [0, 1]]}))
    rc = main(["check-orders", "--model", str(bad)])
    assert rc == 1


def test_io_failure_exit_code(tmp_path):
    rc = main(["simulate", "--model", str(tmp_path / "missing.json"),
               "--T", "2", "--n", "2", "--out", str(tmp_path / "x.csv")])
    assert rc == 3


def test_check_orders_output(model_files, capsys):
    mp, _ = model_files
    assert main(["check-orders", "--model", str(mp)]) == 0
    out = capsys.readouterr().out
    for name in ("A1", "A2", "A3", "A4"):
        assert f"{name}: certified-yes" in out


def test_benchmark_single_instance_deterministic(tmp_path):
    manifest = tmp_path / "inst.json"
    manifest.write_text(json.dumps({"choices": [[1, 1, 1, 1, 1, 1]]}))
    outs = []
    for run in ("r1", "r2"):
        out_dir = tmp_path / run
        rc = main(["benchmark", "--instances", str(manifest),
                   "--grid-step", "0.02", "--xi-step", "0.25",
                   "--out-dir", str(out_dir)])
        assert rc == 0
        outs.append((out_dir / "benchmark_instances.csv").read_bytes())
    assert outs[0] == outs[1]
    summary = (tmp_path / "r1" / "benchmark_summary.csv").read_text().splitlines()
    assert summary[0].startswith("factor,choice,p1_min")
    assert summary[-1].startswith("total,")


def test_motivating_skip_fit(tmp_path, capsys):
    rc = main(["motivating", "--skip-fit", "--grid-step", "0.02",
               "--out-dir", str(tmp_path / "mot")])
    assert rc == 0
    report = json.loads((tmp_path / "mot" / "report.json").read_text())
    assert report["estimation"]["skipped"] is True
    assert (tmp_path / "mot" / "manifest.json").exists()
    out = capsys.readouterr().out
    assert "V(true parameters)" in out


def test_manifest_echo_reproduces(tmp_path):
    args = ["sensitivity", "--grid-step", "0.05", "--out-dir"]
    dirs = [tmp_path / "s1", tmp_path / "s2"]
    for d in dirs:
        assert main(args + [str(d)]) == 0
    for name in ("report.json", "base_value.csv", "independent_policy.csv"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
