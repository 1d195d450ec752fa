"""Command-line interface tests.

Every test drives ``main`` in process and checks exit codes, the JSON
report on stdout, and the files written.  The evaluate fixture is built
so the outcome model fits exactly, making the reported welfare a hand
computation.
"""

import json

import numpy as np
import pytest

from netwelfare.cli import main
from netwelfare.data import Dataset, ExperimentConfig, load_dataset, write_nodes_csv
from netwelfare.graph import Graph, write_edge_csv
from netwelfare.policyopt import parse_lp


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    report = None
    if captured.out.strip():
        try:
            report = json.loads(captured.out)
        except json.JSONDecodeError:
            report = captured.out
    return code, report, captured.err


def write_dataset(tmp_path, n=12, stem="train"):
    """Cycle graph, Y = 3 + 2 d + s exactly.  The arm pattern mixes
    treated and exposed units so d and s stay separately identified and
    the least-squares fit recovers the outcome equation."""
    edges = [(i, (i + 1) % n) for i in range(n)]
    g = Graph.from_edges(n, edges)
    D = np.array([(1, 0, 0, 1, 1, 0)[i % 6] for i in range(n)], dtype=np.int64)
    S = np.array([D[g.neighbors(i)].sum() for i in range(n)], dtype=float)
    Y = 3.0 + 2.0 * D + S
    Z = np.linspace(-1.0, 1.0, n)[:, None]
    ds = Dataset(
        graph=g,
        Y=Y,
        D=D,
        Z=Z,
        z_names=["Z1"],
        is_sample=np.ones(n, dtype=bool),
        rho=np.ones(n),
        interference_degree=1,
    )
    nodes, edges_path = tmp_path / f"{stem}_nodes.csv", tmp_path / f"{stem}_edges.csv"
    write_nodes_csv(nodes, ds)
    write_edge_csv(edges_path, g)
    return str(nodes), str(edges_path)


# ---------------------------------------------------------------------------
# simulate


def test_simulate_writes_reproducible_files(tmp_path, capsys):
    args = [
        "simulate", "--dgp", "geometric", "--n", "40", "--seed", "1",
        "--nodes", str(tmp_path / "n1.csv"), "--edges", str(tmp_path / "e1.csv"),
    ]
    code, report, _ = run(capsys, *args)
    assert code == 0
    assert report["n"] == 40
    args2 = [
        "simulate", "--dgp", "geometric", "--n", "40", "--seed", "1",
        "--nodes", str(tmp_path / "n2.csv"), "--edges", str(tmp_path / "e2.csv"),
    ]
    code, _, _ = run(capsys, *args2)
    assert code == 0
    assert (tmp_path / "n1.csv").read_bytes() == (tmp_path / "n2.csv").read_bytes()
    assert (tmp_path / "e1.csv").read_bytes() == (tmp_path / "e2.csv").read_bytes()
    ds = load_dataset(tmp_path / "n1.csv", tmp_path / "e1.csv", ExperimentConfig())
    assert ds.n_units == 40
    assert ds.z_names == ["X1", "X2", "X3", "X4"]


def test_simulate_different_seed_differs(tmp_path, capsys):
    for seed, stem in ((3, "a"), (4, "b")):
        code, _, _ = run(
            capsys, "simulate", "--dgp", "geometric", "--n", "30", "--seed", str(seed),
            "--nodes", str(tmp_path / f"{stem}.csv"), "--edges", str(tmp_path / f"{stem}e.csv"),
        )
        assert code == 0
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()


def test_simulate_barabasi_alias(tmp_path, capsys):
    code, report, _ = run(
        capsys, "simulate", "--dgp", "barabasi", "--n", "10", "--seed", "2",
        "--nodes", str(tmp_path / "n.csv"), "--edges", str(tmp_path / "e.csv"),
    )
    assert code == 0
    assert report["network"] == "barabasi_albert"
    ds = load_dataset(tmp_path / "n.csv", tmp_path / "e.csv", ExperimentConfig())
    assert ds.n_units == 10


def test_simulate_requires_seed(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["simulate", "--n", "10", "--nodes", str(tmp_path / "n.csv"),
              "--edges", str(tmp_path / "e.csv")])


# ---------------------------------------------------------------------------
# fit


def test_fit_reports_diagnostics(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    code, report, _ = run(capsys, "fit", "--nodes", nodes, "--edges", edges)
    assert code == 0
    assert report["n_sample"] == 12
    assert report["trimmed_cells"] == 0
    assert isinstance(report["diagnostics"], list)
    assert report["crossfit_folds"] is None


def test_fit_crossfit_path(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path, n=24)
    code, report, _ = run(
        capsys, "fit", "--nodes", nodes, "--edges", edges, "--crossfit-radius", "1"
    )
    assert code == 0
    assert report["crossfit_folds"] >= 2


def test_fit_missing_nodes_file_exits_2(tmp_path, capsys):
    code, _, err = run(capsys, "fit", "--nodes", str(tmp_path / "nope.csv"),
                       "--edges", str(tmp_path / "also_nope.csv"))
    assert code == 2
    assert "not found" in err


def test_fit_bad_config_value_exits_2(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("interference_degree = 7\n")
    code, _, err = run(capsys, "fit", "--nodes", nodes, "--edges", edges, "--config", str(cfg))
    assert code == 2


def test_corrupt_nodes_file_exits_3(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    text = open(nodes).read().replace(",1,", ",7,", 1)  # non-binary treatment
    bad = tmp_path / "bad_nodes.csv"
    bad.write_text(text)
    code, _, err = run(capsys, "fit", "--nodes", str(bad), "--edges", edges)
    assert code == 3


# ---------------------------------------------------------------------------
# optimize


def write_direct_effect_toy(tmp_path):
    """Five units, Y = 10 d exactly: treating everyone is dominant."""
    n = 5
    g = Graph.from_edges(n, [(0, 1), (1, 2)])
    D = np.array([1, 0, 1, 0, 1], dtype=np.int64)
    Y = 10.0 * D
    Z = np.array([[-0.5], [0.3], [0.1], [-0.2], [0.4]])
    ds = Dataset(
        graph=g, Y=Y, D=D, Z=Z, z_names=["Z1"],
        is_sample=np.ones(n, dtype=bool), rho=np.ones(n),
    )
    nodes, edges = tmp_path / "toy_nodes.csv", tmp_path / "toy_edges.csv"
    write_nodes_csv(nodes, ds)
    write_edge_csv(edges, g)
    return str(nodes), str(edges)


def test_optimize_treats_all_when_direct_effects_dominate(tmp_path, capsys):
    nodes, edges = write_direct_effect_toy(tmp_path)
    code, report, _ = run(capsys, "optimize", "--nodes", nodes, "--edges", edges)
    assert code == 0
    assert report["assignment"] == [1, 1, 1, 1, 1]
    assert report["certificate"] is True
    # Five rows force the ridged fit, so the value is close, not exact.
    assert report["welfare"]["value"] == pytest.approx(10.0, rel=0.05)


def test_optimize_capacity_limits_treated(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path, n=10)
    code, report, _ = run(
        capsys, "optimize", "--nodes", nodes, "--edges", edges, "--capacity", "0.2"
    )
    assert code == 0
    assert sum(report["assignment"]) <= 2


def test_optimize_export_lp_self_parses(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    lp_path = tmp_path / "program.lp"
    code, report, _ = run(
        capsys, "optimize", "--nodes", nodes, "--edges", edges, "--export-lp", str(lp_path)
    )
    assert code == 0
    program = parse_lp(lp_path)
    assert program.n == 12
    assert program.kind == "linear_threshold"


def test_optimize_out_file(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    out = tmp_path / "report.json"
    code, report, _ = run(
        capsys, "optimize", "--nodes", nodes, "--edges", edges, "--out", str(out)
    )
    assert code == 0
    assert report is None  # written to file instead of stdout
    parsed = json.loads(out.read_text())
    assert parsed["command"] == "optimize"
    assert parsed["backend"] == "cells"


def test_optimize_estimator_switch(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    code, report, _ = run(
        capsys, "optimize", "--nodes", nodes, "--edges", edges, "--estimator", "plugin"
    )
    assert code == 0
    assert report["welfare_selected"] == report["welfare_plugin"]


def test_optimize_unknown_backend_exits_2(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    with pytest.raises(SystemExit):
        main(["optimize", "--nodes", nodes, "--edges", edges, "--backend", "gurobi"])


# ---------------------------------------------------------------------------
# evaluate


def test_evaluate_constant_policies_match_hand_computation(tmp_path, capsys):
    # Y = 3 + 2 d + s exactly, cycle graph (every degree 2).  Under
    # pi = 1 each unit sees d = 1, s = 2: welfare 3 + 2 + 2 = 7; under
    # pi = 0 welfare is 3.  The exact fit makes AIPW equal plugin.
    nodes, edges = write_dataset(tmp_path)
    treat_all = tmp_path / "all.json"
    treat_all.write_text(json.dumps({"kind": "explicit_assignment", "assignment": [1] * 12}))
    none = tmp_path / "none.json"
    none.write_text(json.dumps({"kind": "explicit_assignment", "assignment": [0] * 12}))
    code, rep1, _ = run(capsys, "evaluate", "--nodes", nodes, "--edges", edges,
                        "--policy", str(treat_all))
    assert code == 0
    assert rep1["welfare"] == pytest.approx(7.0, abs=1e-8)
    assert rep1["estimates"]["plugin"]["value"] == pytest.approx(7.0, abs=1e-8)
    code, rep0, _ = run(capsys, "evaluate", "--nodes", nodes, "--edges", edges,
                        "--policy", str(none))
    assert code == 0
    assert rep0["welfare"] == pytest.approx(3.0, abs=1e-8)


def test_evaluate_accepts_solve_report_and_linear_beta(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    out = tmp_path / "solve.json"
    code, _, _ = run(capsys, "optimize", "--nodes", nodes, "--edges", edges, "--out", str(out))
    assert code == 0
    code, rep, _ = run(capsys, "evaluate", "--nodes", nodes, "--edges", edges,
                       "--policy", str(out))
    assert code == 0
    solve = json.loads(out.read_text())
    assert rep["welfare"] == pytest.approx(solve["value"], abs=1e-9)
    bare = tmp_path / "bare.json"
    bare.write_text(json.dumps({"beta": [1.0, 0.0]}))
    code, rep2, _ = run(capsys, "evaluate", "--nodes", nodes, "--edges", edges,
                        "--policy", str(bare))
    assert code == 0
    assert rep2["welfare"] == pytest.approx(7.0, abs=1e-8)


def test_evaluate_baselines_rows(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    pol = tmp_path / "p.json"
    pol.write_text(json.dumps({"beta": [1.0, 0.0]}))
    code, rep, _ = run(capsys, "evaluate", "--nodes", nodes, "--edges", edges,
                       "--policy", str(pol), "--baselines", "degree,random",
                       "--capacity", "0.5", "--seed", "3", "--random-reps", "5")
    assert code == 0
    assert set(rep["baselines"]) == {"degree", "random"}
    assert np.isfinite(rep["baselines"]["degree"]["value"])
    assert rep["baselines"]["random"]["reps"] == 5


def test_evaluate_missing_policy_file_exits_2(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    code, _, err = run(capsys, "evaluate", "--nodes", nodes, "--edges", edges,
                       "--policy", str(tmp_path / "ghost.json"))
    assert code == 2
    assert "not found" in err


def test_evaluate_dimension_mismatch_exits_3(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    pol = tmp_path / "wide.json"
    pol.write_text(json.dumps({"kind": "linear_threshold", "beta": [0.1, 0.2, 0.3, 0.4]}))
    code, _, err = run(capsys, "evaluate", "--nodes", nodes, "--edges", edges,
                       "--policy", str(pol))
    assert code == 3
    assert "coefficients" in err


def test_evaluate_malformed_policy_json_exits_3(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    pol = tmp_path / "broken.json"
    pol.write_text("{not json")
    code, _, _ = run(capsys, "evaluate", "--nodes", nodes, "--edges", edges,
                     "--policy", str(pol))
    assert code == 3


def test_evaluate_baselines_need_capacity(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    pol = tmp_path / "p.json"
    pol.write_text(json.dumps({"beta": [1.0, 0.0]}))
    code, _, _ = run(capsys, "evaluate", "--nodes", nodes, "--edges", edges,
                     "--policy", str(pol), "--baselines", "degree")
    assert code == 2


# ---------------------------------------------------------------------------
# benchmark


def test_benchmark_writes_tables_and_summary(tmp_path, capsys):
    csv_path, json_path = tmp_path / "b.csv", tmp_path / "b.json"
    code, rep, _ = run(
        capsys, "benchmark", "--n-values", "30", "--reps", "2", "--seed", "5",
        "--random-reps", "3", "--out-csv", str(csv_path), "--out-json", str(json_path),
    )
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "rep,n,method,welfare"
    assert len(lines) == 1 + 2 * 5
    summary = json.loads(json_path.read_text())
    assert rep["medians"] == summary["medians"]
    assert "oracle" in summary["medians"]["30"]


def test_benchmark_same_seed_identical_outputs(tmp_path, capsys):
    paths = []
    for stem in ("x", "y"):
        c, j = tmp_path / f"{stem}.csv", tmp_path / f"{stem}.json"
        code, _, _ = run(
            capsys, "benchmark", "--n-values", "30", "--reps", "2", "--seed", "7",
            "--random-reps", "3", "--out-csv", str(c), "--out-json", str(j),
        )
        assert code == 0
        paths.append((c, j))
    assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
    assert paths[0][1].read_bytes() == paths[1][1].read_bytes()


def test_benchmark_requires_seed(capsys):
    with pytest.raises(SystemExit):
        main(["benchmark", "--n-values", "30", "--reps", "1"])


def test_benchmark_bad_method_exits_2(tmp_path, capsys):
    code, _, _ = run(
        capsys, "benchmark", "--n-values", "30", "--reps", "1", "--seed", "1",
        "--methods", "newm,alchemy",
        "--out-csv", str(tmp_path / "c.csv"), "--out-json", str(tmp_path / "j.json"),
    )
    assert code == 2
    assert not (tmp_path / "c.csv").exists()


# ---------------------------------------------------------------------------
# export-lp


def test_export_lp_round_trip(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path)
    out = tmp_path / "program.lp"
    code, rep, _ = run(capsys, "export-lp", "--nodes", nodes, "--edges", edges,
                       "--out", str(out), "--capacity", "0.5")
    assert code == 0
    program = parse_lp(out)
    assert program.n == 12
    assert program.capacity_count == 6
    assert rep["n_variables"] == program.n_variables


def test_config_file_plus_flag_override(tmp_path, capsys):
    nodes, edges = write_dataset(tmp_path, n=10)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("capacity = 0.5\ntrim = 0.02\n")
    code, report, _ = run(
        capsys, "optimize", "--nodes", nodes, "--edges", edges,
        "--config", str(cfg), "--capacity", "0.2",
    )
    assert code == 0
    assert sum(report["assignment"]) <= 2
