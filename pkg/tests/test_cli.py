import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from stablespace.cli import main
from stablespace.core import Panel, read_panel_csv, standardize, write_panel_csv


def run(*argv):
    return main([str(a) for a in argv])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def simulate_to(tmp_path, *extra):
    out = tmp_path / "sim"
    assert run("simulate", "--output-dir", out, *extra) == 0
    return out


# ---------------------------------------------------------------- simulate


def test_simulate_is_byte_for_byte_deterministic(tmp_path):
    a = simulate_to(tmp_path / "a", "--m", 4, "--r", 2, "--T", 50, "--replicates", 2, "--seed", 9)
    b = simulate_to(tmp_path / "b", "--m", 4, "--r", 2, "--T", 50, "--replicates", 2, "--seed", 9)
    names = sorted(p.name for p in a.iterdir())
    assert names == ["panel_0000.csv", "panel_0001.csv", "truth_0000.json", "truth_0001.json"]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_simulate_shape_and_truth(tmp_path):
    out = simulate_to(tmp_path, "--m", 6, "--r", 4, "--T", 100)
    panel = read_panel_csv(out / "panel_0000.csv")
    assert panel.values.shape == (100, 6)
    truth = json.loads((out / "truth_0000.json").read_text())
    assert np.array(truth["beta"]).shape == (6, 4)


def test_simulate_overlapping_sets(tmp_path, capsys):
    code = run("simulate", "--output-dir", tmp_path, "--m", 4, "--r", 2, "--T", 30,
               "--scenario", 2, "--M1", 0, 1, "--M2", 1)
    assert code == 3
    assert "OverlappingIndexSets" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert run("simulate", "--replicates", 0, "--output-dir", tmp_path) == 2
    assert run("estimate", "--method", "ica") == 2
    assert run("estimate", "--output-dir", tmp_path) == 2
    assert run("frobnicate") == 2


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 3, "r": 1, "T": 40, "replicates": 2}))
    out = tmp_path / "o"
    assert run("simulate", "--config", cfg, "--T", 25, "--output-dir", out) == 0
    assert read_panel_csv(out / "panel_0001.csv").values.shape == (25, 3)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    assert run("simulate", "--config", bad, "--output-dir", out) == 2


# ---------------------------------------------------------------- estimate


def test_estimate_outputs(tmp_path):
    sim = simulate_to(tmp_path, "--m", 5, "--r", 3, "--T", 120, "--seed", 4)
    for method in ("pca", "pls", "spca", "johansen"):
        out = tmp_path / method
        assert run("estimate", "--input", sim / "panel_0000.csv", "--method", method,
                   "--output-dir", out) == 0
        basis = json.loads((out / "basis.json").read_text())
        assert basis["method"] == method
        assert np.array(basis["basis"]).shape[0] == 5
        scores = read_rows(out / "scores.csv")
        assert len(scores) == 1 + 120
        weights = read_rows(out / "weights.csv")
        assert weights[0][:2] == ["component", "stable"] and len(weights[0]) == 7


def test_estimate_johansen_dimension_limit(tmp_path, capsys):
    path = tmp_path / "wide.csv"
    write_panel_csv(Panel.from_array(np.random.default_rng(0).standard_normal((80, 12))), path)
    assert run("estimate", "--input", path, "--method", "johansen",
               "--output-dir", tmp_path / "o") == 3
    assert "DimensionTooLarge" in capsys.readouterr().err


def test_emitted_csv_round_trips(tmp_path):
    sim = simulate_to(tmp_path, "--m", 3, "--r", 1, "--T", 60)
    out = tmp_path / "pre"
    assert run("preprocess", "--input", sim / "panel_0000.csv", "--output-dir", out) == 0
    first = read_panel_csv(out / "preprocessed.csv")
    again = tmp_path / "again.csv"
    write_panel_csv(first, again)
    assert again.read_bytes() == (out / "preprocessed.csv").read_bytes()
    np.testing.assert_array_equal(read_panel_csv(again).values, first.values)


def test_preprocess_integration_report(tmp_path):
    sim = simulate_to(tmp_path, "--m", 3, "--r", 1, "--T", 100)
    out = tmp_path / "pre"
    assert run("preprocess", "--input", sim / "panel_0000.csv", "--output-dir", out,
               "--no-detrend", "--integration-report") == 0
    rows = read_rows(out / "integration_report.csv")
    assert rows[0] == ["series", "order", "kpss_pvalues"] and len(rows) == 4


def test_pls_dimension_within_one(tmp_path):
    hits = 0
    for seed in range(50):
        sim = simulate_to(tmp_path / str(seed), "--m", 6, "--r", 4, "--T", 100, "--seed", seed)
        out = tmp_path / str(seed) / "est"
        assert run("estimate", "--input", sim / "panel_0000.csv", "--method", "pls",
                   "--output-dir", out) == 0
        hits += abs(json.loads((out / "basis.json").read_text())["r_hat"] - 4) <= 1
    assert hits / 50 >= 0.70


# ----------------------------------------------------------------- project


def test_project_score_series_has_zero_error(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.standard_normal((150, 3))
    x[:, 2] = x[:, 0]  # identical series give a rank-deficient panel
    x[:, 2] += 1e-3 * rng.standard_normal(150)
    path = tmp_path / "p.csv"
    write_panel_csv(Panel.from_array(x), path)
    out = tmp_path / "o"
    assert run("project", "--input", path, "--method", "pca", "--k", 3, "--output-dir", out) == 0
    nmse = [float(r[1]) for r in read_rows(out / "nmse.csv")[1:]]
    # Three stationary scores span all three standardized series.
    assert max(nmse) <= 1e-20
    assert len(read_rows(out / "fitted.csv")) == 151


def test_project_too_many_scores(tmp_path, capsys):
    path = tmp_path / "p.csv"
    write_panel_csv(Panel.from_array(np.random.default_rng(2).standard_normal((100, 3))), path)
    assert run("project", "--input", path, "--method", "pca", "--k", 4,
               "--output-dir", tmp_path / "o") == 3
    assert "FewerThanKStableScores" in capsys.readouterr().err


def _projection_study(tmp_path, replicates=20):
    """Mean normalized MSE per series for each method on panels shaped like
    the seven-indicator example: three I(0), two I(1) and two I(2) series."""
    sim = simulate_to(tmp_path, "--m", 7, "--r", 6, "--T", 216, "--scenario", 2,
                      "--n-m1", 2, "--n-m2", 2, "--replicates", replicates, "--seed", 0)
    per_method = {m: [] for m in ("pca", "pls", "johansen")}
    for rep in range(replicates):
        row = {}
        for method in per_method:
            out = tmp_path / f"{method}_{rep}"
            code = run("project", "--input", sim / f"panel_{rep:04d}.csv", "--method", method,
                       "--output-dir", out)
            if code != 0:
                break
            row[method] = [float(r[1]) for r in read_rows(out / "nmse.csv")[1:]]
        if len(row) == len(per_method):
            for method, v in row.items():
                per_method[method].append(v)
    return {m: np.mean(v, axis=0) for m, v in per_method.items()}


@pytest.fixture(scope="module")
def projection_study(tmp_path_factory):
    return _projection_study(tmp_path_factory.mktemp("projection"))


def test_stationary_pca_and_pls_projections_agree(projection_study):
    diff = np.abs(projection_study["pca"] - projection_study["pls"])
    assert np.sum(diff <= 0.05) >= 5


def test_johansen_projection_is_worst(projection_study):
    others = np.maximum(projection_study["pca"], projection_study["pls"])
    assert np.all(projection_study["johansen"] > others)


# ------------------------------------------------------ benchmark, consistency


def test_benchmark_smoke(tmp_path, capsys):
    out = tmp_path / "b"
    assert run("benchmark", "--m", 5, "--T", 60, "--r-values", 3, "--cases", 1,
               "--methods", "pca", "--replicates", 3, "--output-dir", out) == 0
    table = read_rows(out / "table.csv")
    assert table[0] == ["method", "r", "Case 1"]
    assert len(table) == 2 and table[1][:2] == ["pca", "3"]
    mean, sd = table[1][2].replace("(", "").replace(")", "").split()
    assert np.isfinite(float(mean)) and np.isfinite(float(sd))
    assert "pca" in capsys.readouterr().out
    for name in ("dimension_histogram.csv", "distances.csv", "replicates.csv"):
        assert (out / name).exists()


def test_benchmark_parallelism_does_not_change_output(tmp_path):
    args = ["--m", 5, "--T", 60, "--r-values", 3, "--cases", 1, 3, "--methods", "pca", "pls",
            "--replicates", 4, "--seed", 3]
    assert run("benchmark", *args, "--parallelism", 1, "--output-dir", tmp_path / "p1") == 0
    assert run("benchmark", *args, "--parallelism", 8, "--output-dir", tmp_path / "p8") == 0
    for name in ("table.csv", "replicates.csv", "distances.csv", "dimension_histogram.csv"):
        assert (tmp_path / "p1" / name).read_bytes() == (tmp_path / "p8" / name).read_bytes()


def test_consistency_outputs(tmp_path):
    out = tmp_path / "c"
    assert run("consistency", "--method", "pls", "--m", 4, "--r", 2, "--T-values", 100, 200,
               "--replicates", 1, "--output-dir", out) == 0
    med = read_rows(out / "consistency_medians.csv")
    vals = read_rows(out / "consistency_values.csv")
    assert len(med) == 3 and len(vals) == 3
    assert all(float(r[2]) > 0 and np.isfinite(float(r[2])) for r in med[1:])
    assert run("consistency", "--method", "johansen", "--output-dir", out) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "stablespace", "simulate", "--m", "3", "--r", "1", "--T", "20",
         "--output-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "panel_0000.csv").exists()
    proc = subprocess.run([sys.executable, "-m", "stablespace", "--help"], capture_output=True)
    assert proc.returncode == 0
