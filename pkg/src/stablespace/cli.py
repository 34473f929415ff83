"""Command-line entry point: ``stablespace <subcommand> [options]``.

Every option can also be given in a JSON file passed with ``--config``; keys
are the long option names with dashes replaced by underscores. Flags given
on the command line override the file.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .benchmark import BenchmarkConfig, run_benchmark
from .core import (
    EstimatorConfig,
    Panel,
    _fmt,
    _jsonable,
    integration_report,
    preprocess,
    read_panel_csv,
    write_panel_csv,
)
from .errors import DataError, FewerThanKStableScores, NumericalError
from .metrics import consistency_curve, project_onto_scores
from .pipeline import estimate
from .simulation import SimulationSpec, case_index_sets, simulate

log = logging.getLogger("stablespace")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

METHODS = ("johansen", "pca", "pls", "spca")

DEFAULTS = {
    "input": None,
    "output_dir": ".",
    "method": "pls",
    "significance": 0.05,
    "seed": 0,
    "replicates": 1,
    "parallelism": 1,
    "kpss_lags": None,
    "spca_penalty": 0.25,
    "johansen_lags": 2,
    # simulate / benchmark / consistency
    "m": 11,
    "r": 9,
    "T": 100,
    "scenario": 1,
    "n_m1": None,
    "n_m2": 0,
    "df": 3.0,
    "r_values": [10, 9, 8],
    "cases": None,
    "methods": list(METHODS),
    "T_values": [100, 200, 400],
    # preprocess
    "period": None,
    "no_detrend": False,
    "log_columns": [],
    "integration_report": False,
    # project
    "k": 2,
}


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--output-dir", help="directory for output files (default: .)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--significance", type=float, help="KPSS / trace-test level")
    p.add_argument("--parallelism", type=int, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def _estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--kpss-lags", type=int)
    p.add_argument("--spca-penalty", type=float)
    p.add_argument("--johansen-lags", type=int)


def _design_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, help="number of series")
    p.add_argument("--r", type=int, help="dimension of the stability space")
    p.add_argument("--T", type=int, help="sample length")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablespace", description="Estimate and benchmark stability spaces of panels."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write simulated panels and their ground truth")
    _common(p)
    _design_flags(p)
    p.add_argument("--scenario", type=int, choices=(1, 2))
    p.add_argument("--n-m1", type=int, help="size of the single-cumulated index set")
    p.add_argument("--n-m2", type=int, help="size of the double-cumulated index set")
    p.add_argument("--M1", type=int, nargs="*", help="explicit 0-based M1 indices")
    p.add_argument("--M2", type=int, nargs="*", help="explicit 0-based M2 indices")
    p.add_argument("--df", type=float, help="Student-t degrees of freedom")
    p.add_argument("--replicates", type=int)

    p = sub.add_parser("preprocess", help="log / deseasonalize / detrend a panel")
    _common(p)
    p.add_argument("--input", help="panel CSV")
    p.add_argument("--period", type=int, help="seasonal period")
    p.add_argument("--no-detrend", action="store_true", default=None)
    p.add_argument("--log-columns", nargs="*")
    p.add_argument("--integration-report", action="store_true", default=None)
    p.add_argument("--kpss-lags", type=int)

    p = sub.add_parser("estimate", help="estimate a basis of the stability space")
    _common(p)
    _estimator_flags(p)
    p.add_argument("--input", help="panel CSV")

    p = sub.add_parser("project", help="project series onto the first k stable scores")
    _common(p)
    _estimator_flags(p)
    p.add_argument("--input", help="panel CSV")
    p.add_argument("--k", type=int, help="number of stable scores (default 2)")

    p = sub.add_parser("benchmark", help="Monte Carlo subspace-error table")
    _common(p)
    _estimator_flags(p)
    p.add_argument("--m", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--r-values", type=int, nargs="+")
    p.add_argument("--cases", type=int, nargs="+", help="case numbers to run")
    p.add_argument("--methods", nargs="+", choices=METHODS)
    p.add_argument("--replicates", type=int)

    p = sub.add_parser("consistency", help="medians of T |P_perp beta_hat| over T")
    _common(p)
    _estimator_flags(p)
    _design_flags(p)
    p.add_argument("--T-values", type=int, nargs="+")
    p.add_argument("--replicates", type=int)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the JSON config file and explicit flags."""
    opts = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(cfg) - set(DEFAULTS) - {"M1", "M2"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        opts.update(cfg)
    for key, value in vars(args).items():
        if key in ("command", "config", "verbose") or value is None:
            continue
        opts[key] = value
    if opts["replicates"] < 1:
        raise UsageError("--replicates must be >= 1")
    if opts["parallelism"] < 1:
        raise UsageError("--parallelism must be >= 1")
    return opts


def _estimator_config(opts: dict) -> EstimatorConfig:
    return EstimatorConfig(
        method=opts["method"],
        significance=opts["significance"],
        kpss_lags=opts["kpss_lags"],
        spca_penalty=opts["spca_penalty"],
        johansen_lags=opts["johansen_lags"],
        seed=opts["seed"],
    )


def _outdir(opts: dict) -> Path:
    out = Path(opts["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _input_panel(opts: dict) -> Panel:
    if not opts["input"]:
        raise UsageError("--input is required")
    path = Path(opts["input"])
    if opts["output_dir"] and path.resolve() == Path(opts["output_dir"]).resolve():
        raise UsageError("input and output paths must differ")
    return read_panel_csv(path)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    path.write_text(buf.getvalue())


def _matrix_rows(labels, M):
    return [[lab, *map(float, row)] for lab, row in zip(labels, M)]


def cmd_simulate(opts: dict) -> None:
    m, r, T = opts["m"], opts["r"], opts["T"]
    if "M1" in opts or "M2" in opts:
        M1, M2 = tuple(opts.get("M1") or ()), tuple(opts.get("M2") or ())
    else:
        n1 = m if opts["n_m1"] is None else opts["n_m1"]
        M1, M2 = case_index_sets(m, n1, opts["n_m2"])
    spec = SimulationSpec.draw(
        m, r, T, opts["scenario"], M1, M2, seed=opts["seed"], df=opts["df"]
    )
    out = _outdir(opts)
    for rep in range(opts["replicates"]):
        panel, truth = simulate(spec, rep)
        write_panel_csv(panel, out / f"panel_{rep:04d}.csv")
        _write_json(out / f"truth_{rep:04d}.json", {**truth.to_dict(), "replicate": rep})
    log.info("wrote %d replicates to %s", opts["replicates"], out)


def cmd_preprocess(opts: dict) -> None:
    panel = _input_panel(opts)
    result = preprocess(
        panel,
        period=opts["period"],
        detrend=not opts["no_detrend"],
        log_columns=tuple(opts["log_columns"] or ()),
    )
    out = _outdir(opts)
    write_panel_csv(result, out / "preprocessed.csv")
    if opts["integration_report"]:
        reports = integration_report(result, opts["significance"], opts["kpss_lags"])
        _write_csv(
            out / "integration_report.csv",
            ["series", "order", "kpss_pvalues"],
            [[rep.name, rep.label, ";".join(_fmt(p) for p in rep.pvalues)] for rep in reports],
        )


def _write_basis(out: Path, panel: Panel, basis) -> None:
    _write_json(out / "basis.json", basis.to_dict())
    labels = panel.dates if panel.dates is not None else range(1, panel.T + 1)
    k = basis.scores.shape[1]
    _write_csv(
        out / "scores.csv",
        ["n"] + [f"score_{i + 1}" for i in range(k)],
        _matrix_rows(labels, basis.scores),
    )
    # component x variable matrix for weight heatmaps
    _write_csv(
        out / "weights.csv",
        ["component", "stable"] + list(panel.names),
        [
            [i + 1, int(i in basis.selected), *map(float, basis.weights[:, i])]
            for i in range(basis.weights.shape[1])
        ],
    )


def cmd_estimate(opts: dict) -> None:
    panel = _input_panel(opts)
    basis = estimate(panel, _estimator_config(opts))
    _write_basis(_outdir(opts), panel, basis)
    print(f"{basis.method}: r_hat = {basis.r_hat}")


def cmd_project(opts: dict) -> None:
    panel = _input_panel(opts)
    k = opts["k"]
    if k < 1:
        raise UsageError("--k must be >= 1")
    basis = estimate(panel, _estimator_config(opts))
    if basis.r_hat < k:
        raise FewerThanKStableScores(k, basis.r_hat)
    idx = basis.selected[:k]
    report = project_onto_scores(panel, basis.scores[:, list(idx)], idx)
    out = _outdir(opts)
    labels = panel.dates if panel.dates is not None else range(1, panel.T + 1)
    _write_csv(out / "fitted.csv", ["n"] + list(panel.names), _matrix_rows(labels, report.fitted))
    _write_csv(
        out / "nmse.csv",
        ["series", "nmse"],
        [[name, float(v)] for name, v in zip(report.names, report.nmse)],
    )
    _write_json(
        out / "projection.json",
        {"method": basis.method, "score_indices": list(idx), "r_hat": basis.r_hat},
    )


def cmd_benchmark(opts: dict) -> None:
    from .benchmark import default_cases

    all_cases = default_cases(opts["m"])
    wanted = opts["cases"] or sorted(all_cases)
    missing = set(wanted) - set(all_cases)
    if missing:
        raise UsageError(f"unknown cases {sorted(missing)} for m={opts['m']}")
    config = BenchmarkConfig(
        m=opts["m"],
        T=opts["T"],
        r_values=tuple(opts["r_values"]),
        cases={c: all_cases[c] for c in wanted},
        methods=tuple(opts["methods"]),
        replicates=opts["replicates"],
        seed=opts["seed"],
        significance=opts["significance"],
        kpss_lags=opts["kpss_lags"],
        spca_penalty=opts["spca_penalty"],
        johansen_lags=opts["johansen_lags"],
        parallelism=opts["parallelism"],
    )
    result = run_benchmark(config)
    out = _outdir(opts)
    (out / "table.csv").write_text(result.table_csv())
    (out / "dimension_histogram.csv").write_text(result.dimension_histogram_csv())
    (out / "distances.csv").write_text(result.distance_csv())
    (out / "replicates.csv").write_text(result.long_csv())
    sys.stdout.write(result.table_csv())


def cmd_consistency(opts: dict) -> None:
    if opts["method"] not in ("pca", "pls"):
        raise UsageError("consistency needs --method pca or pls")
    spec = SimulationSpec.draw(opts["m"], opts["r"], opts["T"], seed=opts["seed"])
    Ts = [int(t) for t in opts["T_values"]]
    medians, values = consistency_curve(
        opts["method"], Ts, opts["replicates"], spec, opts["parallelism"]
    )
    out = _outdir(opts)
    _write_csv(
        out / "consistency_medians.csv",
        ["method", "T", "median"],
        [[opts["method"], T, float(v)] for T, v in zip(Ts, medians)],
    )
    _write_csv(
        out / "consistency_values.csv",
        ["method", "T", "replicate", "value"],
        [
            [opts["method"], T, i, float(v)]
            for T, vals in zip(Ts, values)
            for i, v in enumerate(vals)
        ],
    )


COMMANDS = {
    "simulate": cmd_simulate,
    "preprocess": cmd_preprocess,
    "estimate": cmd_estimate,
    "project": cmd_project,
    "benchmark": cmd_benchmark,
    "consistency": cmd_consistency,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](resolve(args))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        print(f"data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
