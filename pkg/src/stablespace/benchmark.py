"""Monte Carlo harness for subspace-recovery benchmarks.

Work is split into independent replicate tasks. Each task derives its random
stream from ``(seed, replicate)`` and runs with BLAS pinned to one thread, so
results do not depend on how many worker processes execute them or in which
order.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .core import EstimatorConfig
from .errors import DataError, StableSpaceError
from .metrics import grassmann_distance, orthogonal_complement_norm
from .pipeline import estimate, estimate_known_rank
from .simulation import SimulationSpec, case_index_sets, simulate

log = logging.getLogger(__name__)

__all__ = [
    "BenchmarkConfig",
    "BenchmarkResult",
    "ReplicateOutcome",
    "default_cases",
    "run_benchmark",
    "run_replicates",
]


def default_cases(m: int) -> dict[int, tuple[int, int]]:
    """Case number -> (|M1|, |M2|).

    m = 11 and m = 300 follow the published grids; other m reuse the
    low-dimensional pattern (all I(1); one I(0); one I(2); two I(2)).
    """
    if m == 300:
        return {1: (300, 0), 2: (250, 10), 3: (200, 20), 4: (150, 30)}
    if m < 4:
        return {1: (m, 0)}
    return {1: (m, 0), 2: (m - 1, 0), 3: (m - 2, 1), 4: (m - 3, 2)}


@dataclass(frozen=True)
class ReplicateOutcome:
    method: str
    delta: float | None
    r_hat: int | None
    error: str | None = None
    seconds: float = 0.0


def _estimate_task(methods, spec: SimulationSpec, rep: int, est: dict):
    panel, truth = simulate(spec, rep)
    out = []
    for method in methods:
        t0 = time.perf_counter()
        try:
            basis = estimate(panel, EstimatorConfig(method=method, **est))
            d = grassmann_distance(basis.basis, truth.beta).value
            out.append(ReplicateOutcome(method, d, basis.r_hat, None, time.perf_counter() - t0))
        except StableSpaceError as exc:
            out.append(
                ReplicateOutcome(method, None, None, type(exc).__name__, time.perf_counter() - t0)
            )
    return out


def _consistency_task(method, spec: SimulationSpec, rep: int):
    panel, truth = simulate(spec, rep)
    bh = estimate_known_rank(panel, method, spec.r)
    return spec.T * orthogonal_complement_norm(bh, truth.beta)


def _run_task(task):
    with threadpool_limits(limits=1):
        kind, *args = task
        if kind == "estimate":
            return _estimate_task(*args)
        if kind == "consistency":
            return _consistency_task(*args)
        raise ValueError(f"unknown task kind {kind!r}")


def run_replicates(tasks, parallelism: int = 1) -> list:
    """Run tasks, returning results in task order."""
    if parallelism < 1:
        raise DataError("parallelism must be >= 1")
    if parallelism == 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * parallelism))
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_task, tasks, chunksize=chunk))


@dataclass(frozen=True)
class BenchmarkConfig:
    m: int = 11
    T: int = 100
    r_values: tuple[int, ...] = (10, 9, 8)
    cases: dict = field(default_factory=dict)
    methods: tuple[str, ...] = ("johansen", "pca", "pls", "spca")
    replicates: int = 50
    seed: int = 0
    significance: float = 0.05
    kpss_lags: int | None = None
    spca_penalty: float = 0.25
    johansen_lags: int = 2
    parallelism: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise DataError("replicates must be >= 1")
        if self.parallelism < 1:
            raise DataError("parallelism must be >= 1")
        if not self.cases:
            object.__setattr__(self, "cases", default_cases(self.m))

    def estimator_kwargs(self) -> dict:
        return {
            "significance": self.significance,
            "kpss_lags": self.kpss_lags,
            "spca_penalty": self.spca_penalty,
            "johansen_lags": self.johansen_lags,
        }

    def cell_spec(self, r: int, case: int) -> SimulationSpec:
        n1, n2 = self.cases[case]
        M1, M2 = case_index_sets(self.m, n1, n2)
        scenario = 1 if (n1 == self.m and n2 == 0) else 2
        # Design parameters depend on (seed, r) only: cases sharing r share beta.
        cell_seed = int(np.random.SeedSequence([self.seed, 2, r]).generate_state(1)[0])
        return SimulationSpec.draw(self.m, r, self.T, scenario, M1, M2, seed=cell_seed)


@dataclass
class BenchmarkResult:
    config: BenchmarkConfig
    outcomes: dict  # (r, case) -> list over replicates of list[ReplicateOutcome]

    def _values(self, r, case, method, attr):
        vals = []
        for rep in self.outcomes[(r, case)]:
            for o in rep:
                if o.method == method and o.error is None:
                    vals.append(getattr(o, attr))
        return vals

    def _errors(self, r, case, method):
        return Counter(
            o.error for rep in self.outcomes[(r, case)] for o in rep
            if o.method == method and o.error is not None
        )

    def summary(self, r, case, method):
        """(mean, sd, n_ok, n_failed) of the subspace error for one cell."""
        vals = np.array(self._values(r, case, method, "delta"), dtype=float)
        nfail = sum(self._errors(r, case, method).values())
        if vals.size == 0:
            return float("nan"), float("nan"), 0, nfail
        sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        return float(vals.mean()), sd, int(vals.size), nfail

    def dimension_errors(self, r, case, method) -> list[int]:
        return [k - r for k in self._values(r, case, method, "r_hat")]

    def max_seconds(self, method) -> float:
        return max(
            (o.seconds for reps in self.outcomes.values() for rep in reps for o in rep
             if o.method == method),
            default=0.0,
        )

    def table_csv(self) -> str:
        cfg = self.config
        cases = sorted(cfg.cases)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "r"] + [f"Case {c}" for c in cases])
        for r in cfg.r_values:
            for method in cfg.methods:
                row = [method, r]
                for c in cases:
                    mean, sd, n_ok, _ = self.summary(r, c, method)
                    if n_ok == 0:
                        errs = self._errors(r, c, method)
                        row.append("failed: " + ";".join(sorted(errs)) if errs else "failed")
                    else:
                        row.append(f"{mean:.3f} ({sd:.3f})")
                w.writerow(row)
        return buf.getvalue()

    def long_csv(self) -> str:
        """Per-replicate rows: subspace error, estimated rank and failures."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "r", "case", "replicate", "delta", "r_hat", "dim_error", "error"])
        for (r, case), reps in sorted(self.outcomes.items()):
            for i, rep in enumerate(reps):
                for o in rep:
                    w.writerow([
                        o.method, r, case, i,
                        "" if o.delta is None else repr(o.delta),
                        "" if o.r_hat is None else o.r_hat,
                        "" if o.r_hat is None else o.r_hat - r,
                        o.error or "",
                    ])
        return buf.getvalue()

    def dimension_histogram_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "r", "case", "dim_error", "count"])
        for (r, case) in sorted(self.outcomes):
            for method in self.config.methods:
                counts = Counter(self.dimension_errors(r, case, method))
                for k in sorted(counts):
                    w.writerow([method, r, case, k, counts[k]])
        return buf.getvalue()

    def distance_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "r", "case", "replicate", "delta"])
        for (r, case), reps in sorted(self.outcomes.items()):
            for i, rep in enumerate(reps):
                for o in rep:
                    if o.delta is not None:
                        w.writerow([o.method, r, case, i, repr(o.delta)])
        return buf.getvalue()


def run_benchmark(config: BenchmarkConfig) -> BenchmarkResult:
    est = config.estimator_kwargs()
    keys, tasks = [], []
    for r in config.r_values:
        for case in sorted(config.cases):
            spec = config.cell_spec(r, case)
            for rep in range(config.replicates):
                keys.append((r, case))
                tasks.append(("estimate", tuple(config.methods), spec, rep, est))
    results = run_replicates(tasks, config.parallelism)
    outcomes: dict = {}
    for key, res in zip(keys, results):
        outcomes.setdefault(key, []).append(res)
    return BenchmarkResult(config, outcomes)
