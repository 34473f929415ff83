"""Panel representation, preprocessing and integration-order identification."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ConstantSeries,
    DataError,
    DegenerateVariance,
    DuplicateNames,
    NonFiniteValues,
    PeriodTooLarge,
    TooShort,
    ZeroVarianceColumn,
)
from .stationarity import KpssResult, kpss_level

log = logging.getLogger(__name__)

__all__ = [
    "EstimatorConfig",
    "IntegrationReport",
    "Panel",
    "StableBasis",
    "StandardizationParams",
    "deseasonalize",
    "detrend_linear",
    "difference",
    "integration_order",
    "integration_report",
    "preprocess",
    "read_panel_csv",
    "standardize",
    "write_panel_csv",
]

METHODS = ("johansen", "pca", "spca", "pls")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Panel:
    """A T x m observation matrix with variable names.

    ``dates`` is an optional row label column; it is carried through I/O but
    never used in computations.
    """

    values: np.ndarray
    names: tuple[str, ...]
    dates: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DataError("panel values must be a 2-D array")
        T, m = values.shape
        if T < 2 or m < 1:
            raise TooShort(f"panel needs T >= 2 and m >= 1, got {T}x{m}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValues("panel contains NaN or infinite values")
        names = tuple(str(n) for n in self.names)
        if len(names) != m:
            raise DataError(f"{len(names)} names for {m} columns")
        if len(set(names)) != m:
            raise DuplicateNames("variable names must be unique")
        dates = None if self.dates is None else tuple(str(d) for d in self.dates)
        if dates is not None and len(dates) != T:
            raise DataError(f"{len(dates)} dates for {T} rows")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "dates", dates)

    @classmethod
    def from_array(cls, values, names=None, dates=None) -> "Panel":
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if names is None:
            names = [f"x{i + 1}" for i in range(values.shape[1])]
        return cls(values, tuple(names), dates)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def replace_values(self, values) -> "Panel":
        return Panel(values, self.names, self.dates)


@dataclass(frozen=True)
class StandardizationParams:
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(self.means))
        object.__setattr__(self, "scales", _frozen(self.scales))
        if np.any(self.scales <= 0):
            raise DataError("scales must be strictly positive")

    def apply(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.means) / self.scales

    def invert(self, values) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.scales + self.means

    def to_original_directions(self, directions) -> np.ndarray:
        """Map weight vectors on standardized variables to raw-variable weights.

        A score ``v' z_n`` on standardized data equals ``(D^-1 v)' (x_n - mu)``
        with ``D = diag(scales)``, so the raw-scale direction is ``D^-1 v``.
        """
        d = np.asarray(directions, dtype=float)
        return d / self.scales.reshape((-1,) + (1,) * (d.ndim - 1))

    def to_standardized_directions(self, directions) -> np.ndarray:
        """Inverse of :meth:`to_original_directions`."""
        d = np.asarray(directions, dtype=float)
        return d * self.scales.reshape((-1,) + (1,) * (d.ndim - 1))


def standardize(panel: Panel) -> tuple[Panel, StandardizationParams]:
    """Centre each column and scale it to unit sample (n-1) standard deviation."""
    x = panel.values
    means = x.mean(axis=0)
    scales = x.std(axis=0, ddof=1)
    for name, s in zip(panel.names, scales):
        if not s > 0:
            raise ZeroVarianceColumn(name)
    params = StandardizationParams(means, scales)
    return panel.replace_values(params.apply(x)), params


def detrend_linear(series) -> np.ndarray:
    """Residuals of an OLS regression of ``series`` on an intercept and time."""
    y = np.asarray(series, dtype=float)
    T = y.shape[0]
    if T < 3:
        raise TooShort(f"detrending needs T >= 3, got {T}")
    n = np.arange(T, dtype=float)
    n -= n.mean()
    design = np.column_stack([np.ones(T), n])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return y - design @ coef


def deseasonalize(series, period: int) -> np.ndarray:
    """Subtract per-phase means, phase = index mod ``period``."""
    y = np.asarray(series, dtype=float)
    period = int(period)
    if period < 2:
        raise DataError(f"period must be >= 2, got {period}")
    if y.shape[0] < 2 * period:
        raise PeriodTooLarge(
            f"need at least two full cycles: T={y.shape[0]}, period={period}"
        )
    out = y.copy()
    for phase in range(period):
        out[phase::period] -= y[phase::period].mean(axis=0)
    return out


def difference(series, d: int = 1) -> np.ndarray:
    """``d``-fold first difference along the time axis."""
    y = np.asarray(series, dtype=float)
    d = int(d)
    if d < 0:
        raise DataError("difference order must be >= 0")
    if y.shape[0] <= d:
        raise TooShort(f"cannot difference {y.shape[0]} observations {d} times")
    if d == 0:
        return y.copy()
    return np.diff(y, n=d, axis=0)


@dataclass(frozen=True)
class EstimatorConfig:
    method: str = "pls"
    significance: float = 0.05
    kpss_lags: int | None = None
    spca_penalty: float | tuple[float, ...] = 0.25
    johansen_lags: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0.0 < self.significance < 1.0:
            raise DataError("significance must lie in (0, 1)")
        if self.kpss_lags is not None and self.kpss_lags < 0:
            raise DataError("kpss_lags must be >= 0")
        pen = np.atleast_1d(np.asarray(self.spca_penalty, dtype=float))
        if np.any(pen < 0) or not np.all(np.isfinite(pen)):
            raise DataError("SPCA penalties must be finite and >= 0")
        if self.johansen_lags < 1:
            raise DataError("Johansen lag order must be >= 1")

    def spca_penalties(self, m: int) -> np.ndarray:
        pen = np.atleast_1d(np.asarray(self.spca_penalty, dtype=float))
        if pen.size == 1:
            return np.full(m, float(pen[0]))
        if pen.size != m:
            raise DataError(f"{pen.size} SPCA penalties for {m} components")
        return pen


@dataclass(frozen=True)
class IntegrationReport:
    """Empirical integration order of one series.

    ``order`` is 0, 1 or 2, or ``None`` when the series still looks
    non-stationary after two differences.
    """

    name: str
    order: int | None
    pvalues: tuple[float, ...]

    @property
    def label(self) -> str:
        return ">2" if self.order is None else str(self.order)


def integration_order(
    series, significance: float = 0.05, lags: int | None = None
) -> tuple[int | None, list[float]]:
    """First difference level (0, 1, 2) at which KPSS does not reject.

    Returns ``(order, pvalue_trail)``; ``order`` is ``None`` for ">2".
    """
    y = np.asarray(series, dtype=float)
    trail = []
    for d in range(3):
        z = difference(y, d)
        if z.shape[0] < 20:
            raise TooShort(f"need >= 20 observations after {d} differences")
        res = kpss_level(z, lags)
        trail.append(res.pvalue)
        if not res.reject(significance):
            return d, trail
    return None, trail


def integration_report(panel: Panel, significance=0.05, lags=None):
    out = []
    for j, name in enumerate(panel.names):
        order, trail = integration_order(panel.values[:, j], significance, lags)
        out.append(IntegrationReport(name, order, tuple(trail)))
    return out


def preprocess(
    panel: Panel,
    period: int | None = None,
    detrend: bool = True,
    log_columns: Sequence[str] = (),
) -> Panel:
    """Optional log transform, then deseasonalize, then linear detrend."""
    x = np.array(panel.values)
    for name in log_columns:
        j = panel.names.index(name)
        if np.any(x[:, j] <= 0):
            raise DataError(f"cannot log non-positive values in {name!r}")
        x[:, j] = np.log(x[:, j])
    if period:
        x = deseasonalize(x, period)
    if detrend:
        x = np.column_stack([detrend_linear(x[:, j]) for j in range(x.shape[1])])
    return panel.replace_values(x)


@dataclass(frozen=True)
class StableBasis:
    """Estimated basis of the stability space plus selection metadata.

    ``basis`` holds directions for the raw (input) variables and is the one
    to compare against a ground-truth subspace; ``basis_standardized`` holds
    the same directions for the standardized variables. ``weights`` are the
    per-component weights for every component tested (loadings for
    PCA/SPCA and the psi weights for PLS, both on standardized variables;
    eigenvectors on raw variables for Johansen), and ``scores`` the matching
    T x k score series, centred.
    """

    method: str
    names: tuple[str, ...]
    basis: np.ndarray
    basis_standardized: np.ndarray
    selected: tuple[int, ...]
    weights: np.ndarray
    scores: np.ndarray
    kpss: tuple[KpssResult | None, ...] = ()
    info: dict = field(default_factory=dict)

    @property
    def r_hat(self) -> int:
        return len(self.selected)

    @property
    def empty(self) -> bool:
        return self.r_hat == 0

    def stable_scores(self) -> np.ndarray:
        return self.scores[:, list(self.selected)]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "names": list(self.names),
            "r_hat": self.r_hat,
            "selected": list(self.selected),
            "basis": self.basis.tolist(),
            "basis_standardized": self.basis_standardized.tolist(),
            "weights": self.weights.tolist(),
            "kpss": [None if k is None else k.to_dict() for k in self.kpss],
            "info": _jsonable(self.info),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def select_by_kpss(scores, significance=0.05, lags=None):
    """KPSS on each score column; returns (selected indices, results).

    A score that is exactly constant (or numerically degenerate) is a
    trivially stable combination and is kept, with a ``None`` result.
    """
    selected, results = [], []
    for i in range(scores.shape[1]):
        try:
            res = kpss_level(scores[:, i], lags)
        except (ConstantSeries, DegenerateVariance):
            results.append(None)
            selected.append(i)
            continue
        results.append(res)
        if not res.reject(significance):
            selected.append(i)
    if not selected:
        log.warning("no stationary score found; stable basis is empty")
    return tuple(selected), tuple(results)


# ---------------------------------------------------------------- CSV I/O


def _fmt(v: float) -> str:
    return repr(float(v))


def read_panel_csv(source) -> Panel:
    """Read a panel from a path or text stream.

    First row is a header; a first column named ``date`` is kept as row labels.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, newline="") as fh:
            text = fh.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) < 2:
        raise DataError("CSV needs a header and at least one data row")
    header = [h.strip() for h in rows[0]]
    has_date = header[0].lower() == "date"
    names = header[1:] if has_date else header
    dates = [] if has_date else None
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        if has_date:
            dates.append(row[0])
            row = row[1:]
        try:
            values.append([float(c) for c in row])
        except ValueError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    return Panel(np.array(values, dtype=float), tuple(names), dates)


def write_panel_csv(panel: Panel, dest) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(panel.names)
    if panel.dates is not None:
        header = ["date"] + header
    w.writerow(header)
    for i, row in enumerate(panel.values):
        cells = [_fmt(v) for v in row]
        if panel.dates is not None:
            cells = [panel.dates[i]] + cells
        w.writerow(cells)
    if hasattr(dest, "write"):
        dest.write(buf.getvalue())
    else:
        with open(dest, "w", newline="") as fh:
            fh.write(buf.getvalue())
