"""KPSS level-stationarity test."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import ConstantSeries, DataError, DegenerateVariance, TooShort

__all__ = [
    "KpssResult",
    "bartlett_long_run_variance",
    "default_kpss_lags",
    "kpss_critical_values",
    "kpss_level",
    "kpss_pvalue",
]


@lru_cache(maxsize=None)
def kpss_critical_values() -> dict[float, float]:
    """Upper-tail critical values of the level-stationarity statistic.

    Returns a mapping ``{significance level: critical value}`` read from the
    bundled ``kpss_level_critical_values.csv``.
    """
    text = (
        resources.files("stablespace.data")
        .joinpath("kpss_level_critical_values.csv")
        .read_text()
    )
    rows = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
    return {float(r["level"]): float(r["critical_value"]) for r in rows}


def default_kpss_lags(nobs: int) -> int:
    return int(math.floor(4.0 * (nobs / 100.0) ** 0.25))


def bartlett_long_run_variance(resid, lags: int) -> float:
    """Bartlett-kernel (Newey-West) long-run variance of ``resid``.

    ``s2 = T^-1 sum e_t^2 + 2 T^-1 sum_{s=1}^{l} (1 - s/(l+1)) sum_t e_t e_{t-s}``
    """
    e = np.asarray(resid, dtype=float)
    nobs = e.shape[0]
    lags = int(lags)
    if lags < 0 or lags >= nobs:
        raise DataError(f"need 0 <= lags < T, got lags={lags}, T={nobs}")
    if not np.any(e):
        raise DegenerateVariance("residuals are identically zero")
    s2 = float(e @ e)
    for s in range(1, lags + 1):
        s2 += 2.0 * (1.0 - s / (lags + 1.0)) * float(e[s:] @ e[:-s])
    s2 /= nobs
    if not s2 > 0.0:
        raise DegenerateVariance(f"long-run variance estimate {s2!r} is not positive")
    return s2


def kpss_pvalue(stat: float) -> float:
    """Log-linear interpolation in the critical-value table, clamped to [0.01, 0.10]."""
    table = sorted(kpss_critical_values().items(), key=lambda kv: kv[1])
    crit = np.array([c for _, c in table])
    logp = np.log([lvl for lvl, _ in table])
    return float(np.exp(np.interp(stat, crit, logp)))


@dataclass(frozen=True)
class KpssResult:
    statistic: float
    lags: int
    pvalue: float
    nobs: int
    critical_values: dict = field(default_factory=dict, repr=False)

    @property
    def rejects(self) -> dict[float, bool]:
        """Rejection flags at each tabulated level."""
        return {lvl: self.statistic > cv for lvl, cv in self.critical_values.items()}

    def reject(self, significance: float) -> bool:
        """Reject level-stationarity at ``significance``.

        Tabulated levels compare against the critical value directly; other
        levels use the interpolated (clamped) p-value.
        """
        cv = self.critical_values.get(significance)
        if cv is not None:
            return self.statistic > cv
        return self.pvalue < significance

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "lags": self.lags,
            "pvalue": self.pvalue,
            "nobs": self.nobs,
            "rejects": {str(k): v for k, v in sorted(self.rejects.items())},
        }


def kpss_level(series, lags: int | None = None) -> KpssResult:
    """KPSS test of the null that ``series`` is level-stationary.

    Parameters
    ----------
    series : array_like, shape (T,)
    lags : int, optional
        Bartlett bandwidth. Defaults to ``floor(4 (T/100)^(1/4))``.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise DataError("KPSS expects a one-dimensional series")
    nobs = x.shape[0]
    if nobs < 10:
        raise TooShort(f"KPSS needs T >= 10, got {nobs}")
    if np.all(x == x[0]):
        raise ConstantSeries("series is constant")
    if lags is None:
        lags = default_kpss_lags(nobs)
    lags = min(int(lags), nobs - 1)

    resid = x - x.mean()
    partial = np.cumsum(resid)
    s2 = bartlett_long_run_variance(resid, lags)
    stat = float(partial @ partial) / (nobs * nobs * s2)
    return KpssResult(
        statistic=stat,
        lags=lags,
        pvalue=kpss_pvalue(stat),
        nobs=nobs,
        critical_values=dict(kpss_critical_values()),
    )
