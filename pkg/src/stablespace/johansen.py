"""Johansen reduced-rank procedure (no deterministic terms)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import linalg

from .core import Panel, StableBasis, standardize
from .errors import (
    DataError,
    DimensionTooLarge,
    InsufficientSample,
    MissingCriticalValue,
    SingularMoments,
)

__all__ = [
    "JohansenResult",
    "VecmResiduals",
    "canonical_correlations",
    "johansen_estimate",
    "johansen_fit",
    "trace_critical_values",
    "trace_test",
    "vecm_residuals",
]

MAX_DIM = 11
EIG_CEILING = 1.0 - 1e-12
COND_LIMIT = 1e12


@lru_cache(maxsize=None)
def trace_critical_values() -> dict[tuple[int, float], float]:
    """Bundled trace critical values keyed by ``(n_minus_r0, level)``."""
    text = (
        resources.files("stablespace.data")
        .joinpath("johansen_trace_critical_values.csv")
        .read_text()
    )
    rows = csv.DictReader(l for l in text.splitlines() if not l.startswith("#"))
    return {(int(r["n_minus_r0"]), float(r["level"])): float(r["value"]) for r in rows}


@dataclass(frozen=True)
class VecmResiduals:
    R0: np.ndarray
    R1: np.ndarray
    lags: int

    @property
    def nobs(self) -> int:
        return self.R0.shape[0]


def vecm_residuals(panel, p: int = 2) -> VecmResiduals:
    """Residuals of dX_n and X_{n-1} after projecting out p-1 lagged differences."""
    x = panel.values if isinstance(panel, Panel) else np.asarray(panel, dtype=float)
    T, m = x.shape
    p = int(p)
    if p < 1:
        raise DataError("lag order p must be >= 1")
    if T <= m * (p - 1) + p + 1:
        raise InsufficientSample(
            f"T={T} too small for m={m}, p={p} (need T > {m * (p - 1) + p + 1})"
        )
    dx = np.diff(x, axis=0)  # dx[t-1] = x[t] - x[t-1]
    # Observations n = p .. T-1 (0-based), effective sample N = T - p.
    R0 = dx[p - 1 :]
    R1 = x[p - 1 : T - 1]
    if p > 1:
        Z = np.column_stack([dx[p - 1 - j : T - 1 - j] for j in range(1, p)])
        coef0, *_ = np.linalg.lstsq(Z, R0, rcond=None)
        coef1, *_ = np.linalg.lstsq(Z, R1, rcond=None)
        R0 = R0 - Z @ coef0
        R1 = R1 - Z @ coef1
    return VecmResiduals(R0=np.array(R0), R1=np.array(R1), lags=p)


def canonical_correlations(res: VecmResiduals):
    """Squared canonical correlations between R0 and R1.

    Solves ``det(lam S11 - S10 S00^-1 S01) = 0``. Returns
    ``(eigenvalues descending, beta, degenerate)`` with ``beta`` normalised to
    ``beta' S11 beta = I`` and eigenvalues clamped into ``[0, 1 - 1e-12]``.
    """
    N = res.nobs
    S00 = res.R0.T @ res.R0 / N
    S11 = res.R1.T @ res.R1 / N
    S01 = res.R0.T @ res.R1 / N
    for name, M in (("S00", S00), ("S11", S11)):
        c = np.linalg.cond(M)
        if not np.isfinite(c) or c >= COND_LIMIT:
            raise SingularMoments(f"{name} is singular (condition number {c:.3g})")
    lhs = S01.T @ linalg.solve(S00, S01, assume_a="pos")
    lhs = (lhs + lhs.T) / 2.0
    evals, evecs = linalg.eigh(lhs, S11)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    degenerate = bool(np.any(evals >= EIG_CEILING))
    evals = np.clip(evals, 0.0, EIG_CEILING)
    return evals, evecs, degenerate


def trace_test(eigenvalues, nobs: int, significance: float = 0.05, table=None):
    """Trace statistics for r0 = 0..m-1 and the first non-rejected r0.

    Returns ``(stats, r_hat)``; ``r_hat = m`` when every null is rejected.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(lam < 0) or np.any(lam >= 1):
        raise DataError("eigenvalues must lie in [0, 1)")
    table = trace_critical_values() if table is None else table
    m = lam.size
    terms = -nobs * np.log1p(-lam)
    stats = np.array([terms[r0:].sum() for r0 in range(m)])
    for r0 in range(m):
        key = (m - r0, float(significance))
        if key not in table:
            raise MissingCriticalValue(m - r0)
        if stats[r0] <= table[key]:
            return stats, r0
    return stats, m


@dataclass(frozen=True)
class JohansenResult:
    eigenvalues: np.ndarray
    beta: np.ndarray
    trace_stats: np.ndarray
    rank: int
    lags: int
    nobs: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "beta": self.beta.tolist(),
            "trace_stats": self.trace_stats.tolist(),
            "rank": self.rank,
            "lags": self.lags,
            "nobs": self.nobs,
            "degenerate": self.degenerate,
        }


def johansen_fit(panel, p: int = 2, significance: float = 0.05) -> JohansenResult:
    x = panel.values if isinstance(panel, Panel) else np.asarray(panel, dtype=float)
    if x.shape[1] > MAX_DIM:
        raise DimensionTooLarge(
            f"Johansen critical values only cover m <= {MAX_DIM}, got m={x.shape[1]}"
        )
    res = vecm_residuals(x, p)
    evals, beta, degenerate = canonical_correlations(res)
    stats, rank = trace_test(evals, res.nobs, significance)
    return JohansenResult(evals, beta, stats, rank, p, res.nobs, degenerate)


def johansen_estimate(panel: Panel, p: int = 2, significance: float = 0.05) -> StableBasis:
    """Johansen basis of the cointegration space, rank chosen by the trace test."""
    if panel.m > MAX_DIM:
        raise DimensionTooLarge(
            f"Johansen critical values only cover m <= {MAX_DIM}, got m={panel.m}"
        )
    # The VECM has no deterministic terms, so centring would change the
    # statistics: the procedure runs on the panel as given.
    fit = johansen_fit(panel, p, significance)
    sel = tuple(range(fit.rank))
    B = fit.beta[:, : fit.rank]
    return StableBasis(
        method="johansen",
        names=panel.names,
        basis=B,
        basis_standardized=standardize(panel)[1].to_standardized_directions(B),
        selected=sel,
        weights=fit.beta,
        scores=(panel.values - panel.values.mean(axis=0)) @ fit.beta,
        kpss=(),
        info={
            "eigenvalues": fit.eigenvalues,
            "trace_stats": fit.trace_stats,
            "lags": fit.lags,
            "nobs": fit.nobs,
            "degenerate": fit.degenerate,
        },
    )
