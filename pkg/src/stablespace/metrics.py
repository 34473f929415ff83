"""Subspace distances, projection onto stable scores and consistency curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import Panel, standardize
from .errors import DataError, RankDeficient, RankDeficientScores, ZeroVariance

__all__ = [
    "ProjectionReport",
    "SubspaceDistance",
    "consistency_curve",
    "grassmann_distance",
    "normalized_mse",
    "orthogonal_complement_norm",
    "principal_angles",
    "project_onto_scores",
]

HALF_PI = math.pi / 2.0
_RANK_RTOL = 1e-10


def _orthonormal(A, exc=RankDeficient) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.shape[1] == 0:
        return A
    Q, R = np.linalg.qr(A)
    d = np.abs(np.diag(R))
    if d.min() <= _RANK_RTOL * max(d.max(), np.finfo(float).tiny):
        raise exc(f"matrix with {A.shape[1]} columns is not of full column rank")
    return Q


def principal_angles(A, B) -> np.ndarray:
    """Principal angles between Col(A) and Col(B), ascending, in radians.

    Both arguments are orthonormalized by QR first; a column set that is not
    of full rank raises :class:`RankDeficient`.
    """
    Qa, Qb = _orthonormal(A), _orthonormal(B)
    if Qa.shape[0] != Qb.shape[0]:
        raise DataError("subspaces live in different ambient dimensions")
    if min(Qa.shape[1], Qb.shape[1]) == 0:
        return np.zeros(0)
    # Small angles come from sines, large ones from cosines, so both ends
    # keep full precision (a plain arccos loses half the digits near 0).
    return np.clip(np.sort(linalg.subspace_angles(Qa, Qb)), 0.0, HALF_PI)


@dataclass(frozen=True)
class SubspaceDistance:
    angles: np.ndarray
    dim_estimated: int
    dim_true: int

    @property
    def dimension_penalty(self) -> float:
        return abs(self.dim_estimated - self.dim_true) * HALF_PI**2

    @property
    def value(self) -> float:
        return math.sqrt(float(np.sum(self.angles**2)) + self.dimension_penalty)

    def __float__(self) -> float:
        return self.value


def grassmann_distance(A, B) -> SubspaceDistance:
    """Generalized Grassmann distance between Col(A) (estimate) and Col(B).

    ``sqrt(sum theta_i^2 + |dim A - dim B| (pi/2)^2)``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    A = A[:, None] if A.ndim == 1 else A
    B = B[:, None] if B.ndim == 1 else B
    return SubspaceDistance(principal_angles(A, B), A.shape[1], B.shape[1])


def orthogonal_complement_norm(beta_hat, beta) -> float:
    """Frobenius norm of ``(I - beta (beta'beta)^-1 beta') beta_hat``."""
    beta = np.asarray(beta, dtype=float)
    bh = np.asarray(beta_hat, dtype=float)
    proj = beta @ np.linalg.solve(beta.T @ beta, beta.T @ bh)
    return float(np.linalg.norm(bh - proj))


def normalized_mse(observed, fitted) -> float:
    """Mean squared residual over the (n-1) sample variance of ``observed``."""
    y = np.asarray(observed, dtype=float)
    f = np.asarray(fitted, dtype=float)
    var = y.var(ddof=1)
    if not var > 0:
        raise ZeroVariance("observed series has zero sample variance")
    return float(np.mean((y - f) ** 2) / var)


@dataclass(frozen=True)
class ProjectionReport:
    names: tuple[str, ...]
    nmse: np.ndarray
    observed: np.ndarray
    fitted: np.ndarray
    score_indices: tuple[int, ...] = ()

    @property
    def residual(self) -> np.ndarray:
        return self.observed - self.fitted


def project_onto_scores(panel: Panel, scores, score_indices=()) -> ProjectionReport:
    """Least-squares fit of each standardized series on the score columns."""
    S = np.asarray(scores, dtype=float)
    S = S[:, None] if S.ndim == 1 else S
    if S.shape[1] < 1:
        raise DataError("need at least one score")
    if S.shape[0] != panel.T:
        raise DataError(f"scores have {S.shape[0]} rows, panel has {panel.T}")
    _orthonormal(S, RankDeficientScores)
    y = standardize(panel)[0].values
    coef, *_ = np.linalg.lstsq(S, y, rcond=None)
    fitted = S @ coef
    nmse = np.array([normalized_mse(y[:, j], fitted[:, j]) for j in range(panel.m)])
    return ProjectionReport(panel.names, nmse, y, fitted, tuple(score_indices))


def consistency_curve(
    method: str,
    T_values,
    replicates: int,
    spec,
    parallelism: int = 1,
):
    """Medians over replicates of ``T * |P_{beta_perp} beta_hat|`` per sample size.

    ``spec`` is a scenario-1 :class:`SimulationSpec`; its design parameters
    are kept and only ``T`` varies. The stable rank is taken as known.
    Returns ``(medians, values)`` with ``values[i]`` the per-replicate
    statistics for ``T_values[i]``.
    """
    from .benchmark import run_replicates

    if method not in ("pca", "pls"):
        raise DataError("consistency curves are defined for pca and pls")
    if spec.scenario != 1:
        raise DataError("consistency curves need a scenario-1 specification")
    medians, values = [], []
    for T in T_values:
        tasks = [("consistency", method, spec.with_T(int(T)), rep) for rep in range(replicates)]
        vals = np.array(run_replicates(tasks, parallelism))
        values.append(vals)
        medians.append(float(np.median(vals)))
    return np.array(medians), values
