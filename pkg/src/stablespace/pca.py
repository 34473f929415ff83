"""PCA and sparse-PCA estimators of the stability space.

Stable directions are the principal loadings whose scores pass the KPSS
test. Every component is tested, not just the trailing ones: outside a
cointegrated system the stationary components need not have the smallest
eigenvalues.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import Panel, StableBasis, select_by_kpss, standardize
from .errors import AllZeroComponent, DataError, EigenFailure, NoConvergence

log = logging.getLogger(__name__)

__all__ = [
    "PcaModel",
    "pca_fit",
    "sample_second_moment",
    "select_stationary_components",
    "spca_fit",
]

SPCA_RIDGE = 1e-6
SPCA_TOL = 1e-6
SPCA_MAX_ITER = 200


def _values(panel) -> np.ndarray:
    x = panel.values if isinstance(panel, Panel) else np.asarray(panel, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def sample_second_moment(panel) -> np.ndarray:
    """``T^-1 sum_n x_n x_n'`` (uncentred; the panel is assumed standardized)."""
    x = _values(panel)
    S = x.T @ x / x.shape[0]
    return (S + S.T) / 2.0


def _fix_signs(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[idx, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return V * signs


@dataclass(frozen=True)
class PcaModel:
    """Eigenvalues (descending), loadings (columns) and scores (T x m)."""

    eigenvalues: np.ndarray
    loadings: np.ndarray
    scores: np.ndarray
    sparse: bool = False
    nonzero: tuple[int, ...] | None = None
    converged: bool = True
    n_iter: int = 0

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "loadings": self.loadings.tolist(),
            "sparse": self.sparse,
            "nonzero": None if self.nonzero is None else list(self.nonzero),
            "converged": self.converged,
            "n_iter": self.n_iter,
        }


def pca_fit(panel) -> PcaModel:
    """Full eigendecomposition of the second-moment matrix of ``panel``."""
    x = _values(panel)
    if x.shape[0] < 2:
        raise DataError("PCA needs T >= 2")
    S = sample_second_moment(x)
    try:
        evals, evecs = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    V = _fix_signs(evecs[:, order])
    return PcaModel(eigenvalues=evals, loadings=V, scores=x @ V)


def _lasso_objective(H, c, h, b):
    return 0.5 * b @ H @ b - c @ b + h * np.sum(np.abs(b))


def _feature_sign(H, c, h, b, max_steps):
    """Minimise ``b'Hb/2 - c'b + h|b|_1`` by feature-sign search from ``b``.

    Each step solves the problem restricted to the current support and sign
    pattern exactly, then line-searches back to the first improvement along
    the segment, dropping coordinates that cross zero. A zero coordinate
    whose gradient violates optimality joins the support. With a warm start
    the support barely changes, so a handful of steps usually suffice.
    """
    b = b.copy()
    scale = h + float(np.max(np.abs(c))) + 1e-300
    for _ in range(max_steps):
        grad = c - H @ b
        active = b != 0.0
        theta = np.sign(b)
        if active.any():
            viol_active = np.max(np.abs(grad[active] - h * theta[active]))
        else:
            viol_active = 0.0
        if viol_active <= 1e-10 * scale:
            free = np.where(active, 0.0, np.abs(grad))
            i = int(np.argmax(free))
            if free[i] <= h * (1.0 + 1e-10):
                return b
            active[i] = True
            theta[i] = np.sign(grad[i])
        idx = np.flatnonzero(active)
        sol = np.linalg.solve(H[np.ix_(idx, idx)], c[idx] - h * theta[idx])
        old = b[idx]
        cand = [sol]
        cross = (np.sign(sol) != theta[idx]) & (old != 0.0)
        for j in np.flatnonzero(cross):
            t = old[j] / (old[j] - sol[j])
            point = old + t * (sol - old)
            point[j] = 0.0
            cand.append(point)
        best, best_val = None, np.inf
        for point in cand:
            trial = b.copy()
            trial[idx] = point
            val = _lasso_objective(H, c, h, trial)
            if val < best_val:
                best, best_val = trial, val
        best[np.abs(best) <= 1e-15 * scale] = 0.0
        b = best
    raise NoConvergence("feature-sign search did not terminate")


def elastic_net_gram(gram, xty, l1, init=None, max_steps=None):
    """Column-wise minimiser of ``b'(G + ridge I)b - 2 xty'b + l1 |b|_1``.

    ``xty`` and the result are m x k; ``l1`` holds one weight per column.
    Solved exactly, column by column, with a feature-sign active-set search
    warm-started from ``init``.
    """
    G = np.asarray(gram, dtype=float)
    C = np.asarray(xty, dtype=float)
    squeeze = C.ndim == 1
    C = C[:, None] if squeeze else C
    m, k = C.shape
    H = G + SPCA_RIDGE * np.eye(m)
    half = np.broadcast_to(np.asarray(l1, dtype=float) / 2.0, (k,))
    B = np.zeros((m, k)) if init is None else np.array(init, dtype=float).reshape(m, k)
    steps = 20 * m + 100 if max_steps is None else max_steps
    for j in range(k):
        B[:, j] = _feature_sign(H, C[:, j], half[j], B[:, j], steps)
    return B[:, 0] if squeeze else B


def spca_fit(panel, penalties, k: int | None = None, strict: bool = True) -> PcaModel:
    """Sparse PCA by alternating elastic-net / Procrustes updates.

    Parameters
    ----------
    panel : Panel or ndarray
        Standardized data.
    penalties : float or array of k floats
        L1 weight per component, on the scale of the unnormalised Gram
        matrix ``X'X``.
    k : int, optional
        Number of components (default ``m``).
    strict : bool
        If True, a component whose loading the penalty sets entirely to zero
        raises :class:`AllZeroComponent`. Otherwise zero loadings are carried
        through the iteration unchanged and dropped from the returned model.

    The iteration starts from the ordinary PCA loadings, so at zero penalty
    it returns them unchanged. Loadings are renormalised to unit length;
    the reported "eigenvalues" are the variances of the resulting scores,
    and components are reordered by them.
    """
    x = _values(panel)
    T, m = x.shape
    k = m if k is None else int(k)
    pen = np.broadcast_to(np.asarray(penalties, dtype=float), (k,)).copy()
    if np.any(pen < 0):
        raise DataError("penalties must be >= 0")

    gram = x.T @ x
    gram = (gram + gram.T) / 2.0
    A = pca_fit(x).loadings[:, :k]
    B = None

    def solve_b(A):
        nonlocal B
        B = elastic_net_gram(gram, gram @ A, pen, init=A if B is None else B)
        return B

    def normalised(B):
        norms = np.linalg.norm(B, axis=0)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size and strict:
            raise AllZeroComponent(int(zero[0]) + 1)
        return B / np.where(norms == 0.0, 1.0, norms)

    Bn = normalised(solve_b(A))
    converged = False
    it = 0
    for it in range(1, SPCA_MAX_ITER + 1):
        U, _, Vt = np.linalg.svd(gram @ B, full_matrices=False)
        A = U @ Vt
        new = normalised(solve_b(A))
        delta = np.max(np.abs(new - Bn))
        Bn = new
        if delta < SPCA_TOL:
            converged = True
            break
    if not converged:
        log.warning("SPCA did not converge in %d iterations", SPCA_MAX_ITER)

    alive = np.linalg.norm(Bn, axis=0) > 0.0
    if not alive.any():
        raise AllZeroComponent(1)
    if not alive.all():
        log.warning("SPCA dropped %d all-zero components", int((~alive).sum()))
        Bn = Bn[:, alive]
    scores = x @ Bn
    var = np.sum(scores**2, axis=0) / T
    order = np.argsort(-var, kind="stable")
    Bn = _fix_signs(Bn[:, order])
    return PcaModel(
        eigenvalues=var[order],
        loadings=Bn,
        scores=x @ Bn,
        sparse=True,
        nonzero=tuple(int(c) for c in np.count_nonzero(Bn, axis=0)),
        converged=converged,
        n_iter=it,
    )


def select_stationary_components(
    model: PcaModel,
    panel: Panel,
    significance: float = 0.05,
    lags: int | None = None,
) -> StableBasis:
    """Loadings whose scores are not rejected by KPSS, in eigenvalue order.

    ``panel`` is the raw panel the model was fitted on after standardization.
    """
    _, params = standardize(panel)
    selected, results = select_by_kpss(model.scores, significance, lags)
    V = model.loadings[:, list(selected)]
    return StableBasis(
        method="spca" if model.sparse else "pca",
        names=panel.names,
        basis=params.to_original_directions(V),
        basis_standardized=V,
        selected=selected,
        weights=model.loadings,
        scores=model.scores,
        kpss=results,
        info={
            "eigenvalues": model.eigenvalues,
            "nonzero": model.nonzero,
            "converged": model.converged,
        },
    )
