"""PLS estimation of the stability space on the one-step lag pair.

The response is the panel shifted one step ahead and the predictor the panel
itself; components are extracted with the deflation ``X <- Q X`` (projection
off the latest score) while the response is held fixed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import Panel, StableBasis, select_by_kpss, standardize
from .errors import DataError, RankExhausted, TooShort, ZeroCrossCovariance

log = logging.getLogger(__name__)

__all__ = [
    "LaggedPair",
    "PlsModel",
    "build_lagged_pair",
    "pls_decomposition",
    "pls_first_direction",
    "pls_fit",
    "select_stationary_pls",
]

_EXHAUSTED_RTOL = 1e-10


@dataclass(frozen=True)
class LaggedPair:
    """Response ``Y`` (rows X_T..X_2) and predictor ``X`` (rows X_{T-1}..X_1)."""

    Y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        if self.Y.shape != self.X.shape:
            raise DataError(f"shape mismatch: Y {self.Y.shape} vs X {self.X.shape}")


def build_lagged_pair(panel: Panel | np.ndarray, standardized: bool = True) -> LaggedPair:
    """Build the lag pair from ``panel``.

    With ``standardized=True`` (default) the panel is centred and scaled
    first. Rows run backwards in time, newest first.
    """
    values = panel.values if isinstance(panel, Panel) else np.asarray(panel, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] < 2:
        raise TooShort("lag pair needs T >= 2")
    if standardized:
        values = standardize(Panel.from_array(values))[0].values
    rev = values[::-1]
    return LaggedPair(Y=np.ascontiguousarray(rev[:-1]), X=np.ascontiguousarray(rev[1:]))


def _sign_fix(w: np.ndarray) -> float:
    return 1.0 if w[np.argmax(np.abs(w))] >= 0 else -1.0


def pls_first_direction(X, Y):
    """Leading PLS direction of the pair.

    Returns ``(w, c, lam)``: ``w`` is the top eigenvector of X'YY'X (unit
    norm, largest-magnitude entry positive), ``lam`` the top singular value
    of Y'X and ``c = Y'X w / lam``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[0] != Y.shape[0]:
        raise DataError("X and Y need the same number of rows")
    cross = X.T @ Y
    scale = np.linalg.norm(X) * np.linalg.norm(Y)
    if scale == 0.0 or not np.any(cross):
        raise ZeroCrossCovariance("X'Y is the zero matrix")
    U, s, _ = np.linalg.svd(cross)
    lam = float(s[0])
    if lam <= 1e-14 * scale:
        raise ZeroCrossCovariance("X'Y is numerically zero")
    w = U[:, 0] * _sign_fix(U[:, 0])
    c = (Y.T @ (X @ w)) / lam
    return w, c, lam


@dataclass(frozen=True)
class PlsModel:
    """Fitted PLS components, stored column-wise (one column per component).

    ``weights`` (w), ``response_weights`` (c), ``psi`` (original-scale
    weights), ``loadings`` (d, regression of Y on each score), ``scores``
    (T_i) and ``singular_values`` (lambda). ``exhausted_at`` is the 1-based
    index of the first component that could not be extracted, or ``None``.
    """

    weights: np.ndarray
    response_weights: np.ndarray
    psi: np.ndarray
    loadings: np.ndarray
    scores: np.ndarray
    singular_values: np.ndarray
    pair: LaggedPair = field(repr=False)
    exhausted_at: int | None = None

    @property
    def n_components(self) -> int:
        return self.weights.shape[1]

    def to_dict(self) -> dict:
        return {
            "w": self.weights.tolist(),
            "psi": self.psi.tolist(),
            "c": self.response_weights.tolist(),
            "d": self.loadings.tolist(),
            "lambda": self.singular_values.tolist(),
            "scores": self.scores.tolist(),
            "exhausted_at": self.exhausted_at,
        }


def pls_fit(pair: LaggedPair, k: int | None = None, strict: bool = False) -> PlsModel:
    """Extract ``k`` PLS components (default: all ``m``).

    If the residual cross-covariance vanishes before ``k`` components, the
    completed components are returned with ``exhausted_at`` set, unless
    ``strict`` is true, in which case :class:`RankExhausted` is raised.
    """
    X = np.array(pair.X, dtype=float)
    Y = pair.Y
    n, m = X.shape
    if k is None:
        k = m
    if not 1 <= k <= m:
        raise DataError(f"need 1 <= k <= m={m}, got {k}")

    A = np.eye(m)
    ws, cs, psis, ds, ts, lams = [], [], [], [], [], []
    exhausted_at = None
    first_lam = None
    for i in range(k):
        try:
            w, c, lam = pls_first_direction(X, Y)
        except ZeroCrossCovariance:
            if i == 0:
                raise
            exhausted_at = i + 1
            break
        if first_lam is None:
            first_lam = lam
        elif lam <= _EXHAUSTED_RTOL * first_lam:
            exhausted_at = i + 1
            break
        t = X @ w
        tt = float(t @ t)
        if tt <= (_EXHAUSTED_RTOL**2) * float(np.sum(pair.X**2)):
            exhausted_at = i + 1
            break
        S = X.T @ X / n
        Sw = S @ w
        P = np.eye(m) - np.outer(w, Sw) / float(w @ Sw)

        ws.append(w)
        cs.append(c)
        lams.append(lam)
        psis.append(A @ w)
        ts.append(t)
        ds.append(Y.T @ t / tt)

        X = X - np.outer(t, t @ X) / tt
        A = A @ P

    if exhausted_at is not None:
        if strict:
            raise RankExhausted(exhausted_at, completed=exhausted_at - 1)
        log.warning("PLS rank exhausted at component %d of %d", exhausted_at, k)

    def cols(vs, rows):
        return np.column_stack(vs) if vs else np.zeros((rows, 0))

    return PlsModel(
        weights=cols(ws, m),
        response_weights=cols(cs, m),
        psi=cols(psis, m),
        loadings=cols(ds, m),
        scores=cols(ts, n),
        singular_values=np.array(lams),
        pair=pair,
        exhausted_at=exhausted_at,
    )


def select_stationary_pls(
    model: PlsModel, panel: Panel, significance: float = 0.05, lags: int | None = None
) -> StableBasis:
    """Keep the PLS directions whose scores pass the KPSS test.

    ``model`` must be fitted on the lag pair of ``panel`` (standardized).
    """
    std_panel, params = standardize(panel)
    selected, results = select_by_kpss(model.scores, significance, lags)
    w_sel = model.weights[:, list(selected)]
    return StableBasis(
        method="pls",
        names=panel.names,
        basis=params.to_original_directions(w_sel),
        basis_standardized=w_sel,
        selected=selected,
        weights=model.psi,
        scores=std_panel.values @ model.psi,
        kpss=results,
        info={
            "singular_values": model.singular_values,
            "psi_selected": model.psi[:, list(selected)],
            "exhausted_at": model.exhausted_at,
        },
    )


def pls_decomposition(model: PlsModel, stable=()):
    """Split Y into stable-score and other-score parts plus a residual.

    ``Y = sum_j T_j d_j' + F`` with ``d_j = Y'T_j / T_j'T_j``. Returns
    ``(stationary_part, nonstationary_part, residual)``.
    """
    stable = sorted(set(int(i) for i in stable))
    Y = model.pair.Y
    k = model.n_components
    if any(i < 0 or i >= k for i in stable):
        raise DataError("stable index out of range")
    other = [i for i in range(k) if i not in stable]
    T, D = model.scores, model.loadings
    stat = T[:, stable] @ D[:, stable].T
    nonstat = T[:, other] @ D[:, other].T
    return stat, nonstat, Y - stat - nonstat
