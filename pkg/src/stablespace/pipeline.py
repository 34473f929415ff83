"""One-call estimation of the stability space with any of the four methods."""

from __future__ import annotations

import numpy as np

from .core import EstimatorConfig, Panel, StableBasis, standardize
from .errors import DataError
from .johansen import johansen_estimate
from .pca import pca_fit, select_stationary_components, spca_fit
from .pls import build_lagged_pair, pls_fit, select_stationary_pls

__all__ = ["estimate", "estimate_known_rank"]


def estimate(panel: Panel, config: EstimatorConfig | None = None) -> StableBasis:
    config = config or EstimatorConfig()
    sig, lags = config.significance, config.kpss_lags
    if config.method == "johansen":
        return johansen_estimate(panel, config.johansen_lags, sig)
    std, _ = standardize(panel)
    if config.method == "pca":
        return select_stationary_components(pca_fit(std), panel, sig, lags)
    if config.method == "spca":
        model = spca_fit(std, config.spca_penalties(panel.m), strict=False)
        return select_stationary_components(model, panel, sig, lags)
    model = pls_fit(build_lagged_pair(std, standardized=False))
    return select_stationary_pls(model, panel, sig, lags)


def estimate_known_rank(panel: Panel, method: str, r: int) -> np.ndarray:
    """Basis (raw-variable directions, unit columns) from the last ``r`` components.

    With the stable rank known, PCA keeps the loadings of the ``r`` smallest
    eigenvalues and PLS the last ``r`` directions.
    """
    std, params = standardize(panel)
    if method == "pca":
        V = pca_fit(std).loadings
    elif method == "pls":
        V = pls_fit(build_lagged_pair(std, standardized=False)).weights
    else:
        raise DataError(f"known-rank estimation not defined for {method!r}")
    if not 1 <= r <= V.shape[1]:
        raise DataError(f"r={r} outside 1..{V.shape[1]}")
    B = params.to_original_directions(V[:, -r:])
    return B / np.linalg.norm(B, axis=0)
