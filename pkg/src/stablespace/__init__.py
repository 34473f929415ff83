"""Estimation of the stability space of a multivariate time series."""

from .core import (
    EstimatorConfig,
    IntegrationReport,
    Panel,
    StableBasis,
    StandardizationParams,
    deseasonalize,
    detrend_linear,
    difference,
    integration_order,
    integration_report,
    preprocess,
    read_panel_csv,
    standardize,
    write_panel_csv,
)
from .metrics import grassmann_distance, normalized_mse, principal_angles, project_onto_scores
from .pipeline import estimate, estimate_known_rank
from .simulation import SimulationSpec, simulate
from .stationarity import KpssResult, kpss_level

__version__ = "0.1.0"
