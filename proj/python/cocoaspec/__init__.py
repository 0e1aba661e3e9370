"""Spectral cocoa quality pipeline."""

from ._core import (
    CocoaError,
    PcaModel,
    TrainedModel,
    bootstrap_means,
    fermentation_ratio,
    fit,
    fit_pca,
    mse,
    r_squared,
    reflectance,
    run,
    sam_angle,
    select_threshold,
    select_top_n,
    validate_config,
)

__all__ = [
    "CocoaError",
    "PcaModel",
    "TrainedModel",
    "bootstrap_means",
    "fermentation_ratio",
    "fit",
    "fit_pca",
    "mse",
    "r_squared",
    "reflectance",
    "run",
    "sam_angle",
    "select_threshold",
    "select_top_n",
    "validate_config",
]
