"""MamNet: hybrid time/frequency network traffic forecasting and anomaly detection.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from ._core import (
    ConfigError,
    DataError,
    Model,
    NumericError,
    classification_metrics,
    confidence_interval,
    confusion,
    dft,
    mae,
    make_windows,
    mse,
    spectral_features,
    synth_generate,
    welch_t_test,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Model",
    "NumericError",
    "classification_metrics",
    "confidence_interval",
    "confusion",
    "dft",
    "mae",
    "make_windows",
    "mse",
    "spectral_features",
    "synth_generate",
    "welch_t_test",
]
