"""Absenteeism class prediction toolkit.

Reproduces an absenteeism-at-work study pipeline end to end: CSV ingest,
one-hot encoding and min-max scaling, SMOTE oversampling, four classifiers
built from first principles (multinomial logistic regression, RBF SVM,
feed-forward network, random forest), comparison metrics, a benchmark
harness, versioned model persistence, an HTTP prediction service and a CLI.
"""

__version__ = "0.1.0"

from .ingest import AbsenteeismClass, bin_absenteeism, parse_dataset, to_hire_time
from .preprocess import build_schema, encode, fit_scaler, apply_scaler
from .metrics import MetricsReport, confusion, evaluate_predictions

__all__ = [
    "AbsenteeismClass",
    "bin_absenteeism",
    "parse_dataset",
    "to_hire_time",
    "build_schema",
    "encode",
    "fit_scaler",
    "apply_scaler",
    "MetricsReport",
    "confusion",
    "evaluate_predictions",
    "__version__",
]
