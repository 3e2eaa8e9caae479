from dsrsd._core import (
    ConfigError,
    DataError,
    Error,
    IoError,
    NumericalError,
    ShapeError,
    UsageError,
    align_loss,
    auc,
    contrastive_loss,
    cross_covariance,
    decorrelation_loss,
    generate_synthetic,
    grad_check,
    orthogonality_loss,
    run_cli,
    task_loss,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "IoError",
    "NumericalError",
    "ShapeError",
    "UsageError",
    "align_loss",
    "auc",
    "contrastive_loss",
    "cross_covariance",
    "decorrelation_loss",
    "generate_synthetic",
    "grad_check",
    "orthogonality_loss",
    "run_cli",
    "task_loss",
]
