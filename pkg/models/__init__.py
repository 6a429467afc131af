"""
Models Module

The shared FL classifier and the per-client heads used for fast coalition
valuation:
- mlp.py: linear / one-hidden-layer ReLU multi-label network, BCE + SGD
- logistic_heads.py: per-label logistic regression over deep features
- persistence.py: versioned joblib checkpoints of parameter vectors
"""

from models.mlp import (
    Architecture,
    ModelParams,
    ShapeError,
    TrainingError,
    bce_gradient,
    bce_loss,
    extract_features,
    init_params,
    predict_logits,
    predict_proba,
    sgd,
    train_local,
)
from models.logistic_heads import LogisticHeads, fit_logistic_head

__version__ = "1.0.0"

__all__ = [
    "Architecture",
    "LogisticHeads",
    "ModelParams",
    "ShapeError",
    "TrainingError",
    "bce_gradient",
    "bce_loss",
    "extract_features",
    "fit_logistic_head",
    "init_params",
    "predict_logits",
    "predict_proba",
    "sgd",
    "train_local",
]
