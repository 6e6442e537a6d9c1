"""Sub-cluster contrastive learning with distance-based class reweighting."""

from ._subtail import (
    SubtailError,
    TrainedRun,
    class_weights,
    generate_synthetic,
    metrics,
    scl_loss,
    subcluster,
    subcluster_loss,
    train,
)

__all__ = [
    "SubtailError",
    "TrainedRun",
    "class_weights",
    "generate_synthetic",
    "metrics",
    "scl_loss",
    "subcluster",
    "subcluster_loss",
    "train",
]
