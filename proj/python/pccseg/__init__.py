"""Particle competition and cooperation image segmentation."""

from ._pccseg import (
    IGNORE,
    UNLABELED,
    error_rate,
    extract_features,
    load_ground_truth,
    load_image,
    load_scribbles,
    otsu_threshold,
    save_mask,
    segment,
    z_normalize,
)

__all__ = [
    "IGNORE",
    "UNLABELED",
    "error_rate",
    "extract_features",
    "load_ground_truth",
    "load_image",
    "load_scribbles",
    "otsu_threshold",
    "save_mask",
    "segment",
    "z_normalize",
]
