"""Desk-scale spatio-temporal action detection (C++ core)."""

from ._core import (
    ContractViolation,
    average_precision,
    eval_frame,
    eval_video,
    forward_shapes,
    giou,
    gradient_check,
    iou,
    level_extent,
)

__all__ = [
    "ContractViolation",
    "average_precision",
    "eval_frame",
    "eval_video",
    "forward_shapes",
    "giou",
    "gradient_check",
    "iou",
    "level_extent",
]
