"""MobileNetV3 inference and accounting with SE or Coordinate Attention blocks."""

from .accounting import count_flops, count_params, delta_report, report
from .model import AttentionKind, BneckSpec, ModelGraph, build_model, model_forward, softmax_classify
from .weights_io import load_weights, save_weights

__version__ = "0.1.0"

__all__ = [
    "AttentionKind", "BneckSpec", "ModelGraph", "build_model", "model_forward", "softmax_classify",
    "count_params", "count_flops", "delta_report", "report", "load_weights", "save_weights",
]
