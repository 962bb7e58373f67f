"""Squeeze-and-Excitation and Coordinate Attention blocks.

SE squeezes each channel to one number, runs two fully connected layers
and rescales whole channels. CA instead pools along each spatial axis,
encodes both strips with one shared 1x1 conv, and emits a height gate and
a width gate whose product rescales every pixel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ShapeError
from .nn_ops import (
    BatchNormParams,
    ConvWeights,
    batchnorm_infer,
    conv2d,
    directional_avg_pool,
    fully_connected,
    global_avg_pool,
    hard_sigmoid,
    hard_swish,
    relu,
)
from .tensor import as_tensor, broadcast_mul, concat_axis, split_axis

SE_REDUCTION = 4
CA_REDUCTION = 32
CA_MIN_MID = 8


def make_divisible(v: float, divisor: int = 8, min_value: Optional[int] = None) -> int:
    """Round ``v`` to the nearest multiple of ``divisor`` without dropping more than 10%."""
    min_value = divisor if min_value is None else min_value
    new_v = max(min_value, int(v + divisor / 2) // divisor * divisor)
    if new_v < 0.9 * v:
        new_v += divisor
    return new_v


def se_width(channels: int, reduction: int = SE_REDUCTION) -> int:
    return make_divisible(channels / reduction)


def ca_width(channels: int, reduction: int = CA_REDUCTION) -> int:
    return max(CA_MIN_MID, round(channels / reduction))


@dataclass(frozen=True)
class SEParams:
    fc1_weight: np.ndarray  # (squeeze, channels)
    fc1_bias: np.ndarray
    fc2_weight: np.ndarray  # (channels, squeeze)
    fc2_bias: np.ndarray

    @property
    def channels(self) -> int:
        return self.fc1_weight.shape[1]

    @property
    def num_params(self) -> int:
        return sum(a.size for a in (self.fc1_weight, self.fc1_bias, self.fc2_weight, self.fc2_bias))


@dataclass(frozen=True)
class CAParams:
    conv1: ConvWeights   # mid <- channels, 1x1
    conv_h: ConvWeights  # channels <- mid, 1x1
    conv_w: ConvWeights  # channels <- mid, 1x1
    bn: Optional[BatchNormParams] = None

    @property
    def channels(self) -> int:
        return self.conv1.in_channels_per_group

    @property
    def mid(self) -> int:
        return self.conv1.out_channels

    @property
    def num_params(self) -> int:
        n = 0
        for conv in (self.conv1, self.conv_h, self.conv_w):
            n += conv.kernel.size + (0 if conv.bias is None else conv.bias.size)
        if self.bn is not None:
            n += 4 * self.bn.channels
        return n


def _check_channels(x: np.ndarray, channels: int, block: str) -> None:
    if x.shape[1] != channels:
        raise ShapeError(f"{block} block expects {channels} channels, got {x.shape[1]}")


def se_gate(x: np.ndarray, p: SEParams) -> np.ndarray:
    """Per-channel gate s of shape (n, c, 1, 1)."""
    z = global_avg_pool(x)
    z = relu(fully_connected(z, p.fc1_weight, p.fc1_bias))
    return hard_sigmoid(fully_connected(z, p.fc2_weight, p.fc2_bias))


def se_forward(x: np.ndarray, p: SEParams) -> np.ndarray:
    x = as_tensor(x)
    _check_channels(x, p.channels, "SE")
    return broadcast_mul(x, se_gate(x, p))


def ca_gates(x: np.ndarray, p: CAParams) -> tuple[np.ndarray, np.ndarray]:
    """Height gate (n, c, h, 1) and width gate (n, c, 1, w)."""
    n, c, h, w = x.shape
    zh = directional_avg_pool(x, "h")
    zw = directional_avg_pool(x, "w").transpose(0, 1, 3, 2)
    joint = concat_axis([zh, zw], "h")
    f = conv2d(joint, p.conv1, padding=0)
    if p.bn is not None:
        f = batchnorm_infer(f, p.bn)
    f = hard_swish(f)
    f_h, f_w = split_axis(f, "h", [h, w])
    g_h = hard_sigmoid(conv2d(f_h, p.conv_h, padding=0))
    g_w = hard_sigmoid(conv2d(f_w, p.conv_w, padding=0))
    return g_h, np.ascontiguousarray(g_w.transpose(0, 1, 3, 2))


def ca_forward(x: np.ndarray, p: CAParams) -> np.ndarray:
    x = as_tensor(x)
    _check_channels(x, p.channels, "CA")
    if p.conv_h.out_channels != p.channels or p.conv_w.out_channels != p.channels:
        raise ShapeError("CA output convs must restore the input channel count")
    g_h, g_w = ca_gates(x, p)
    return broadcast_mul(x, g_h, g_w)
