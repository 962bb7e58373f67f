"""Inference-time layer primitives on (n, c, h, w) float32 tensors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError
from .tensor import as_tensor

Padding = Union[str, int, Sequence[int]]


@dataclass(frozen=True)
class ConvWeights:
    """Kernel of shape (out, in/groups, k_h, k_w) plus an optional per-output bias."""

    kernel: np.ndarray
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float32)
        if k.ndim != 4:
            raise ShapeError(f"conv kernel must be rank 4, got shape {k.shape}")
        object.__setattr__(self, "kernel", k)
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=np.float32).reshape(-1)
            if b.size != k.shape[0]:
                raise ShapeError(f"bias length {b.size} != out channels {k.shape[0]}")
            object.__setattr__(self, "bias", b)

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]

    @property
    def in_channels_per_group(self) -> int:
        return self.kernel.shape[1]

    @property
    def kernel_size(self) -> tuple[int, int]:
        return self.kernel.shape[2], self.kernel.shape[3]


@dataclass(frozen=True)
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    eps: float = 1e-3

    def __post_init__(self):
        vecs = []
        for name in ("gamma", "beta", "mean", "var"):
            v = np.asarray(getattr(self, name), dtype=np.float32).reshape(-1)
            object.__setattr__(self, name, v)
            vecs.append(v)
        if len({v.size for v in vecs}) != 1:
            raise ShapeError("batch norm vectors differ in length")
        if np.any(self.var < 0):
            raise ValueError("running variance must be non-negative")

    @property
    def channels(self) -> int:
        return self.gamma.size

    @classmethod
    def identity(cls, channels: int, eps: float = 1e-3) -> "BatchNormParams":
        return cls(np.ones(channels), np.zeros(channels), np.zeros(channels), np.ones(channels), eps)


def same_padding(size: int, k: int, stride: int) -> tuple[int, int]:
    """(before, after) zero padding giving an output extent of ceil(size / stride).

    Odd totals put the extra row/column after, i.e. on the bottom/right.
    """
    out = -(-size // stride)
    total = max((out - 1) * stride + k - size, 0)
    return total // 2, total - total // 2


def _resolve_padding(padding: Padding, h: int, w: int, kh: int, kw: int, stride: int):
    if isinstance(padding, str):
        if padding != "same":
            raise ValueError(f"unknown padding mode {padding!r}")
        return (*same_padding(h, kh, stride), *same_padding(w, kw, stride))
    if isinstance(padding, (int, np.integer)):
        return (int(padding),) * 4
    pads = tuple(int(p) for p in padding)
    if len(pads) == 2:
        return pads[0], pads[0], pads[1], pads[1]
    if len(pads) != 4:
        raise ValueError("padding must be 'same', an int, (ph, pw) or (top, bottom, left, right)")
    return pads


def conv_output_size(size: int, k: int, stride: int, before: int, after: int) -> int:
    return (size + before + after - k) // stride + 1


def conv2d(x: np.ndarray, w: ConvWeights, stride: int = 1, padding: Padding = "same",
           groups: int = 1) -> np.ndarray:
    """Grouped 2-D cross-correlation with zero padding.

    ``padding`` is ``"same"`` (see :func:`same_padding`), one int for all
    sides, ``(ph, pw)`` or ``(top, bottom, left, right)``.
    """
    x = as_tensor(x)
    n, c, h, wd = x.shape
    o, cpg, kh, kw = w.kernel.shape
    if stride < 1 or groups < 1:
        raise ShapeError("stride and groups must be positive")
    if c != groups * cpg or o % groups:
        raise ShapeError(f"input has {c} channels; kernel {w.kernel.shape} with groups={groups} "
                         "needs in == groups * in_per_group and groups | out")
    pt, pb, pl, pr = _resolve_padding(padding, h, wd, kh, kw, stride)
    oh = conv_output_size(h, kh, stride, pt, pb)
    ow = conv_output_size(wd, kw, stride, pl, pr)
    if oh < 1 or ow < 1:
        raise ShapeError(f"non-positive output extent ({oh}, {ow})")
    xp = x
    if pt or pb or pl or pr:
        xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    span_h = (oh - 1) * stride + 1
    span_w = (ow - 1) * stride + 1

    if groups == c and cpg == 1 and o == c:
        # depthwise: one shifted multiply-add per kernel tap, taps in row-major order
        out = np.zeros((n, c, oh, ow), dtype=np.float32)
        for i in range(kh):
            for j in range(kw):
                tap = w.kernel[:, 0, i, j].reshape(1, c, 1, 1)
                out += xp[:, :, i:i + span_h:stride, j:j + span_w:stride] * tap
    elif kh == 1 and kw == 1 and groups == 1:
        xs = xp[:, :, :span_h:stride, :span_w:stride].reshape(n, c, oh * ow)
        out = np.matmul(w.kernel.reshape(o, c), xs).reshape(n, o, oh, ow)
    else:
        win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :oh, :ow]
        # win: (n, c, oh, ow, kh, kw)
        opg = o // groups
        outs = []
        for g in range(groups):
            patch = win[:, g * cpg:(g + 1) * cpg]
            kern = w.kernel[g * opg:(g + 1) * opg]
            outs.append(np.einsum("ncyxij,ocij->noyx", patch, kern, optimize=True))
        out = np.concatenate(outs, axis=1) if groups > 1 else outs[0]
        out = np.ascontiguousarray(out, dtype=np.float32)
    if w.bias is not None:
        out = out + w.bias.reshape(1, o, 1, 1)
    return out


def batchnorm_infer(x: np.ndarray, p: BatchNormParams) -> np.ndarray:
    x = as_tensor(x)
    if x.shape[1] != p.channels:
        raise ShapeError(f"batch norm has {p.channels} channels, input has {x.shape[1]}")
    shp = (1, -1, 1, 1)
    inv_std = (np.float32(1.0) / np.sqrt(p.var + np.float32(p.eps))).reshape(shp)
    return (x - p.mean.reshape(shp)) * inv_std * p.gamma.reshape(shp) + p.beta.reshape(shp)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def hard_sigmoid(x: np.ndarray) -> np.ndarray:
    return np.clip(x + np.float32(3.0), np.float32(0.0), np.float32(6.0)) / np.float32(6.0)


def hard_swish(x: np.ndarray) -> np.ndarray:
    return x * hard_sigmoid(x)


ACTIVATIONS = {"relu": relu, "hard_sigmoid": hard_sigmoid, "hard_swish": hard_swish}


def activation(x: np.ndarray, kind: str) -> np.ndarray:
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; expected one of {sorted(ACTIVATIONS)}") from None
    return fn(np.asarray(x, dtype=np.float32))


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """Per-channel mean over the h x w plane, shape (n, c, 1, 1).

    Sums run over w first, then h, in float64.
    """
    x = as_tensor(x)
    h, w = x.shape[2:]
    s = x.sum(axis=3, dtype=np.float64).sum(axis=2)
    return (s / (h * w)).astype(np.float32).reshape(x.shape[0], x.shape[1], 1, 1)


def directional_avg_pool(x: np.ndarray, axis: str) -> np.ndarray:
    """Strip pooling: ``axis="h"`` keeps height and averages over width, giving
    (n, c, h, 1); ``axis="w"`` keeps width and averages over height, giving (n, c, 1, w).
    """
    x = as_tensor(x)
    if axis == "h":
        return x.mean(axis=3, dtype=np.float64, keepdims=True).astype(np.float32)
    if axis == "w":
        return x.mean(axis=2, dtype=np.float64, keepdims=True).astype(np.float32)
    raise ValueError(f"axis must be 'h' or 'w', got {axis!r}")


def fully_connected(x: np.ndarray, weight: np.ndarray, bias: Optional[np.ndarray] = None) -> np.ndarray:
    x = as_tensor(x)
    weight = np.asarray(weight, dtype=np.float32)
    n, c, h, w = x.shape
    if (h, w) != (1, 1):
        raise ShapeError(f"fully_connected expects (n,c,1,1), got {x.shape}")
    if weight.ndim != 2 or weight.shape[1] != c:
        raise ShapeError(f"weight shape {weight.shape} does not accept {c} inputs")
    out = x.reshape(n, c) @ weight.T
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float32).reshape(-1)
        if bias.size != weight.shape[0]:
            raise ShapeError(f"bias length {bias.size} != {weight.shape[0]} outputs")
        out = out + bias
    return np.ascontiguousarray(out, dtype=np.float32).reshape(n, -1, 1, 1)
