"""MobileNetV3 large/small, with SE or Coordinate Attention in the bnecks.

The architecture tables below are the bneck rows of the +CA networks:
``(kernel, exp size, #out, attention)`` with attention coded 0 = none,
1 = SE, 2 = CA. Strides and nonlinearities are the standard MobileNetV3
assignments. Baselines are the same rows with every CA replaced by SE.

Two silent choices are settled by reproducing the published parameter
counts exactly (see :mod:`camnet.accounting` and ``calibration_sweep``):

* the small network keeps the standard 11th bneck (576 -> 96), duplicated
  from the last printed row, and it carries CA like its neighbours;
* row 15 of the large network is the standard exp-960 -> 160 bneck (the
  printed "#out 960" is the head's 1x1 expansion), and it carries CA.

``as_printed=True`` builds the rows exactly as printed instead.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Iterator, Mapping

import numpy as np

from .attention import CAParams, SEParams, ca_forward, ca_width, se_forward, se_width, CA_REDUCTION
from .errors import ConfigError, ShapeError
from .nn_ops import BatchNormParams, ConvWeights, activation, batchnorm_infer, conv2d, fully_connected, global_avg_pool
from .tensor import as_tensor

BN_EPS = 1e-3
INPUT_SIZE = 224
DEFAULT_CLASSES = 38


class AttentionKind(IntEnum):
    NONE = 0
    SE = 1
    CA = 2


@dataclass(frozen=True)
class BneckSpec:
    kernel: int
    exp_size: int
    out_channels: int
    attention: AttentionKind = AttentionKind.NONE
    stride: int = 1
    activation: str = "relu"

    def __post_init__(self):
        if self.kernel not in (3, 5):
            raise ConfigError(f"kernel must be 3 or 5, got {self.kernel}")
        if self.stride not in (1, 2):
            raise ConfigError(f"stride must be 1 or 2, got {self.stride}")
        if self.activation not in ("relu", "hard_swish"):
            raise ConfigError(f"bneck activation must be relu or hard_swish, got {self.activation!r}")
        object.__setattr__(self, "attention", AttentionKind(self.attention))


# (kernel, exp size, #out, attention) as printed for the +CA networks.
LARGE_CA_TABLE = (
    (3, 16, 16, 0), (3, 64, 24, 0), (3, 72, 24, 0),
    (5, 72, 40, 2), (5, 120, 40, 2), (5, 120, 40, 2),
    (3, 240, 80, 0), (3, 200, 80, 0), (3, 184, 80, 0), (3, 184, 80, 0),
    (3, 480, 112, 1), (3, 672, 112, 1),
    (5, 672, 160, 2), (5, 960, 160, 2), (5, 960, 960, 1),
)
SMALL_CA_TABLE = (
    (3, 16, 16, 1), (3, 72, 24, 0), (3, 88, 24, 0),
    (5, 96, 40, 2), (5, 240, 40, 2), (5, 240, 40, 2),
    (5, 120, 48, 2), (5, 144, 48, 2), (5, 288, 96, 2), (5, 576, 96, 2),
)

# Per-row stride and nonlinearity of the standard networks; the tables omit them.
LARGE_STRIDES = (1, 2, 1, 2, 1, 1, 2, 1, 1, 1, 1, 1, 2, 1, 1)
LARGE_ACTS = ("relu",) * 6 + ("hard_swish",) * 9
SMALL_STRIDES = (2, 2, 1, 2, 1, 1, 1, 1, 2, 1, 1)
SMALL_ACTS = ("relu",) * 3 + ("hard_swish",) * 8

VARIANTS = ("large", "small", "large_ca", "small_ca")


def normalize_variant(name: str) -> str:
    """Accept both ``large-ca`` (CLI spelling) and ``large_ca``."""
    key = name.strip().lower().replace("-", "_")
    if key not in VARIANTS:
        raise ConfigError(f"unknown variant {name!r}; expected one of large, small, large-ca, small-ca")
    return key


@dataclass(frozen=True)
class Architecture:
    name: str
    blocks: tuple[BneckSpec, ...]
    head_channels: int   # 1x1 expansion after the last bneck
    hidden_channels: int  # width of the pooled 1x1 layer before the classifier
    stem_channels: int = 16
    ca_reduction: int = CA_REDUCTION
    ca_bn: bool = False


def architecture(variant: str, *, as_printed: bool = False, small_rows: int | None = None,
                 large_row15: AttentionKind | None = None, ca_reduction: int = CA_REDUCTION,
                 ca_bn: bool = False) -> Architecture:
    """Bneck layout for ``variant``.

    The keyword overrides exist for the calibration sweep; the defaults are
    the calibrated choices.
    """
    variant = normalize_variant(variant)
    large = variant.startswith("large")
    if large:
        rows = [list(r) for r in LARGE_CA_TABLE]
        if not as_printed:
            rows[14][2] = 160
            rows[14][3] = int(AttentionKind.CA if large_row15 is None else large_row15)
        strides, acts = LARGE_STRIDES, LARGE_ACTS
    else:
        rows = [list(r) for r in SMALL_CA_TABLE]
        n_rows = (10 if as_printed else 11) if small_rows is None else small_rows
        if n_rows not in (10, 11):
            raise ConfigError("small network has 10 or 11 bneck rows")
        if n_rows == 11:
            rows.append(list(rows[-1]))
        strides, acts = SMALL_STRIDES, SMALL_ACTS
    if not variant.endswith("_ca"):
        for r in rows:
            if r[3] == AttentionKind.CA:
                r[3] = int(AttentionKind.SE)
    blocks = tuple(
        BneckSpec(k, e, o, AttentionKind(a), strides[i], acts[i]) for i, (k, e, o, a) in enumerate(rows)
    )
    return Architecture(
        name=variant, blocks=blocks, head_channels=960 if large else 576,
        hidden_channels=1280 if large else 1024, ca_reduction=ca_reduction, ca_bn=ca_bn,
    )


def _bn_shapes(prefix: str, channels: int) -> list[tuple[str, tuple[int, ...]]]:
    return [(f"{prefix}.{f}", (channels,)) for f in ("gamma", "beta", "mean", "var")]


def block_param_shapes(spec: BneckSpec, in_channels: int, ca_reduction: int = CA_REDUCTION,
                       ca_bn: bool = False) -> list[tuple[str, tuple[int, ...]]]:
    """Tensor names (relative to the block) and shapes, in forward order."""
    e, o, k = spec.exp_size, spec.out_channels, spec.kernel
    shapes: list[tuple[str, tuple[int, ...]]] = []
    if e != in_channels:
        shapes.append(("expand.weight", (e, in_channels, 1, 1)))
        shapes += _bn_shapes("expand_bn", e)
    shapes.append(("dw.weight", (e, 1, k, k)))
    shapes += _bn_shapes("dw_bn", e)
    if spec.attention == AttentionKind.SE:
        s = se_width(e)
        shapes += [("se.fc1.weight", (s, e)), ("se.fc1.bias", (s,)),
                   ("se.fc2.weight", (e, s)), ("se.fc2.bias", (e,))]
    elif spec.attention == AttentionKind.CA:
        m = ca_width(e, ca_reduction)
        shapes += [("ca.conv1.weight", (m, e, 1, 1)), ("ca.conv1.bias", (m,))]
        if ca_bn:
            shapes += _bn_shapes("ca.bn", m)
        shapes += [("ca.conv_h.weight", (e, m, 1, 1)), ("ca.conv_h.bias", (e,)),
                   ("ca.conv_w.weight", (e, m, 1, 1)), ("ca.conv_w.bias", (e,))]
    shapes.append(("project.weight", (o, e, 1, 1)))
    shapes += _bn_shapes("project_bn", o)
    return shapes


def param_shapes(arch: Architecture, num_classes: int) -> list[tuple[str, tuple[int, ...]]]:
    """Every tensor of the network, canonically named, in forward order."""
    c = arch.stem_channels
    shapes = [("stem.weight", (c, 3, 3, 3))] + _bn_shapes("stem_bn", c)
    for i, spec in enumerate(arch.blocks):
        shapes += [(f"blocks.{i}.{n}", s) for n, s in block_param_shapes(spec, c, arch.ca_reduction, arch.ca_bn)]
        c = spec.out_channels
    shapes.append(("head.conv.weight", (arch.head_channels, c, 1, 1)))
    shapes += _bn_shapes("head.bn", arch.head_channels)
    shapes += [("head.fc.weight", (arch.hidden_channels, arch.head_channels)),
               ("head.fc.bias", (arch.hidden_channels,)),
               ("classifier.weight", (num_classes, arch.hidden_channels)),
               ("classifier.bias", (num_classes,))]
    return shapes


@dataclass(frozen=True)
class ModelGraph:
    """A built network: architecture plus every weight tensor in forward order.

    Treat instances as immutable; :meth:`with_params` returns a modified copy.
    """

    arch: Architecture
    num_classes: int
    params: Mapping[str, np.ndarray] = field(repr=False)

    @property
    def variant(self) -> str:
        return self.arch.name

    @property
    def blocks(self) -> tuple[BneckSpec, ...]:
        return self.arch.blocks

    def expected_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        return param_shapes(self.arch, self.num_classes)

    def block_weights(self, i: int) -> dict[str, np.ndarray]:
        prefix = f"blocks.{i}."
        return {k[len(prefix):]: v for k, v in self.params.items() if k.startswith(prefix)}

    def block_in_channels(self, i: int) -> int:
        return self.arch.stem_channels if i == 0 else self.arch.blocks[i - 1].out_channels

    def num_params(self) -> int:
        return sum(int(v.size) for v in self.params.values())

    def with_params(self, params: Mapping[str, np.ndarray]) -> "ModelGraph":
        return replace(self, params=dict(params))


def build_model(variant: str, num_classes: int = DEFAULT_CLASSES, seed: int = 0, **arch_kwargs) -> ModelGraph:
    """Build ``variant`` with seeded truncated-normal weights.

    ``arch_kwargs`` are forwarded to :func:`architecture` (``as_printed`` etc).
    """
    from .weights_io import init_random

    if num_classes < 2:
        raise ConfigError("num_classes must be at least 2")
    arch = architecture(variant, **arch_kwargs)
    graph = ModelGraph(arch, num_classes, {})
    return init_random(graph, seed)


def _bn(w: Mapping[str, np.ndarray], prefix: str) -> BatchNormParams:
    return BatchNormParams(w[f"{prefix}.gamma"], w[f"{prefix}.beta"], w[f"{prefix}.mean"],
                           w[f"{prefix}.var"], BN_EPS)


def bneck_forward(x: np.ndarray, spec: BneckSpec, weights: Mapping[str, np.ndarray]) -> np.ndarray:
    """Inverted residual block.

    ``weights`` uses block-relative names (``dw.weight``, ``se.fc1.bias``...).
    Expansion is skipped when the block has no ``expand.weight``.
    """
    x = as_tensor(x)
    in_c = x.shape[1]
    if "expand.weight" in weights:
        if weights["expand.weight"].shape[1] != in_c:
            raise ShapeError(f"bneck expects {weights['expand.weight'].shape[1]} input channels, got {in_c}")
        y = conv2d(x, ConvWeights(weights["expand.weight"]), padding=0)
        y = activation(batchnorm_infer(y, _bn(weights, "expand_bn")), spec.activation)
    else:
        if in_c != spec.exp_size:
            raise ShapeError(f"bneck without expansion expects {spec.exp_size} channels, got {in_c}")
        y = x
    y = conv2d(y, ConvWeights(weights["dw.weight"]), stride=spec.stride, padding="same", groups=spec.exp_size)
    y = activation(batchnorm_infer(y, _bn(weights, "dw_bn")), spec.activation)
    if spec.attention == AttentionKind.SE:
        y = se_forward(y, SEParams(weights["se.fc1.weight"], weights["se.fc1.bias"],
                                   weights["se.fc2.weight"], weights["se.fc2.bias"]))
    elif spec.attention == AttentionKind.CA:
        bn = _bn(weights, "ca.bn") if "ca.bn.gamma" in weights else None
        y = ca_forward(y, CAParams(
            ConvWeights(weights["ca.conv1.weight"], weights["ca.conv1.bias"]),
            ConvWeights(weights["ca.conv_h.weight"], weights["ca.conv_h.bias"]),
            ConvWeights(weights["ca.conv_w.weight"], weights["ca.conv_w.bias"]),
            bn,
        ))
    y = conv2d(y, ConvWeights(weights["project.weight"]), padding=0)
    y = batchnorm_infer(y, _bn(weights, "project_bn"))
    if spec.stride == 1 and in_c == spec.out_channels:
        y = y + x
    return y


def _forward_one(g: ModelGraph, x: np.ndarray, trace: list | None = None) -> np.ndarray:
    p = g.params
    y = conv2d(x, ConvWeights(p["stem.weight"]), stride=2, padding="same")
    y = activation(batchnorm_infer(y, _bn(p, "stem_bn")), "hard_swish")
    if trace is not None:
        trace.append(("stem", y.shape))
    for i, spec in enumerate(g.blocks):
        y = bneck_forward(y, spec, g.block_weights(i))
        if trace is not None:
            trace.append((f"blocks.{i}", y.shape))
    y = conv2d(y, ConvWeights(p["head.conv.weight"]), padding=0)
    y = activation(batchnorm_infer(y, _bn(p, "head.bn")), "hard_swish")
    if trace is not None:
        trace.append(("head.conv", y.shape))
    y = global_avg_pool(y)
    y = activation(fully_connected(y, p["head.fc.weight"], p["head.fc.bias"]), "hard_swish")
    return fully_connected(y, p["classifier.weight"], p["classifier.bias"])


def model_forward(g: ModelGraph, x: np.ndarray, threads: int = 1, input_size: int | None = INPUT_SIZE) -> np.ndarray:
    """Logits of shape (n, num_classes, 1, 1).

    Each image runs through the network on its own, so the result for an
    image does not depend on the batch it came in or on ``threads``.
    ``input_size=None`` lifts the 224x224 requirement.
    """
    x = as_tensor(x)
    n, c, h, w = x.shape
    if c != 3 or (input_size is not None and (h, w) != (input_size, input_size)):
        want = f"(n,3,{input_size},{input_size})" if input_size else "(n,3,h,w)"
        raise ShapeError(f"model input must be {want}, got {x.shape}")
    items = [x[i:i + 1] for i in range(n)]
    if threads > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(lambda xi: _forward_one(g, xi), items))
    else:
        outs = [_forward_one(g, xi) for xi in items]
    return np.concatenate(outs, axis=0)


def shape_trace(g: ModelGraph, size: int = INPUT_SIZE) -> list[tuple[str, tuple[int, ...]]]:
    """Output shape after the stem, each bneck and the head conv for one image."""
    trace: list = []
    _forward_one(g, np.zeros((1, 3, size, size), dtype=np.float32), trace)
    return trace


def softmax_classify(logits) -> tuple[int, np.ndarray]:
    """Argmax class (lowest index on ties) and the softmax probabilities."""
    z = np.asarray(logits, dtype=np.float64).reshape(-1)
    e = np.exp(z - z.max())
    probs = e / e.sum()
    return int(np.argmax(z)), probs


def iter_blocks(g: ModelGraph) -> Iterator[tuple[int, BneckSpec, int]]:
    for i, spec in enumerate(g.blocks):
        yield i, spec, g.block_in_channels(i)
