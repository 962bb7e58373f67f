"""Per-layer parameter and multiply-accumulate accounting.

Parameters are counted from the tensors a graph actually holds, BN running
statistics included (4 scalars per channel). MACs come from an independent
walk over the architecture: conv MACs are out_h * out_w * out_c *
(in_c / groups) * k_h * k_w, FC MACs are in * out, and elementwise work
(activations, BN, residual adds, pooling, gating) is not counted.
Reported FLOPs are 2 * MACs; see ``FLOPS_CONVENTION``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

from .attention import ca_width, se_width
from .errors import InputError
from .model import INPUT_SIZE, AttentionKind, ModelGraph, architecture, param_shapes
from .nn_ops import same_padding, conv_output_size

# Published figures for the four networks at 38 classes.
PUBLISHED = {
    "large": {"params": 4_275_110, "gflops": 0.446, "size_mb": 54.3},
    "small": {"params": 1_568_918, "gflops": 0.117, "size_mb": 22.4},
    "large_ca": {"params": 3_333_799, "gflops": 0.449, "size_mb": 43.6},
    "small_ca": {"params": 1_202_347, "gflops": 0.119, "size_mb": 18.3},
}
BASELINE_OF = {"large_ca": "large", "small_ca": "small"}
FLOPS_CONVENTION = "2*MACs"
PARAM_CONVENTION = "all stored scalars incl. BN gamma/beta/running mean/running var"


@dataclass(frozen=True)
class LayerReport:
    name: str
    params: int
    macs: int


@dataclass
class ModelReport:
    variant: str
    layers: list[LayerReport] = field(default_factory=list)
    serialized_size_bytes: int = 0

    @property
    def total_params(self) -> int:
        return sum(l.params for l in self.layers)

    @property
    def total_macs(self) -> int:
        return sum(l.macs for l in self.layers)

    @property
    def flops(self) -> int:
        return 2 * self.total_macs

    @property
    def gflops(self) -> float:
        return self.flops / 1e9

    def tsv(self) -> str:
        lines = [f"{l.name}\t{l.params}\t{l.macs}" for l in self.layers]
        lines.append(f"TOTAL\t{self.total_params}\t{self.total_macs}")
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        width = max([len(l.name) for l in self.layers] + [5])
        rows = [f"{'layer':<{width}}  {'params':>10}  {'MACs':>13}", "-" * (width + 27)]
        rows += [f"{l.name:<{width}}  {l.params:>10,}  {l.macs:>13,}" for l in self.layers]
        rows.append("-" * (width + 27))
        rows.append(f"{'TOTAL':<{width}}  {self.total_params:>10,}  {self.total_macs:>13,}")
        return "\n".join(rows)


def _conv_macs(h: int, w: int, cin: int, cout: int, k: int, stride: int, groups: int = 1) -> tuple[int, int, int]:
    pt, pb = same_padding(h, k, stride)
    pl, pr = same_padding(w, k, stride)
    oh = conv_output_size(h, k, stride, pt, pb)
    ow = conv_output_size(w, k, stride, pl, pr)
    return oh * ow * cout * (cin // groups) * k * k, oh, ow


def layer_macs(arch, num_classes: int, size: int = INPUT_SIZE) -> dict[str, int]:
    """MACs per layer name for one ``size`` x ``size`` RGB image."""
    macs: dict[str, int] = {}
    c = arch.stem_channels
    macs["stem"], h, w = _conv_macs(size, size, 3, c, 3, 2)
    for i, spec in enumerate(arch.blocks):
        p = f"blocks.{i}"
        e = spec.exp_size
        if e != c:
            macs[f"{p}.expand"], _, _ = _conv_macs(h, w, c, e, 1, 1)
        macs[f"{p}.dw"], h, w = _conv_macs(h, w, e, e, spec.kernel, spec.stride, groups=e)
        if spec.attention == AttentionKind.SE:
            s = se_width(e)
            macs[f"{p}.se.fc1"] = e * s
            macs[f"{p}.se.fc2"] = s * e
        elif spec.attention == AttentionKind.CA:
            m = ca_width(e, arch.ca_reduction)
            macs[f"{p}.ca.conv1"] = (h + w) * e * m
            macs[f"{p}.ca.conv_h"] = h * m * e
            macs[f"{p}.ca.conv_w"] = w * m * e
        macs[f"{p}.project"], _, _ = _conv_macs(h, w, e, spec.out_channels, 1, 1)
        c = spec.out_channels
    macs["head.conv"], _, _ = _conv_macs(h, w, c, arch.head_channels, 1, 1)
    macs["head.fc"] = arch.head_channels * arch.hidden_channels
    macs["classifier"] = arch.hidden_channels * num_classes
    return macs


def _layer_of(tensor_name: str) -> str:
    return tensor_name.rsplit(".", 1)[0]


def _group_params(named_sizes) -> dict[str, int]:
    counts: dict[str, int] = {}
    for name, size in named_sizes:
        layer = _layer_of(name)
        counts[layer] = counts.get(layer, 0) + size
    return counts


def _merge(params: dict[str, int], macs: dict[str, int]) -> list[LayerReport]:
    out = []
    for layer, n in params.items():
        # BN layers carry parameters but no counted MACs
        out.append(LayerReport(layer, n, macs.get(layer, 0)))
    missing = set(macs) - set(params)
    if missing:
        raise AssertionError(f"MAC walk produced layers without parameters: {sorted(missing)}")
    return out


def count_params(g: ModelGraph) -> ModelReport:
    from .weights_io import container_size

    counts = _group_params((n, int(a.size)) for n, a in g.params.items())
    rep = ModelReport(g.variant, [LayerReport(k, v, 0) for k, v in counts.items()])
    rep.serialized_size_bytes = container_size(g)
    return rep


def count_flops(g: ModelGraph, size: int = INPUT_SIZE) -> ModelReport:
    rep = count_params(g)
    macs = layer_macs(g.arch, g.num_classes, size)
    rep.layers = _merge({l.name: l.params for l in rep.layers}, macs)
    return rep


def report(g: ModelGraph, size: int = INPUT_SIZE) -> ModelReport:
    """Full per-layer report: params, MACs and container size."""
    return count_flops(g, size)


def architecture_params(arch, num_classes: int) -> int:
    """Parameter total from layer shapes alone, no weights needed."""
    return sum(math.prod(s) for _, s in param_shapes(arch, num_classes))


@dataclass(frozen=True)
class Delta:
    params_reduction: float
    size_reduction: float
    flops_delta: float

    def __str__(self) -> str:
        return (f"params {-self.params_reduction:+.1f}%  size {-self.size_reduction:+.1f}%  "
                f"FLOPs {self.flops_delta:+.1f}%")


def delta_report(a: ModelReport, b: ModelReport) -> Delta:
    """Reductions ``1 - b/a`` as percentages, and the FLOPs change ``b/a - 1``, to 0.1."""
    if a.total_params == 0 or a.serialized_size_bytes == 0 or a.total_macs == 0:
        raise InputError("reference report has zero params, size or MACs")
    return Delta(
        params_reduction=round(100.0 * (1 - b.total_params / a.total_params), 1),
        size_reduction=round(100.0 * (1 - b.serialized_size_bytes / a.serialized_size_bytes), 1),
        flops_delta=round(100.0 * (b.total_macs / a.total_macs - 1), 1),
    )


def se_params_closed_form(channels: int, reduction: int = 4) -> int:
    s = -(-channels // reduction)
    s = -(-s // 8) * 8
    return 2 * channels * s + s + channels


@dataclass(frozen=True)
class CalibrationRow:
    ca_reduction: int
    ca_bn: bool
    small_rows: int
    large_row15: str
    large_ca_params: int
    small_ca_params: int

    @property
    def error(self) -> int:
        return (abs(self.large_ca_params - PUBLISHED["large_ca"]["params"])
                + abs(self.small_ca_params - PUBLISHED["small_ca"]["params"]))


def calibration_sweep(num_classes: int = 38) -> list[CalibrationRow]:
    """Parameter totals of the +CA networks over the unstated choices, best first.

    Swept: CA reduction in {8, 16, 32}, BN inside the CA bottleneck or not,
    10 or 11 small bneck rows, and the attention kind on large row 15.
    """
    rows = []
    for r, bn, n_small, row15 in product((8, 16, 32), (False, True), (10, 11),
                                         (AttentionKind.SE, AttentionKind.CA)):
        large = architecture("large_ca", large_row15=row15, ca_reduction=r, ca_bn=bn)
        small = architecture("small_ca", small_rows=n_small, ca_reduction=r, ca_bn=bn)
        rows.append(CalibrationRow(r, bn, n_small, row15.name,
                                   architecture_params(large, num_classes),
                                   architecture_params(small, num_classes)))
    return sorted(rows, key=lambda row: row.error)


def flops_convention_check(reports: dict[str, ModelReport]) -> dict[str, dict[str, float]]:
    """Relative error of MACs and 2*MACs against the published GFLOPs per variant."""
    out = {}
    for v, rep in reports.items():
        target = PUBLISHED[v]["gflops"] * 1e9
        out[v] = {"MACs": rep.total_macs / target - 1, "2*MACs": 2 * rep.total_macs / target - 1}
    return out


def baseline_report(g: ModelGraph) -> ModelReport:
    """Report for a graph's un-modified baseline, same class count."""
    from .model import build_model

    base = BASELINE_OF.get(g.variant, g.variant)
    return report(build_model(base, g.num_classes, seed=0))
