"""Cross-module invariant scoreboard behind ``camnet verify``."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import nn_ops, reference
from .accounting import PUBLISHED, architecture_params, report
from .attention import CAParams, SEParams, ca_forward, ca_gates, se_forward, se_gate
from .model import architecture, build_model
from .nn_ops import ConvWeights, conv2d, same_padding
from .tensor import concat_axis, split_axis
from .weights_io import load_bytes, serialize


@dataclass
class GroupResult:
    name: str
    passed: bool
    detail: str


def check_tensor(rng) -> str:
    for _ in range(50):
        shape = tuple(int(v) for v in rng.integers(1, 9, size=4))
        x = rng.uniform(-10, 10, shape).astype(np.float32)
        axis = ("c", "h", "w")[rng.integers(3)]
        ext = x.shape[{"c": 1, "h": 2, "w": 3}[axis]]
        cut = int(rng.integers(1, ext + 1))
        sizes = [cut, ext - cut] if cut < ext else [ext]
        back = concat_axis(split_axis(x, axis, sizes), axis)
        assert np.array_equal(back, x), "concat(split(x)) != x"
    return "50 split/concat roundtrips bitwise"


def check_pooling(rng) -> str:
    worst = 0.0
    for _ in range(200):
        shape = (int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(1, 13)), int(rng.integers(1, 13)))
        x = rng.uniform(-10, 10, shape).astype(np.float32)
        g = nn_ops.global_avg_pool(x).astype(np.float64)
        zh = nn_ops.directional_avg_pool(x, "h").astype(np.float64).mean(axis=2, keepdims=True)
        zw = nn_ops.directional_avg_pool(x, "w").astype(np.float64).mean(axis=3, keepdims=True)
        worst = max(worst, float(np.abs(zh - g).max()), float(np.abs(zw - g).max()))
    assert worst <= 1e-6, f"strip-mean vs global-mean gap {worst:.2e}"
    return f"200 tensors, max gap {worst:.1e}"


def check_conv(rng) -> str:
    worst = 0.0
    for _ in range(40):
        c = int(rng.integers(1, 9))
        groups = int(rng.choice([1, c]))
        o = c if groups == c else int(rng.integers(1, 9))
        k = int(rng.integers(1, 6))
        s = int(rng.integers(1, 3))
        h, w = (int(v) for v in rng.integers(k, 13, size=2))
        x = rng.uniform(-1, 1, (1, c, h, w)).astype(np.float32)
        kern = rng.uniform(-1, 1, (o, c // groups, k, k)).astype(np.float32)
        bias = rng.uniform(-1, 1, o).astype(np.float32)
        got = conv2d(x, ConvWeights(kern, bias), stride=s, padding="same", groups=groups)
        pads = (*same_padding(h, k, s), *same_padding(w, k, s))
        want = reference.conv2d_naive(x, kern, bias, s, pads, groups)
        rel = float(np.abs(got - want).max() / max(1.0, np.abs(want).max()))
        worst = max(worst, rel)
    assert worst <= 1e-5, f"conv vs naive oracle relative gap {worst:.2e}"
    return f"40 configs, max rel gap {worst:.1e}"


def check_activation(rng, hard_sigmoid: Optional[Callable] = None) -> str:
    hsig = hard_sigmoid or nn_ops.hard_sigmoid
    pts = np.array([-3.0, 0.0, 3.0], dtype=np.float32)
    assert np.array_equal(hsig(pts), np.array([0.0, 0.5, 1.0], dtype=np.float32)), "hard_sigmoid breakpoints"
    x = rng.uniform(-8, 8, 1000).astype(np.float32)
    assert np.array_equal(x * hsig(x), nn_ops.hard_swish(x)), "hard_swish != x * hard_sigmoid(x)"
    assert np.array_equal(nn_ops.relu(x), np.maximum(x, 0)), "relu"
    return "breakpoints and hard_swish identity exact"


def _random_se(rng, c):
    s = max(1, c // 4)
    return SEParams(rng.normal(0, 1, (s, c)).astype(np.float32), rng.normal(0, 1, s).astype(np.float32),
                    rng.normal(0, 1, (c, s)).astype(np.float32), rng.normal(0, 1, c).astype(np.float32))


def _random_ca(rng, c, m=8):
    def cw(o, i):
        return ConvWeights(rng.normal(0, 1, (o, i, 1, 1)).astype(np.float32), rng.normal(0, 1, o).astype(np.float32))
    return CAParams(cw(m, c), cw(c, m), cw(c, m))


def check_attention(rng) -> str:
    for _ in range(30):
        c = int(rng.integers(1, 17))
        x = rng.uniform(-10, 10, (1, c, int(rng.integers(1, 9)), int(rng.integers(1, 9)))).astype(np.float32)
        se, ca = _random_se(rng, c), _random_ca(rng, c)
        s = se_gate(x, se)
        gh, gw = ca_gates(x, ca)
        for gate in (s, gh, gw):
            assert gate.min() >= 0 and gate.max() <= 1, "gate outside [0, 1]"
        for out in (se_forward(x, se), ca_forward(x, ca)):
            assert out.shape == x.shape and np.all(np.abs(out) <= np.abs(x)), "attention amplified input"
    return "30 inputs per block: gates in [0,1], |out| <= |in|"


def check_params(rng) -> str:
    lines = []
    for v, target in PUBLISHED.items():
        got = architecture_params(architecture(v), 38)
        lines.append(f"{v}={got:,} (target {target['params']:,})")
        assert got == target["params"], f"{v}: {got} != {target['params']}"
    return "; ".join(lines)


def check_weights(rng) -> str:
    g = build_model("small_ca", seed=7)
    back = load_bytes(serialize(g), build_model("small_ca", seed=8))
    assert all(np.array_equal(g.params[k], back.params[k]) for k in g.params), "roundtrip changed a tensor"
    assert report(g).total_params == g.num_params()
    return "small_ca save/load bitwise"


GROUPS: dict[str, Callable] = {
    "tensor": check_tensor,
    "pooling": check_pooling,
    "conv": check_conv,
    "activation": check_activation,
    "attention": check_attention,
    "params": check_params,
    "weights": check_weights,
}


def run_verify(seed: int = 0, faults: Iterable[str] = (), groups: Optional[Iterable[str]] = None) -> list[GroupResult]:
    """Run each group; ``faults={"hard_sigmoid"}`` feeds the activation group a broken gate."""
    faults = set(faults)
    results = []
    for name in groups or GROUPS:
        rng = np.random.default_rng(seed)
        fn = GROUPS[name]
        try:
            if name == "activation" and "hard_sigmoid" in faults:
                detail = fn(rng, hard_sigmoid=lambda x: np.clip(x + 3.0, 0.0, 6.0) / np.float32(5.0))
            else:
                detail = fn(rng)
            results.append(GroupResult(name, True, detail))
        except AssertionError as exc:
            results.append(GroupResult(name, False, str(exc)))
    return results


def scoreboard(results: list[GroupResult]) -> str:
    buf = io.StringIO()
    for r in results:
        buf.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<10}  {r.detail}\n")
    n_ok = sum(r.passed for r in results)
    buf.write(f"{n_ok}/{len(results)} groups passed\n")
    return buf.getvalue()
