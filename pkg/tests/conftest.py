import numpy as np
import pytest

from camnet.attention import CAParams, SEParams
from camnet.data import write_ppm
from camnet.model import build_model, model_forward
from camnet.nn_ops import ConvWeights

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_se(rng, c, s=None):
    s = s or max(1, c // 4)
    f = lambda *shape: rng.normal(0, 0.5, shape).astype(np.float32)
    return SEParams(f(s, c), f(s), f(c, s), f(c))


def random_ca(rng, c, m=8):
    def cw(o, i):
        return ConvWeights(rng.normal(0, 0.5, (o, i, 1, 1)).astype(np.float32),
                           rng.normal(0, 0.5, o).astype(np.float32))
    return CAParams(cw(m, c), cw(c, m), cw(c, m))


def mean_sign_weights(g):
    """Weights that make ``g`` a positive affine map of the pixels.

    Kernels average their inputs, SE/CA gates are saturated open, and BN
    layers that feed hard-swish add +3 so every activation stays in its
    identity region for inputs in [0, 1]. The classifier compares the
    pooled features with their value on a uniform 0.5 image, so class 1
    means "brighter than mid-grey". Requires ``g.num_classes == 2``.
    """
    assert g.num_classes == 2
    hswish_bn = {"stem_bn", "head.bn"}
    for i, spec in enumerate(g.blocks):
        if spec.activation == "hard_swish":
            hswish_bn |= {f"blocks.{i}.expand_bn", f"blocks.{i}.dw_bn"}
    p = {}
    for name, shape in g.expected_shapes():
        layer, field = name.rsplit(".", 1)
        if ".se.fc" in name or ".ca.conv" in name:
            val = np.zeros(shape, np.float32)
            if field == "bias" and (layer.endswith("se.fc2") or layer.endswith("conv_h") or layer.endswith("conv_w")):
                val[:] = 3.0
        elif field == "weight":
            fan_in = int(np.prod(shape[1:]))
            val = np.full(shape, 1.0 / fan_in, np.float32)
        elif field in ("gamma", "var"):
            val = np.ones(shape, np.float32)
        elif field == "beta" and layer in hswish_bn:
            val = np.full(shape, 3.0, np.float32)
        elif name == "head.fc.bias":
            val = np.full(shape, 3.0, np.float32)
        else:
            val = np.zeros(shape, np.float32)
        p[name] = val
    hidden = p["classifier.weight"].shape[1]
    p["classifier.weight"] = np.stack([np.full(hidden, -1.0 / hidden), np.full(hidden, 1.0 / hidden)]).astype(np.float32)
    g = g.with_params(p)
    mid = model_forward(g, np.full((1, 3, 224, 224), 0.5, np.float32))[0, :, 0, 0]
    t = (mid[1] - mid[0]) / 2.0
    p["classifier.bias"] = np.array([t, -t], np.float32)
    return g.with_params(p)


def make_toy_dataset(root, n_per_class, seed=0, size=16):
    """Two classes of near-uniform grey images: ``dark`` (< 0.4) and ``light`` (> 0.6)."""
    r = np.random.default_rng(seed)
    for cls, lo, hi in (("dark", 0.05, 0.4), ("light", 0.6, 0.95)):
        d = root / cls
        d.mkdir(parents=True, exist_ok=True)
        for k in range(n_per_class):
            level = r.uniform(lo, hi)
            img = np.clip(level + r.uniform(-0.02, 0.02, (1, 3, size, size)), 0, 1).astype(np.float32)
            write_ppm(d / f"{cls}_{k:03d}.ppm", img)
    return root


@pytest.fixture(scope="session")
def small_ca_graph():
    return build_model("small_ca", seed=42)
