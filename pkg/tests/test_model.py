import numpy as np
import pytest

from camnet import reference
from camnet.errors import ConfigError, ShapeError
from camnet.model import (LARGE_CA_TABLE, SMALL_CA_TABLE, AttentionKind, BneckSpec, architecture,
                          block_param_shapes, bneck_forward, build_model, model_forward, shape_trace,
                          softmax_classify)
from camnet.nn_ops import BatchNormParams, ConvWeights, activation, batchnorm_infer, conv2d


def _attn_rows(arch, kind):
    return {i + 1 for i, b in enumerate(arch.blocks) if b.attention == kind}


def test_attention_codes_match_caption():
    assert [k.value for k in AttentionKind] == [0, 1, 2]


def test_large_ca_row4():
    b = architecture("large_ca").blocks[3]
    assert (b.kernel, b.exp_size, b.out_channels, b.attention) == (5, 72, 40, AttentionKind.CA)


def test_small_ca_row1():
    b = architecture("small_ca").blocks[0]
    assert (b.kernel, b.exp_size, b.out_channels, b.attention) == (3, 16, 16, AttentionKind.SE)


def test_large_ca_as_printed_attention_column():
    arch = architecture("large_ca", as_printed=True)
    assert _attn_rows(arch, AttentionKind.CA) == {4, 5, 6, 13, 14}
    assert _attn_rows(arch, AttentionKind.SE) == {11, 12, 15}
    assert len(arch.blocks) == 15


def test_large_ca_calibrated_attention_column():
    arch = architecture("large_ca")
    assert _attn_rows(arch, AttentionKind.CA) == {4, 5, 6, 13, 14, 15}
    assert _attn_rows(arch, AttentionKind.SE) == {11, 12}
    assert arch.blocks[14].out_channels == 160


def test_printed_tables_reproduced_row_by_row():
    for table, variant in ((LARGE_CA_TABLE, "large_ca"), (SMALL_CA_TABLE, "small_ca")):
        arch = architecture(variant, as_printed=True)
        assert [(b.kernel, b.exp_size, b.out_channels, int(b.attention)) for b in arch.blocks] == list(table)


def test_small_variants_row_counts():
    assert len(architecture("small_ca", as_printed=True).blocks) == 10
    assert len(architecture("small_ca").blocks) == 11
    assert architecture("small_ca").blocks[10] == architecture("small_ca").blocks[9]


def test_variant_differencing():
    for base, ca, rows in (("large", "large_ca", {4, 5, 6, 13, 14, 15}), ("small", "small_ca", set(range(4, 12)))):
        a, b = architecture(base).blocks, architecture(ca).blocks
        assert len(a) == len(b)
        diff = {i + 1 for i, (x, y) in enumerate(zip(a, b)) if x != y}
        assert diff == rows
        for i in diff:
            assert a[i - 1].attention == AttentionKind.SE and b[i - 1].attention == AttentionKind.CA
            assert (a[i - 1].kernel, a[i - 1].exp_size, a[i - 1].out_channels) == \
                (b[i - 1].kernel, b[i - 1].exp_size, b[i - 1].out_channels)


def test_five_by_five_rows_carry_ca():
    for i, (k, _, _, att) in enumerate(LARGE_CA_TABLE):
        if k == 5 and i != 14:
            assert att == 2
    assert all(att == 2 for k, _, _, att in SMALL_CA_TABLE if k == 5)


def test_bneck_spec_validation():
    with pytest.raises(ConfigError):
        BneckSpec(7, 16, 16)
    with pytest.raises(ConfigError):
        BneckSpec(3, 16, 16, stride=3)


def test_unknown_variant():
    with pytest.raises(ConfigError):
        build_model("medium")
    with pytest.raises(ConfigError):
        build_model("small", num_classes=1)


def _block_weights(rng, spec, cin, zero=False):
    w = {}
    for name, shape in block_param_shapes(spec, cin):
        field = name.rsplit(".", 1)[1]
        if field in ("gamma", "var"):
            w[name] = np.ones(shape, np.float32)
        elif field in ("beta", "mean"):
            w[name] = np.zeros(shape, np.float32)
        elif zero:
            w[name] = np.zeros(shape, np.float32)
        else:
            w[name] = rng.normal(0, 0.5, shape).astype(np.float32)
    return w


def test_bneck_zero_branch_is_pure_residual(rng):
    spec = BneckSpec(3, 8, 4, AttentionKind.SE, 1, "hard_swish")
    x = rng.normal(size=(1, 4, 6, 6)).astype(np.float32)
    assert np.array_equal(bneck_forward(x, spec, _block_weights(rng, spec, 4, zero=True)), x)


def test_bneck_stride2_halves(rng):
    spec = BneckSpec(5, 8, 6, AttentionKind.CA, 2, "relu")
    y = bneck_forward(rng.normal(size=(1, 4, 7, 10)).astype(np.float32), spec, _block_weights(rng, spec, 4))
    assert y.shape == (1, 6, 4, 5)


def test_bneck_matches_manual_composition(rng):
    spec = BneckSpec(3, 4, 2, AttentionKind.NONE, 1, "relu")
    w = _block_weights(rng, spec, 2)
    x = rng.normal(size=(1, 2, 6, 6)).astype(np.float32)
    bn = lambda p: BatchNormParams(w[f"{p}.gamma"], w[f"{p}.beta"], w[f"{p}.mean"], w[f"{p}.var"], 1e-3)
    y = activation(batchnorm_infer(conv2d(x, ConvWeights(w["expand.weight"]), padding=0), bn("expand_bn")), "relu")
    y = activation(batchnorm_infer(conv2d(y, ConvWeights(w["dw.weight"]), padding=1, groups=4), bn("dw_bn")), "relu")
    y = batchnorm_infer(conv2d(y, ConvWeights(w["project.weight"]), padding=0), bn("project_bn")) + x
    np.testing.assert_allclose(bneck_forward(x, spec, w), y, rtol=1e-6, atol=1e-6)


def test_bneck_channel_mismatch(rng):
    spec = BneckSpec(3, 8, 4)
    with pytest.raises(ShapeError):
        bneck_forward(np.ones((1, 3, 4, 4), np.float32), spec, _block_weights(rng, spec, 4))


@pytest.fixture(scope="module")
def image_batch():
    return np.random.default_rng(5).uniform(0, 1, (2, 3, 224, 224)).astype(np.float32)


@pytest.mark.parametrize("variant", ["large", "small", "large_ca", "small_ca"])
def test_forward_shape_and_finite(variant, image_batch):
    g = build_model(variant, seed=3)
    y = model_forward(g, image_batch[:1])
    assert y.shape == (1, 38, 1, 1)
    assert np.all(np.isfinite(y))


def test_forward_deterministic_and_batch_split(small_ca_graph, image_batch):
    a = model_forward(small_ca_graph, image_batch)
    b = model_forward(small_ca_graph, image_batch)
    assert np.array_equal(a, b)
    parts = np.concatenate([model_forward(small_ca_graph, image_batch[i:i + 1]) for i in range(2)])
    np.testing.assert_allclose(a, parts, rtol=0, atol=1e-6)


def test_forward_rejects_wrong_input(small_ca_graph):
    with pytest.raises(ShapeError):
        model_forward(small_ca_graph, np.zeros((1, 3, 100, 100), np.float32))
    with pytest.raises(ShapeError):
        model_forward(small_ca_graph, np.zeros((1, 1, 224, 224), np.float32))


@pytest.mark.parametrize("variant", ["large_ca", "small_ca"])
def test_spatial_trace(variant):
    trace = shape_trace(build_model(variant, seed=0))
    sizes = [s[2] for _, s in trace]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] == 7 and trace[-2][1][2:] == (7, 7)


def test_softmax_examples(rng):
    idx, p = softmax_classify([0.0, 0.0, 0.0])
    assert idx == 0 and np.allclose(p, 1 / 3, atol=1e-12)
    assert softmax_classify([1.0, 5.0, 2.0])[0] == 1
    z = rng.normal(0, 5, 38)
    idx, p = softmax_classify(z)
    np.testing.assert_allclose(p, reference.softmax_naive(list(z)), atol=1e-6)
    assert abs(p.sum() - 1) < 1e-6 and idx == int(np.argmax(z))
