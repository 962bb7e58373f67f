"""Exit criteria. Each test appends one PASS/FAIL line to the terminal summary.

Run alone with ``pytest tests/test_acceptance.py``.
"""

import functools
import hashlib
import time

import numpy as np
import pytest

from camnet import reference
from camnet.accounting import FLOPS_CONVENTION, PUBLISHED, delta_report, flops_convention_check, report
from camnet.attention import CAParams, SEParams, ca_forward, ca_gates, se_forward, se_gate
from camnet.cli import main
from camnet.data import PUBLISHED_TEST_IMAGES, scan_dataset, split_dataset
from camnet.harness import evaluate, run_bench
from camnet.model import build_model, model_forward
from camnet.nn_ops import ConvWeights, conv2d, directional_avg_pool, global_avg_pool, same_padding
from camnet.weights_io import load_weights, save_weights

from conftest import ACCEPTANCE_LINES, make_toy_dataset, mean_sign_weights, random_ca, random_se

VARIANTS = ("large", "small", "large_ca", "small_ca")


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                ACCEPTANCE_LINES.append(f"FAIL  #{number:<2} {title}: {type(exc).__name__}: {exc}".splitlines()[0])
                raise
            ACCEPTANCE_LINES.append(f"PASS  #{number:<2} {title}" + (f": {detail}" if detail else ""))
        return run
    return wrap


@pytest.fixture(scope="module")
def reports():
    return {v: report(build_model(v, seed=0)) for v in VARIANTS}


@criterion(1, "parameter counts reproduce the published totals")
def test_param_counts(capsys):
    got = {}
    for v in VARIANTS:
        assert main(["describe", v.replace("_", "-")]) == 0
        out = capsys.readouterr().out
        line = next(l for l in out.splitlines() if l.startswith("total params:"))
        got[v] = int(line.split(":")[1].replace(",", ""))
        target = PUBLISHED[v]["params"]
        assert abs(got[v] / target - 1) <= 0.01, f"{v}: {got[v]} vs {target}"
        assert got[v] == target, f"{v}: {got[v]} != {target} (exact match)"
    return ", ".join(f"{v}={n:,}" for v, n in got.items())


@criterion(2, "parameter reductions 22.0% / 23.4% (+-0.3)")
def test_reduction_percentages(reports):
    large = delta_report(reports["large"], reports["large_ca"]).params_reduction
    small = delta_report(reports["small"], reports["small_ca"]).params_reduction
    assert abs(large - 22.0) <= 0.3 and abs(small - 23.4) <= 0.3, (large, small)
    return f"large {large}%, small {small}%"


@criterion(3, "FLOPs: CA adds <=2% (large) / <=3% (small); absolute within 10%")
def test_flops(reports):
    conv = flops_convention_check(reports)
    best = min(("MACs", "2*MACs"), key=lambda k: max(abs(conv[v][k]) for v in VARIANTS))
    assert best == FLOPS_CONVENTION
    for v in VARIANTS:
        assert abs(conv[v][best]) <= 0.10, f"{v}: {conv[v][best]:+.3f}"
    dl = reports["large_ca"].total_macs / reports["large"].total_macs - 1
    ds = reports["small_ca"].total_macs / reports["small"].total_macs - 1
    assert 0 < dl <= 0.02 and 0 < ds <= 0.03, (dl, ds)
    gf = ", ".join(f"{v} {reports[v].gflops:.3f}G" for v in VARIANTS)
    return f"convention {best}; {gf}; CA delta large {dl:+.2%}, small {ds:+.2%}"


@criterion(4, "strip pooling averages to global pooling on 1000 tensors (1e-6)")
def test_pooling_identity():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        shape = tuple(int(v) for v in (rng.integers(1, 5), rng.integers(1, 9), rng.integers(1, 13), rng.integers(1, 13)))
        x = rng.uniform(-10, 10, shape).astype(np.float32)
        g = global_avg_pool(x).astype(np.float64)
        h = directional_avg_pool(x, "h").astype(np.float64).mean(axis=2, keepdims=True)
        w = directional_avg_pool(x, "w").astype(np.float64).mean(axis=3, keepdims=True)
        worst = max(worst, float(np.abs(h - g).max()), float(np.abs(w - g).max()))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-6, worst
    assert elapsed < 10, elapsed
    return f"max gap {worst:.2e}, {elapsed:.1f}s"


@criterion(5, "500 random convolutions match the direct oracle (1e-5 rel)")
def test_conv_oracle():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        c = int(rng.integers(1, 9))
        groups = int(rng.choice([1, c]))
        o = c if groups == c else int(rng.integers(1, 9))
        k = int(rng.integers(1, 6))
        s = int(rng.integers(1, 3))
        h, w = (int(v) for v in rng.integers(1, 13, size=2))
        x = rng.uniform(-1, 1, (1, c, h, w)).astype(np.float32)
        kern = rng.uniform(-1, 1, (o, c // groups, k, k)).astype(np.float32)
        bias = rng.uniform(-1, 1, o).astype(np.float32)
        got = conv2d(x, ConvWeights(kern, bias), stride=s, padding="same", groups=groups)
        want = reference.conv2d_naive(x, kern, bias, s, (*same_padding(h, k, s), *same_padding(w, k, s)), groups)
        assert got.shape == want.shape
        worst = max(worst, float(np.abs(got - want).max() / max(1.0, np.abs(want).max())))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-5, worst
    assert elapsed < 60, elapsed
    return f"max rel gap {worst:.2e}, {elapsed:.1f}s"


@criterion(6, "SE/CA: shape, gates in [0,1], |out|<=|in|, saturated gates exact identity")
def test_attention_contracts():
    rng = np.random.default_rng(6)
    for _ in range(200):
        c = int(rng.integers(1, 33))
        x = rng.uniform(-10, 10, (int(rng.integers(1, 3)), c, int(rng.integers(1, 15)), int(rng.integers(1, 15)))).astype(np.float32)
        se, ca = random_se(rng, c), random_ca(rng, c, m=max(8, c // 4))
        for gate in (se_gate(x, se), *ca_gates(x, ca)):
            assert 0.0 <= gate.min() and gate.max() <= 1.0
        for out in (se_forward(x, se), ca_forward(x, ca)):
            assert out.shape == x.shape
            assert np.all(np.abs(out) <= np.abs(x))
        s_open = SEParams(np.zeros_like(se.fc1_weight), np.zeros_like(se.fc1_bias), np.zeros_like(se.fc2_weight),
                          np.full_like(se.fc2_bias, 3.0))
        open_conv = lambda cw: ConvWeights(np.zeros_like(cw.kernel), np.full_like(cw.bias, 3.0))
        c_open = CAParams(ca.conv1, open_conv(ca.conv_h), open_conv(ca.conv_w))
        assert np.array_equal(se_forward(x, s_open), x)
        assert np.array_equal(ca_forward(x, c_open), x)
    return "200 inputs per block"


@criterion(7, "forward pass bitwise reproducible across runs, threads and save/load")
def test_end_to_end_determinism(tmp_path):
    x = np.random.default_rng(7).uniform(0, 1, (3, 3, 224, 224)).astype(np.float32)
    for v in VARIANTS:
        g = build_model(v, seed=2021)
        a = model_forward(g, x, threads=1)
        assert np.array_equal(a, model_forward(build_model(v, seed=2021), x, threads=1))
        assert np.array_equal(a, model_forward(g, x, threads=3))
        path = tmp_path / f"{v}.camn"
        save_weights(g, path)
        assert np.array_equal(a, model_forward(load_weights(path, build_model(v, seed=0)), x))
    return "4 variants"


@criterion(8, "small networks out-run large networks at batch 1 (host CPU)")
def test_throughput_ordering():
    ips = {}
    for v in VARIANTS:
        ips[v] = run_bench(build_model(v, seed=0), batch=1, warmup=2, iters=6).images_per_second
    assert min(ips["small"], ips["small_ca"]) > max(ips["large"], ips["large_ca"]), ips
    return ", ".join(f"{v} {r:.1f} img/s" for v, r in ips.items())


@criterion(9, "toy eval: 100% with constructed weights, chance with random weights")
def test_toy_eval(tmp_path):
    root = make_toy_dataset(tmp_path / "toy", 100, seed=9)
    classes, items = scan_dataset(root)
    oracle = evaluate(mean_sign_weights(build_model("small", num_classes=2)), items, classes)
    assert oracle.accuracy == 100.0
    chance = evaluate(build_model("small", num_classes=2, seed=9), items, classes)
    assert chance.total == 200 and abs(chance.accuracy - 50.0) <= 10.0
    return f"constructed {oracle.accuracy:.0f}%, random {chance.accuracy:.1f}% (n=200)"


@criterion(10, "7:1:2 split of 54,305 paths is stable; test split within 40 of 10,861")
def test_split_stability():
    paths = [f"plantvillage/img_{i:05d}.ppm" for i in range(54305)]
    s = split_dataset(paths, 2021)
    assert abs(len(s.test) - 10861) <= 40
    digest = hashlib.sha256(s.manifest().encode()).hexdigest()
    assert digest == "fee27f9611e70687721801eb47c85c779c6c863fe5d3d9497b155e69251c8751"
    assert split_dataset(list(reversed(paths)), 2021) == s
    return (f"{len(s.train)}/{len(s.validation)}/{len(s.test)}; "
            f"published test set: {PUBLISHED_TEST_IMAGES} images")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
