"""Evaluation and throughput measurement shared by the CLI and the tests."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from .data import load_image
from .errors import InputError
from .model import ModelGraph, model_forward, softmax_classify
from .rng import derive_seed, stream_uniform


@dataclass(frozen=True)
class BenchResult:
    model: str
    batch: int
    warmup: int
    iters: int
    threads: int
    images: int
    elapsed_s: float
    images_per_second: float
    latency_ms: float
    note: str = "host CPU, float32; not comparable to embedded-device figures"

    def lines(self) -> str:
        return "".join(f"{k}: {v}\n" for k, v in asdict(self).items())


def bench_input(batch: int, seed: int = 0, size: int = 224) -> np.ndarray:
    u = stream_uniform(derive_seed(seed, "bench-input"), batch * 3 * size * size)
    return u.astype(np.float32).reshape(batch, 3, size, size)


def run_bench(g: ModelGraph, batch: int = 1, warmup: int = 2, iters: int = 10, threads: int = 1,
              seed: int = 0) -> BenchResult:
    """Time ``iters`` forward passes on a fixed random batch after ``warmup`` untimed ones.

    Only the forward pass is inside the clock. Per-iteration times are
    summed with ``math.fsum``.
    """
    if iters < 1 or batch < 1:
        raise InputError("iters and batch must be at least 1")
    x = bench_input(batch, seed)
    for _ in range(warmup):
        model_forward(g, x, threads=threads)
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        model_forward(g, x, threads=threads)
        times.append(time.perf_counter() - t0)
    elapsed = math.fsum(times)
    images = batch * iters
    ips = images / elapsed
    return BenchResult(g.variant, batch, warmup, iters, threads, images, elapsed, ips,
                       1000.0 * elapsed / images)


@dataclass
class EvalResult:
    class_names: list[str]
    confusion: np.ndarray  # rows: true class, cols: predicted

    @property
    def correct(self) -> int:
        return int(np.trace(self.confusion))

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.total

    def per_class_tsv(self) -> str:
        rows = [f"{name}\t{int(self.confusion[i, i])}\t{int(self.confusion[i].sum())}"
                for i, name in enumerate(self.class_names)]
        return "\n".join(rows) + "\n"

    def confusion_csv(self) -> str:
        head = "true\\pred," + ",".join(self.class_names)
        rows = [f"{name}," + ",".join(str(int(v)) for v in self.confusion[i])
                for i, name in enumerate(self.class_names)]
        return "\n".join([head] + rows) + "\n"


def predict_path(g: ModelGraph, path: str) -> int:
    logits = model_forward(g, load_image(path))
    return softmax_classify(logits)[0]


def evaluate(g: ModelGraph, items: Sequence[tuple[str, int]], class_names: Sequence[str],
             threads: int = 1) -> EvalResult:
    """Confusion matrix over ``(path, class id)`` items.

    Images are independent and counts are integers, so the result does not
    depend on ordering or on ``threads``.
    """
    if not items:
        raise InputError("nothing to evaluate: the split is empty")
    k = max(len(class_names), g.num_classes)
    names = list(class_names) + [f"class_{i}" for i in range(len(class_names), k)]
    paths = [p for p, _ in items]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            preds = list(pool.map(lambda p: predict_path(g, p), paths))
    else:
        preds = [predict_path(g, p) for p in paths]
    conf = np.zeros((k, k), dtype=np.int64)
    for (_, truth), pred in zip(items, preds):
        conf[truth, pred] += 1
    return EvalResult(names, conf)
