"""``camnet`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 incompatible or unreadable weights, 4 image decode error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import accounting
from .data import PUBLISHED_TEST_IMAGES, load_image, read_labels, scan_dataset, split_dataset
from .errors import (ConfigError, CorruptionError, DecodeError, FormatError, IncompatibleWeightsError,
                     InputError)
from .harness import evaluate, run_bench
from .model import DEFAULT_CLASSES, build_model, model_forward, normalize_variant, softmax_classify
from .verify import run_verify, scoreboard
from .weights_io import load_weights, save_weights

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_WEIGHTS, EXIT_DECODE = 0, 1, 2, 3, 4
CLI_VARIANTS = ("large", "small", "large-ca", "small-ca")


def _graph(args):
    g = build_model(args.model, args.classes, seed=args.seed)
    if getattr(args, "weights", None):
        g = load_weights(args.weights, g)
    return g


def cmd_describe(args) -> int:
    variant = normalize_variant(args.variant or args.model)
    g = build_model(variant, args.classes, seed=0)
    rep = accounting.report(g)
    out = sys.stdout
    if args.format == "tsv":
        out.write(rep.tsv())
        return EXIT_OK
    out.write(f"# model {variant}, {args.classes} classes, input 1x3x224x224\n")
    out.write(f"# params convention: {accounting.PARAM_CONVENTION}\n")
    out.write(f"# FLOPs convention: {accounting.FLOPS_CONVENTION} (elementwise ops excluded)\n")
    out.write(rep.table() + "\n\n")
    out.write(f"total params: {rep.total_params:,}\n")
    out.write(f"total MACs: {rep.total_macs:,}\n")
    out.write(f"FLOPs (G): {rep.gflops:.3f}\n")
    out.write(f"container size: {rep.serialized_size_bytes:,} bytes (4 bytes/param + manifest)\n")
    target = accounting.PUBLISHED.get(variant) if args.classes == 38 else None
    if target:
        gap = rep.total_params - target["params"]
        out.write(f"published: params {target['params']:,} (gap {gap:+,}), FLOPs {target['gflops']} G, "
                  f"size {target['size_mb']} M (size format differs; compare reductions only)\n")
    base = args.baseline or accounting.BASELINE_OF.get(variant)
    if base:
        base = normalize_variant(base)
        brep = accounting.report(build_model(base, args.classes, seed=0))
        d = accounting.delta_report(brep, rep)
        out.write(f"delta vs {base}: params {-d.params_reduction:+.1f}%, size {-d.size_reduction:+.1f}%, "
                  f"FLOPs {d.flops_delta:+.1f}%\n")
    return EXIT_OK


def cmd_classify(args) -> int:
    g = _graph(args)
    x = load_image(args.image)
    _, probs = softmax_classify(model_forward(g, x))
    labels = read_labels(args.labels) if args.labels else []
    order = sorted(range(len(probs)), key=lambda i: (-probs[i], i))[:args.top_k]
    for i in order:
        name = labels[i] if i < len(labels) else f"class_{i}"
        print(f"{name}\t{probs[i]:.6f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    g = _graph(args)
    classes, items = scan_dataset(args.dataset)
    label_of = dict(items)
    split = split_dataset([p for p, _ in items], args.split_seed)
    chosen = [(p, label_of[p]) for p in split.get(args.split)]
    res = evaluate(g, chosen, classes, threads=args.threads)
    print(f"split: {args.split} ({len(chosen)} of {len(items)} images, seed {args.split_seed})")
    print(f"accuracy: {res.accuracy:.2f}% ({res.correct}/{res.total})")
    if args.report:
        out = Path(args.report)
        out.mkdir(parents=True, exist_ok=True)
        (out / "per_class.tsv").write_text(res.per_class_tsv(), encoding="utf-8")
        (out / "confusion.csv").write_text(res.confusion_csv(), encoding="utf-8")
        (out / "split.tsv").write_text(split.manifest(), encoding="utf-8")
        (out / "NOTES.txt").write_text(
            f"test split size here: {len(split.test)} of {len(items)}\n"
            f"published test-set size for the full 54,305-image set: {PUBLISHED_TEST_IMAGES}\n",
            encoding="utf-8")
        print(f"report written to {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    g = _graph(args)
    res = run_bench(g, batch=args.batch, warmup=args.warmup, iters=args.iters, threads=args.threads,
                    seed=args.seed)
    sys.stdout.write(res.lines())
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_verify(seed=args.seed, faults=args.inject_fault or ())
    sys.stdout.write(scoreboard(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_init_weights(args) -> int:
    g = build_model(args.model, args.classes, seed=args.seed)
    n = save_weights(g, args.out)
    print(f"wrote {n} bytes ({g.num_params():,} params) to {args.out}")
    return EXIT_OK


def _model_args(p, weights=True):
    p.add_argument("--model", default="small-ca", choices=CLI_VARIANTS)
    p.add_argument("--classes", type=int, default=DEFAULT_CLASSES)
    p.add_argument("--seed", type=int, default=0, help="weight initialisation seed")
    if weights:
        p.add_argument("--weights", help=".camn weight container (default: seeded random weights)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="camnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", help="per-layer params / MACs report")
    p.add_argument("variant", nargs="?", choices=CLI_VARIANTS)
    _model_args(p, weights=False)
    p.add_argument("--baseline", choices=CLI_VARIANTS, help="report deltas against this variant")
    p.add_argument("--format", choices=("table", "tsv"), default="table")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("classify", help="top-k classes for one PPM image")
    p.add_argument("image")
    _model_args(p)
    p.add_argument("--labels", help="one class name per line")
    p.add_argument("--top-k", type=int, default=5)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", help="accuracy over a dataset split")
    _model_args(p)
    p.add_argument("--dataset", required=True, help="root with one directory of .ppm files per class")
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report", help="directory for per-class, confusion and split files")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="forward-pass throughput in images per second")
    _model_args(p)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="run the invariant scoreboard")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", action="append", choices=("hard_sigmoid",), help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("init-weights", help="write seeded random weights to a .camn file")
    _model_args(p, weights=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init_weights)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (IncompatibleWeightsError, FormatError, CorruptionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WEIGHTS
    except DecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DECODE
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DECODE if args.command == "classify" else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
