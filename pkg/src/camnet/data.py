"""Image decoding, resizing, augmentation and dataset splitting.

Images enter as binary PPM (P6, maxval 255) and become (1, 3, h, w)
float32 tensors scaled to [0, 1]; no mean/std normalisation is applied.
A dataset root holds one sub-directory per class; class ids are the
alphabetical rank of the directory names.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DecodeError, InputError
from .rng import SplitMix64, derive_seed
from .tensor import as_tensor

IMAGE_SIZE = 224
DEFAULT_MAX_SHIFT = 0.1
DEFAULT_FLIP_PROB = 0.5
# Test-split size reported for the full 54,305-image PlantVillage set.
PUBLISHED_TEST_IMAGES = 10892


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, i, n = [], 0, len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise DecodeError("truncated PPM header")
        tokens.append(data[start:i])
    return tokens, i


def decode_ppm(data: bytes) -> np.ndarray:
    """Binary P6 PPM with maxval 255 to a (1, 3, h, w) tensor in [0, 1]."""
    if data[:2] != b"P6":
        raise DecodeError(f"not a binary PPM (magic {data[:2]!r}, expected b'P6')")
    tokens, end = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise DecodeError("non-numeric PPM header field") from exc
    if width < 1 or height < 1:
        raise DecodeError(f"invalid PPM size {width}x{height}")
    if maxval != 255:
        raise DecodeError(f"unsupported maxval {maxval}, only 255 is accepted")
    if end >= len(data) or not data[end:end + 1].isspace():
        raise DecodeError("missing whitespace after PPM header")
    raster = data[end + 1:]
    need = width * height * 3
    if len(raster) < need:
        raise DecodeError(f"truncated PPM raster: {len(raster)} of {need} bytes")
    pix = np.frombuffer(raster, dtype=np.uint8, count=need).reshape(height, width, 3)
    return (pix.transpose(2, 0, 1)[None].astype(np.float32) / np.float32(255.0)).copy()


def encode_ppm(x: np.ndarray) -> bytes:
    """(1, 3, h, w) tensor in [0, 1] to P6 bytes, rounding to nearest."""
    x = as_tensor(x)
    if x.shape[:2] != (1, 3):
        raise ValueError(f"expected a (1,3,h,w) image, got {x.shape}")
    h, w = x.shape[2:]
    pix = np.clip(np.rint(x[0].transpose(1, 2, 0) * 255.0), 0, 255).astype(np.uint8)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + pix.tobytes()


def read_ppm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_ppm(fh.read())


def write_ppm(path: str | os.PathLike, x: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_ppm(x))


def _source_index(out_size: int, in_size: int):
    scale = in_size / out_size
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, in_size - 1)
    return i0, i1, src - i0


def resize_bilinear(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel centres and edge clamping."""
    x = as_tensor(x)
    h, w = x.shape[2:]
    if (h, w) == (out_h, out_w):
        return x.copy()
    y0, y1, fy = _source_index(out_h, h)
    x0, x1, fx = _source_index(out_w, w)
    xd = x.astype(np.float64)
    fy = fy[:, None]
    top = xd[:, :, y0, :] * (1 - fy) + xd[:, :, y1, :] * fy
    out = top[:, :, :, x0] * (1 - fx) + top[:, :, :, x1] * fx
    return out.astype(np.float32)


def augment(x: np.ndarray, seed: int, max_shift: float = DEFAULT_MAX_SHIFT,
            flip_prob: float = DEFAULT_FLIP_PROB) -> np.ndarray:
    """Random integer translation with zero fill, then a random horizontal flip.

    Shifts are drawn uniformly from [-floor(max_shift * extent), +floor(...)]
    per axis. Three draws are always consumed (dy, dx, flip) so that the
    outcome depends only on ``seed`` and the parameters.
    """
    if not 0.0 <= max_shift <= 0.5:
        raise ValueError("max_shift must lie in [0, 0.5]")
    x = as_tensor(x)
    h, w = x.shape[2:]
    rng = SplitMix64(seed)
    my, mx = int(max_shift * h), int(max_shift * w)
    dy = rng.randbelow(2 * my + 1) - my
    dx = rng.randbelow(2 * mx + 1) - mx
    flip = rng.uniform() < flip_prob
    out = np.zeros_like(x)
    src_y = slice(max(0, -dy), h - max(0, dy))
    dst_y = slice(max(0, dy), h - max(0, -dy))
    src_x = slice(max(0, -dx), w - max(0, dx))
    dst_x = slice(max(0, dx), w - max(0, -dx))
    out[:, :, dst_y, dst_x] = x[:, :, src_y, src_x]
    if flip:
        out = np.ascontiguousarray(out[:, :, :, ::-1])
    return out


def load_image(path: str | os.PathLike, size: int = IMAGE_SIZE) -> np.ndarray:
    """Decode, resize to ``size`` x ``size`` and clamp to [0, 1]."""
    x = resize_bilinear(read_ppm(path), size, size)
    return np.clip(x, 0.0, 1.0)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]
    seed: int

    def get(self, name: str) -> tuple[str, ...]:
        key = {"train": "train", "val": "validation", "validation": "validation", "test": "test"}.get(name)
        if key is None:
            raise InputError(f"unknown split {name!r}; expected train, val or test")
        return getattr(self, key)

    def manifest(self) -> str:
        lines = [f"{p}\t{name}" for name, part in (("train", self.train), ("val", self.validation),
                                                     ("test", self.test)) for p in part]
        return "\n".join(lines) + ("\n" if lines else "")


def split_sizes(n: int) -> tuple[int, int, int]:
    """7:1:2 partition sizes with half-up rounding in integer arithmetic."""
    train = (7 * n + 5) // 10
    val = (n + 5) // 10
    return train, val, n - train - val


def _class_of(path: str) -> Optional[str]:
    parent = Path(path).parent.name
    return parent or None


def split_dataset(paths: Sequence[str], seed: int, stratify: Optional[bool] = None) -> DatasetSplit:
    """Deterministic 7:1:2 train/val/test split.

    Paths are sorted, then shuffled with a splitmix64 Fisher-Yates. With
    ``stratify`` (default: whenever every path has a parent directory and
    there are at least two of them) the 7:1:2 rule is applied per class
    directory, each class shuffled under its own derived seed.
    """
    if not paths:
        raise InputError("cannot split an empty path list")
    ordered = sorted(str(p) for p in paths)
    if len(set(ordered)) != len(ordered):
        raise InputError("duplicate paths in split input")
    classes = [_class_of(p) for p in ordered]
    if stratify is None:
        stratify = all(classes) and len(set(classes)) > 1
    groups: dict[str, list[str]] = {}
    if stratify:
        for p, c in zip(ordered, classes):
            groups.setdefault(c or "", []).append(p)
    else:
        groups[""] = ordered
    train, val, test = [], [], []
    for name in sorted(groups):
        items = groups[name]
        SplitMix64(derive_seed(seed, name) if stratify else seed).shuffle(items)
        a, b, _ = split_sizes(len(items))
        train += items[:a]
        val += items[a:a + b]
        test += items[a + b:]
    return DatasetSplit(tuple(train), tuple(val), tuple(test), seed)


def scan_dataset(root: str | os.PathLike) -> tuple[list[str], list[tuple[str, int]]]:
    """Class names (sorted) and ``(path, class id)`` for every ``*.ppm`` under ``root/<class>/``."""
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"dataset root {root} is not a directory")
    classes = sorted(d.name for d in root.iterdir() if d.is_dir())
    items = []
    for cid, name in enumerate(classes):
        for f in sorted((root / name).glob("*.ppm")):
            items.append((str(f), cid))
    return classes, items


def read_labels(path: str | os.PathLike) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\r\n") for line in fh if line.strip()]
