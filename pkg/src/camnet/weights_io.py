"""The ``.camn`` weight container and seeded initialisation.

Layout (all integers little-endian)::

    b"CAMN"                      magic
    u16                          format version (1)
    u32                          manifest length in bytes
    manifest                     UTF-8, one line per tensor:
                                 name \\t f32 \\t d0,d1,d2,d3 \\t byte_offset
    payload                      raw little-endian float32 data

Shapes are right-padded with 1s to four dimensions. ``byte_offset`` is
relative to the start of the payload.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CorruptionError, FormatError, IncompatibleWeightsError
from .rng import derive_seed, truncated_normal

MAGIC = b"CAMN"
VERSION = 1
INIT_STD = 0.09
_HEADER = struct.Struct("<4sHI")
_F32LE = np.dtype("<f4")


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    dtype: str
    dims: tuple[int, int, int, int]
    offset: int

    @property
    def count(self) -> int:
        return int(np.prod(self.dims))


def _pad4(shape: tuple[int, ...]) -> tuple[int, int, int, int]:
    if len(shape) > 4:
        raise ValueError(f"tensor rank {len(shape)} exceeds 4")
    return tuple(shape) + (1,) * (4 - len(shape))


def _kind(name: str) -> str:
    field = name.rsplit(".", 1)[-1]
    if field == "weight":
        return "kernel"
    return field  # bias, gamma, beta, mean, var


def init_tensor(name: str, shape: tuple[int, ...], seed: int) -> np.ndarray:
    kind = _kind(name)
    if kind == "kernel":
        n = int(np.prod(shape))
        return truncated_normal(derive_seed(seed, name), n, INIT_STD).astype(np.float32).reshape(shape)
    if kind in ("gamma", "var"):
        return np.ones(shape, dtype=np.float32)
    return np.zeros(shape, dtype=np.float32)


def init_random(g, seed: int):
    """Fill every tensor of ``g`` from ``seed``.

    Kernels are truncated normal (std 0.09, cut at two std) drawn from a
    stream keyed by ``(seed, tensor name)``; biases, BN beta and running
    means are 0; BN gamma and running variances are 1.
    """
    params = {name: init_tensor(name, shape, seed) for name, shape in g.expected_shapes()}
    return g.with_params(params)


def build_manifest(tensors: Iterable[tuple[str, tuple[int, ...]]]) -> tuple[bytes, list[ManifestEntry]]:
    entries, offset, seen = [], 0, set()
    for name, shape in tensors:
        if "\t" in name or "\n" in name or not name:
            raise ValueError(f"invalid tensor name {name!r}")
        if name in seen:
            raise ValueError(f"duplicate tensor name {name!r}")
        seen.add(name)
        e = ManifestEntry(name, "f32", _pad4(tuple(shape)), offset)
        entries.append(e)
        offset += 4 * e.count
    text = "".join(f"{e.name}\tf32\t{','.join(map(str, e.dims))}\t{e.offset}\n" for e in entries)
    return text.encode("utf-8"), entries


def serialize(g) -> bytes:
    manifest, _ = build_manifest((n, a.shape) for n, a in g.params.items())
    payload = b"".join(np.ascontiguousarray(a, dtype=_F32LE).tobytes() for a in g.params.values())
    return _HEADER.pack(MAGIC, VERSION, len(manifest)) + manifest + payload


def container_size(g) -> int:
    """Byte size :func:`save_weights` would write, computed without serialising."""
    manifest, entries = build_manifest((n, a.shape) for n, a in g.params.items())
    return _HEADER.size + len(manifest) + 4 * sum(e.count for e in entries)


def save_weights(g, path: str | os.PathLike) -> int:
    data = serialize(g)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def parse_container(data: bytes) -> tuple[list[ManifestEntry], memoryview]:
    if len(data) < _HEADER.size:
        raise FormatError("file too short for a CAMN header")
    magic, version, mlen = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    start = _HEADER.size + mlen
    if len(data) < start:
        raise CorruptionError("manifest truncated")
    try:
        text = bytes(data[_HEADER.size:start]).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptionError("manifest is not valid UTF-8") from exc
    entries, expected_offset = [], 0
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split("\t")
        if len(parts) != 4:
            raise CorruptionError(f"manifest line {lineno} has {len(parts)} fields")
        name, dtype, dims, offset = parts
        if dtype != "f32":
            raise FormatError(f"tensor {name!r} has unsupported dtype {dtype!r}")
        try:
            d = tuple(int(v) for v in dims.split(","))
            off = int(offset)
        except ValueError as exc:
            raise CorruptionError(f"manifest line {lineno} is malformed") from exc
        if len(d) != 4 or min(d) < 1:
            raise CorruptionError(f"tensor {name!r} has invalid dims {dims}")
        if off != expected_offset:
            raise CorruptionError(f"tensor {name!r} offset {off} != expected {expected_offset}")
        e = ManifestEntry(name, dtype, d, off)
        entries.append(e)
        expected_offset += 4 * e.count
    payload = memoryview(data)[start:]
    if len(payload) != expected_offset:
        raise CorruptionError(f"payload is {len(payload)} bytes, manifest describes {expected_offset}")
    return entries, payload


def load_weights(path: str | os.PathLike, g, strict: bool = True):
    """Return a copy of ``g`` carrying the tensors stored at ``path``.

    Nothing is modified unless every tensor validates.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    return load_bytes(data, g, strict=strict)


def load_bytes(data: bytes, g, strict: bool = True):
    entries, payload = parse_container(data)
    stored = {e.name: e for e in entries}
    if len(stored) != len(entries):
        raise CorruptionError("duplicate tensor names in manifest")
    expected = g.expected_shapes()
    names = {n for n, _ in expected}
    if strict:
        missing = [n for n, _ in expected if n not in stored]
        extra = [e.name for e in entries if e.name not in names]
        if missing or extra:
            raise IncompatibleWeightsError(
                f"container does not match {g.variant}: missing {missing[:5]}, unexpected {extra[:5]}"
            )
    params = dict(g.params)
    for name, shape in expected:
        e = stored.get(name)
        if e is None:
            continue
        if e.dims != _pad4(shape):
            raise IncompatibleWeightsError(f"tensor {name!r}: stored dims {e.dims} != graph shape {shape}")
        arr = np.frombuffer(payload, dtype=_F32LE, count=e.count, offset=e.offset)
        params[name] = arr.astype(np.float32).reshape(shape)
    return g.with_params(params)
