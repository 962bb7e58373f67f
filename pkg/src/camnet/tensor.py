"""Dense rank-4 float32 tensors in (n, c, h, w) layout.

Tensors are plain C-contiguous ``numpy.float32`` arrays; this module supplies
the validation and the few structural primitives the layers need. Every
function returns a freshly allocated array and never writes to its inputs.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import ShapeError, SizeError

AXES = {"n": 0, "c": 1, "h": 2, "w": 3}
_U64_MAX = (1 << 64) - 1


class Shape(NamedTuple):
    n: int
    c: int
    h: int
    w: int

    @property
    def numel(self) -> int:
        return self.n * self.c * self.h * self.w

    def validate(self) -> "Shape":
        if any(int(d) < 1 for d in self):
            raise ShapeError(f"all extents must be positive, got {tuple(self)}")
        if self.numel > _U64_MAX:
            raise SizeError(f"element count of {tuple(self)} overflows 64 bits")
        return self


def as_tensor(x) -> np.ndarray:
    """Coerce to a contiguous float32 rank-4 array, raising on bad rank."""
    arr = np.ascontiguousarray(x, dtype=np.float32)
    if arr.ndim != 4:
        raise ShapeError(f"expected a rank-4 (n,c,h,w) tensor, got rank {arr.ndim}")
    if 0 in arr.shape:
        raise ShapeError(f"empty extent in shape {arr.shape}")
    return arr


def shape_of(x: np.ndarray) -> Shape:
    return Shape(*x.shape)


def tensor_full(shape, value: float) -> np.ndarray:
    shape = Shape(*(int(d) for d in shape)).validate()
    return np.full(tuple(shape), value, dtype=np.float32)


def _axis(axis: str) -> int:
    if axis not in ("c", "h", "w"):
        raise ShapeError(f"axis must be one of c, h, w; got {axis!r}")
    return AXES[axis]


def broadcast_mul(x: np.ndarray, a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """``x * a * b`` with ``a`` of shape (n,c,h,1) or (n,c,1,1) and ``b`` of (n,c,1,w).

    ``b=None`` stands for an all-ones gate. The two products are evaluated
    left to right, so ``x * 1 * 1`` reproduces ``x`` bit for bit.
    """
    x = as_tensor(x)
    n, c, h, w = x.shape
    a = as_tensor(a)
    if a.shape not in ((n, c, h, 1), (n, c, 1, 1)):
        raise ShapeError(f"gate a has shape {a.shape}, expected ({n},{c},{h},1) or ({n},{c},1,1)")
    out = x * a
    if b is not None:
        b = as_tensor(b)
        if b.shape != (n, c, 1, w):
            raise ShapeError(f"gate b has shape {b.shape}, expected ({n},{c},1,{w})")
        out = out * b
    return out


def concat_axis(parts: Sequence[np.ndarray], axis: str) -> np.ndarray:
    if not parts:
        raise ShapeError("concat_axis needs at least one part")
    ax = _axis(axis)
    parts = [as_tensor(p) for p in parts]
    ref = parts[0].shape
    for p in parts[1:]:
        if any(p.shape[d] != ref[d] for d in range(4) if d != ax):
            raise ShapeError(f"cannot concatenate {p.shape} with {ref} along {axis}")
    return np.concatenate(parts, axis=ax)


def split_axis(x: np.ndarray, axis: str, sizes: Sequence[int]) -> list[np.ndarray]:
    ax = _axis(axis)
    x = as_tensor(x)
    if any(int(s) < 1 for s in sizes) or sum(sizes) != x.shape[ax]:
        raise ShapeError(f"sizes {list(sizes)} do not partition extent {x.shape[ax]} on {axis}")
    bounds = np.cumsum(sizes)[:-1]
    return [np.ascontiguousarray(p) for p in np.split(x, bounds, axis=ax)]
