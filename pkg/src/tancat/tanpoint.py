"""Iterated tangent points over a chart, stored blockwise.

A point of the n-fold tangent of a dim-d chart keeps one R^d block per
subset of the n tangent levels, indexed by bitmask exactly like tower
coefficients: ``blocks[0]`` is the underlying point, ``blocks[1 << (j-1)]``
the level-j velocity, and so on.  Level 1 is the innermost tangent;
applying the tangent functor again adds the next, outermost, level.

The structure transformations of the tangent functor act on these
blocks by index bookkeeping:

* ``project``     -- drop one level (outermost level = bundle projection,
                     level 1 = tangent of the projection below)
* ``zero_lift``   -- the zero section into fresh outermost levels
* ``add_fiber``   -- fiberwise addition over a shared projection
* ``swap_levels`` -- the canonical flip of two adjacent levels
* ``vertical_lift``      -- the vertical lift doubling one level
* ``vertical_lift_pair`` -- its two-argument extension
* ``scale_level`` -- fiberwise scalar multiplication of one level

All functions return fresh points; blocks arrays are treated as
read-only.  Trailing axes of ``blocks`` are a broadcast batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, FiberMismatchError, StructureError
from .tower import MAX_ORDER, Tower
from .domain import SmoothMap

DEFAULT_MATCH_TOL = 1e-9


def residual(a, b) -> float:
    """Relative mismatch with an absolute floor near zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 and b.size == 0:
        return 0.0
    num = float(np.max(np.abs(a - b)))
    den = 1.0 + max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return num / den


@dataclass(frozen=True)
class TanPoint:
    order: int
    blocks: np.ndarray  # (2**order, dim, *batch)

    def __post_init__(self):
        arr = np.asarray(self.blocks, dtype=float)
        if arr.ndim < 2 or arr.shape[0] != (1 << self.order):
            raise ValueError(f"blocks must have shape (2**{self.order}, dim, ...), "
                             f"got {arr.shape}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "blocks", arr)

    @property
    def dim(self) -> int:
        return self.blocks.shape[1]

    @property
    def batch_shape(self) -> tuple:
        return self.blocks.shape[2:]

    @property
    def base(self) -> np.ndarray:
        return self.blocks[0]

    def block(self, levels: Iterable[int] | int) -> np.ndarray:
        """Block for a set of levels (or a raw bitmask)."""
        return self.blocks[_as_mask(levels)]

    @classmethod
    def from_base(cls, points: np.ndarray, order: int = 0) -> "TanPoint":
        points = np.asarray(points, dtype=float)
        arr = np.zeros((1 << order,) + points.shape)
        arr[0] = points
        return cls(order, arr)

    @classmethod
    def from_towers(cls, towers: Sequence[Tower], order: int | None = None,
                    batch_shape: tuple = ()) -> "TanPoint":
        if not towers:
            if order is None:
                raise ValueError("order is required for dimension-0 points")
            return cls(order, np.zeros((1 << order, 0) + tuple(batch_shape)))
        order = towers[0].order if order is None else order
        shape = np.broadcast_shapes(*[t.coeffs.shape for t in towers])
        cols = [np.broadcast_to(t.coeffs, shape) for t in towers]
        return cls(order, np.stack(cols, axis=1))

    def to_towers(self) -> list[Tower]:
        return [Tower(self.order, self.blocks[:, j]) for j in range(self.dim)]


def _as_mask(levels: Iterable[int] | int) -> int:
    if isinstance(levels, (int, np.integer)):
        return 1 << (int(levels) - 1)
    mask = 0
    for l in levels:
        mask |= 1 << (int(l) - 1)
    return mask


def _level_bit(order: int, level: int) -> int:
    if not 1 <= level <= order:
        raise ValueError(f"level {level} out of range for order {order}")
    return 1 << (level - 1)


def apply_tangent(f: SmoothMap, p: TanPoint, check_domain: bool = True) -> TanPoint:
    """Evaluate the order-n tangent of ``f`` at ``p`` blockwise."""
    if check_domain and not np.all(f.dom.contains(p.base)):
        raise DomainError(f"base point outside the domain of {f.name or 'map'}")
    if p.dim != f.dom.dim:
        raise ValueError(f"point dim {p.dim} does not match domain dim {f.dom.dim}")
    outs = f.body.evaluate(p.to_towers(), order=p.order,
                           batch_shape=p.batch_shape)
    return TanPoint.from_towers(outs, order=p.order, batch_shape=p.batch_shape)


def project(p: TanPoint, level: int | None = None) -> TanPoint:
    """Forget one tangent level; remaining levels close ranks."""
    level = p.order if level is None else level
    bit = _level_bit(p.order, level)
    out = np.empty((1 << (p.order - 1),) + p.blocks.shape[1:])
    for m in range(1 << p.order):
        if m & bit:
            continue
        new = (m & (bit - 1)) | ((m >> level) << (level - 1))
        out[new] = p.blocks[m]
    return TanPoint(p.order - 1, out)


def zero_lift(p: TanPoint, levels: int = 1) -> TanPoint:
    """Zero section into ``levels`` fresh outermost tangent levels."""
    order = p.order + levels
    if order > MAX_ORDER:
        raise ValueError(f"order {order} exceeds MAX_ORDER={MAX_ORDER}")
    out = np.zeros((1 << order,) + p.blocks.shape[1:])
    out[: 1 << p.order] = p.blocks
    return TanPoint(order, out)


def _fiber_split(order: int, level: int) -> np.ndarray:
    bit = _level_bit(order, level)
    return (np.arange(1 << order) & bit) != 0


def add_fiber(p: TanPoint, q: TanPoint, level: int | None = None,
              tol: float = DEFAULT_MATCH_TOL) -> TanPoint:
    return _fiber_combine(p, q, +1.0, level, tol)


def sub_fiber(p: TanPoint, q: TanPoint, level: int | None = None,
              tol: float = DEFAULT_MATCH_TOL) -> TanPoint:
    return _fiber_combine(p, q, -1.0, level, tol)


def _fiber_combine(p, q, sign, level, tol):
    if p.order != q.order:
        raise ValueError(f"order mismatch: {p.order} vs {q.order}")
    if p.order == 0:
        raise ValueError("order-0 points have no fiber to combine")
    level = p.order if level is None else level
    sel = _fiber_split(p.order, level)
    pb, qb = np.broadcast_arrays(p.blocks, q.blocks)
    mismatch = residual(pb[~sel], qb[~sel])
    if mismatch > tol:
        raise FiberMismatchError(
            f"shared blocks differ by {mismatch:.3e} (tol {tol:.1e}) at level "
            f"{level}")
    out = pb.copy()
    out[sel] = pb[sel] + sign * qb[sel]
    return TanPoint(p.order, out)


def swap_levels(p: TanPoint, level: int) -> TanPoint:
    """Exchange tangent levels ``level`` and ``level + 1``."""
    lo = _level_bit(p.order, level)
    hi = _level_bit(p.order, level + 1)
    out = np.empty_like(p.blocks)
    for m in range(1 << p.order):
        swapped = m & ~(lo | hi)
        if m & lo:
            swapped |= hi
        if m & hi:
            swapped |= lo
        out[m] = p.blocks[swapped]
    return TanPoint(p.order, out)


def vertical_lift(p: TanPoint, level: int | None = None) -> TanPoint:
    """Vertical lift: double one tangent level into two.

    Blocks containing the level move to blocks containing both copies;
    the mixed new blocks vanish.  With ``level = order = 1`` this is the
    classical ``(u, u1) -> (u, 0, 0, u1)``.
    """
    level = p.order if level is None else level
    bit = _level_bit(p.order, level)
    order = p.order + 1
    if order > MAX_ORDER:
        raise ValueError(f"order {order} exceeds MAX_ORDER={MAX_ORDER}")
    out = np.zeros((1 << order,) + p.blocks.shape[1:])
    for m in range(1 << p.order):
        new = m & (bit - 1)
        if m & bit:
            new |= 0b11 << (level - 1)
        new |= (m >> level) << (level + 1)
        out[new] = p.blocks[m]
    return TanPoint(order, out)


def vertical_lift_pair(p: TanPoint, q: TanPoint,
                       tol: float = DEFAULT_MATCH_TOL) -> TanPoint:
    """Two-argument vertical lift ``(u, u1, v1) -> (u, u1, 0, v1)``.

    ``p`` and ``q`` must agree on every block not containing their
    outermost level.
    """
    if p.order != q.order or p.order == 0:
        raise ValueError("arguments must share an order >= 1")
    half = 1 << (p.order - 1)
    pb, qb = np.broadcast_arrays(p.blocks, q.blocks)
    mismatch = residual(pb[:half], qb[:half])
    if mismatch > tol:
        raise FiberMismatchError(
            f"shared blocks differ by {mismatch:.3e} (tol {tol:.1e})")
    order = p.order + 1
    if order > MAX_ORDER:
        raise ValueError(f"order {order} exceeds MAX_ORDER={MAX_ORDER}")
    out = np.zeros((1 << order,) + pb.shape[1:])
    out[: 1 << p.order] = pb
    out[(1 << p.order) + half:] = qb[half:]
    return TanPoint(order, out)


def vertical_pair_parts(xi: TanPoint) -> tuple[TanPoint, TanPoint]:
    """Left inverse of :func:`vertical_lift_pair`."""
    if xi.order < 2:
        raise ValueError("need order >= 2")
    half = 1 << (xi.order - 2)
    top = 1 << (xi.order - 1)
    p = TanPoint(xi.order - 1, xi.blocks[:top])
    q_arr = np.concatenate([xi.blocks[:half], xi.blocks[top + half:]], axis=0)
    return p, TanPoint(xi.order - 1, q_arr)


def scale_level(p: TanPoint, factor, level: int | None = None) -> TanPoint:
    """Multiply the fiber blocks of one level by a scalar (or batch)."""
    if p.order == 0:
        raise ValueError("order-0 points have no fiber to scale")
    level = p.order if level is None else level
    sel = _fiber_split(p.order, level)
    out = np.array(p.blocks)
    factor = np.asarray(factor, dtype=float)
    out[sel] = out[sel] * factor  # batch axes broadcast from the right
    return TanPoint(p.order, out)


def fiber_component(p: TanPoint) -> np.ndarray:
    """The fiber of a tangent of the scalar line (dim 1, order 1)."""
    if p.dim != 1 or p.order != 1:
        raise ValueError(f"expected dim 1 order 1, got dim {p.dim} order {p.order}")
    return p.blocks[1, 0]


def partial_tangent(f: SmoothMap, slot: int, p: TanPoint,
                    check_domain: bool = True) -> TanPoint:
    """Tangent in one factor of a declared product domain.

    ``p`` is an order-1 point of the product chart; the fiber of the
    other factor is zeroed before applying the tangent of ``f``.
    """
    if f.dom.split is None:
        raise StructureError(f"domain of {f.name or 'map'} has no declared "
                             "product split")
    if slot not in (1, 2):
        raise ValueError("slot must be 1 or 2")
    if p.order != 1:
        raise ValueError("partial tangents take order-1 points")
    d1, d2 = f.dom.split
    arr = np.array(p.blocks)
    if slot == 1:
        arr[1, d1:] = 0.0
    else:
        arr[1, :d1] = 0.0
    return apply_tangent(f, TanPoint(1, arr), check_domain=check_domain)


def collapse_inner(p: TanPoint) -> TanPoint:
    """View level 1 as chart coordinates: order n, dim d becomes order
    n-1, dim 2d, with the remaining levels renumbered down."""
    if p.order == 0:
        raise ValueError("order-0 points have no level to collapse")
    out_order = p.order - 1
    arr = np.empty((1 << out_order, 2 * p.dim) + p.batch_shape)
    for m in range(1 << out_order):
        arr[m, : p.dim] = p.blocks[m << 1]
        arr[m, p.dim:] = p.blocks[(m << 1) | 1]
    return TanPoint(out_order, arr)


def expand_inner(p: TanPoint) -> TanPoint:
    """Inverse of :func:`collapse_inner`; dim must be even."""
    if p.dim % 2:
        raise ValueError("dim must be even to expand")
    d = p.dim // 2
    arr = np.empty((1 << (p.order + 1), d) + p.batch_shape)
    for m in range(1 << p.order):
        arr[m << 1] = p.blocks[m, :d]
        arr[(m << 1) | 1] = p.blocks[m, d:]
    return TanPoint(p.order + 1, arr)


def as_vector(p: TanPoint) -> np.ndarray:
    """Flatten all blocks into one chart vector of length dim * 2**order."""
    return p.blocks.reshape((-1,) + p.batch_shape)


def from_vector(vec: np.ndarray, dim: int, order: int) -> TanPoint:
    vec = np.asarray(vec, dtype=float)
    if dim and vec.shape[0] != dim << order:
        raise ValueError(f"vector length {vec.shape[0]} is not dim*2**order")
    return TanPoint(order, vec.reshape((1 << order, dim) + vec.shape[1:]))
