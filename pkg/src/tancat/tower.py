"""Truncated nilpotent scalar towers.

A tower of order ``n`` is an element of ``R[e1,...,en]/(e1^2,...,en^2)``:
one real coefficient per subset of the ``n`` nilpotent generators.
Arithmetic on towers is forward-mode jet arithmetic; running a smooth
program on towers of order ``n`` computes the n-fold tangent lift of the
program, one generator per tangent level.

Coefficients are indexed by bitmask.  Bit ``i-1`` of the mask means
generator ``e_i`` is present, so ``coeffs[0]`` is the real part and
``coeffs[-1]`` the coefficient of ``e1*...*en``.  The first axis always
has length ``2**order``; trailing axes, if present, are a broadcast
batch of independent towers.

Instances are immutable (the coefficient array is marked read-only);
every operation returns a fresh tower, so values can be shared freely
between threads.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError

MAX_ORDER = 4

_FACTORIAL = (1.0, 1.0, 2.0, 6.0, 24.0)


def _disjoint_pairs(order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index tables for subset convolution at the given order.

    Returns ``(left, right, starts)`` where ``left``/``right`` list every
    pair of disjoint masks and ``starts`` marks, for each result mask,
    the first position of its group.  Pairs are sorted by (result mask,
    left mask); the sort keeps the summation order of the masks without
    the top generator identical to the order used one level down, which
    makes dropping the outermost level bit-exact.
    """
    pairs = []
    for left in range(1 << order):
        for right in range(1 << order):
            if left & right == 0:
                pairs.append((left | right, left, right))
    pairs.sort()
    out = np.array(pairs, dtype=np.intp)
    starts = np.searchsorted(out[:, 0], np.arange(1 << order))
    return out[:, 1].copy(), out[:, 2].copy(), starts.astype(np.intp)


_MUL_TABLES = {n: _disjoint_pairs(n) for n in range(MAX_ORDER + 1)}


def _align(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # batch axes trail, so pad the shorter shape with singleton axes
    if x.ndim < y.ndim:
        x = x.reshape(x.shape + (1,) * (y.ndim - x.ndim))
    elif y.ndim < x.ndim:
        y = y.reshape(y.shape + (1,) * (x.ndim - y.ndim))
    return x, y


class Tower:
    """One element of the order-n nilpotent tower ring."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs) -> None:
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"order must lie in 0..{MAX_ORDER}, got {order}")
        arr = np.array(coeffs, dtype=np.float64)
        if arr.ndim == 0 or arr.shape[0] != (1 << order):
            raise ValueError(
                f"coefficient axis must have length {1 << order} for order {order}, "
                f"got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Tower instances are immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def _raw(cls, order: int, arr: np.ndarray) -> "Tower":
        self = object.__new__(cls)
        arr.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", arr)
        return self

    @classmethod
    def constant(cls, value, order: int = 0) -> "Tower":
        """Embed a real (or a batch of reals) as a tower of the given order."""
        base = np.asarray(value, dtype=np.float64)
        arr = np.zeros((1 << order,) + base.shape)
        arr[0] = base
        return cls._raw(order, arr)

    @classmethod
    def generator(cls, order: int, index: int, batch_shape: tuple = ()) -> "Tower":
        """The nilpotent generator ``e_index`` (1-based) at the given order."""
        if not 1 <= index <= order:
            raise ValueError(f"generator index {index} out of range for order {order}")
        arr = np.zeros((1 << order,) + batch_shape)
        arr[1 << (index - 1)] = 1.0
        return cls._raw(order, arr)

    # -- views --------------------------------------------------------

    @property
    def real(self) -> np.ndarray:
        """The coefficient of the empty subset."""
        return self.coeffs[0]

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[1:]

    def block(self, mask: int) -> np.ndarray:
        return self.coeffs[mask]

    def __repr__(self) -> str:
        return f"Tower(order={self.order}, coeffs={self.coeffs!r})"

    # -- ring operations ----------------------------------------------

    def _coerce(self, other) -> "Tower | None":
        if isinstance(other, Tower):
            if other.order != self.order:
                raise ValueError(
                    f"tower order mismatch: {self.order} vs {other.order}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer, np.ndarray)):
            return Tower.constant(other, self.order)
        return None

    def __add__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        a, b = _align(self.coeffs, rhs.coeffs)
        return Tower._raw(self.order, a + b)

    __radd__ = __add__

    def __sub__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        a, b = _align(self.coeffs, rhs.coeffs)
        return Tower._raw(self.order, a - b)

    def __rsub__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        a, b = _align(rhs.coeffs, self.coeffs)
        return Tower._raw(self.order, a - b)

    def __neg__(self):
        return Tower._raw(self.order, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Tower):
            return tower_mul(self, other)
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Tower._raw(self.order, self.coeffs * float(other))
        if isinstance(other, np.ndarray):
            # a per-sample scale: multiply every block elementwise
            a, b = _align(self.coeffs, np.asarray(other, dtype=np.float64)[None])
            return Tower._raw(self.order, a * b)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tower):
            return tower_mul(self, reciprocal(other))
        if isinstance(other, (int, float, np.floating, np.integer)):
            if float(other) == 0.0:
                raise DomainError("division by the scalar zero")
            return Tower._raw(self.order, self.coeffs / float(other))
        if isinstance(other, np.ndarray):
            return self * _scale_array_inverse(other)
        return NotImplemented

    def __rtruediv__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return tower_mul(rhs, reciprocal(self))

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)):
            return pow_int(self, int(exponent))
        return NotImplemented


def _scale_array_inverse(arr: np.ndarray) -> np.ndarray:
    if np.any(arr == 0.0):
        raise DomainError("division by an array containing zero")
    return 1.0 / arr


def tower_mul(a: Tower, b: Tower) -> Tower:
    """Product in the tower ring: subset convolution over disjoint masks."""
    if a.order != b.order:
        raise ValueError(f"tower order mismatch: {a.order} vs {b.order}")
    left, right, starts = _MUL_TABLES[a.order]
    ca, cb = _align(a.coeffs, b.coeffs)
    prod = ca[left] * cb[right]
    return Tower._raw(a.order, np.add.reduceat(prod, starts, axis=0))


def extend(a: Tower, levels: int = 1) -> Tower:
    """Zero-pad a tower with `levels` fresh outermost generators."""
    if levels < 0:
        raise ValueError("levels must be nonnegative")
    order = a.order + levels
    if order > MAX_ORDER:
        raise ValueError(f"order {order} exceeds MAX_ORDER={MAX_ORDER}")
    arr = np.zeros((1 << order,) + a.batch_shape)
    arr[: 1 << a.order] = a.coeffs
    return Tower._raw(order, arr)


def split_top(a: Tower) -> tuple[Tower, Tower]:
    """Split along the outermost generator.

    Returns ``(lo, hi)`` of order ``a.order - 1`` with
    ``a = extend(lo) + e_top * extend(hi)``.
    """
    if a.order == 0:
        raise ValueError("order-0 towers have no generator to split")
    half = 1 << (a.order - 1)
    return (Tower._raw(a.order - 1, a.coeffs[:half].copy()),
            Tower._raw(a.order - 1, a.coeffs[half:].copy()))


def join_top(lo: Tower, hi: Tower) -> Tower:
    """Inverse of :func:`split_top`."""
    if lo.order != hi.order:
        raise ValueError(f"tower order mismatch: {lo.order} vs {hi.order}")
    a, b = _align(lo.coeffs, hi.coeffs)
    shape = np.broadcast_shapes(a.shape, b.shape)
    arr = np.empty((2 * shape[0],) + shape[1:])
    arr[: shape[0]] = a
    arr[shape[0]:] = b
    return Tower._raw(lo.order + 1, arr)


class _Primitive(NamedTuple):
    check: Callable[[np.ndarray], None]
    jets: Callable[[np.ndarray, int], list]


def _check_positive(name: str):
    def check(base: np.ndarray) -> None:
        if np.any(base <= 0.0):
            raise DomainError(f"{name} requires a strictly positive base point")
    return check

def _check_nonzero(name: str):
    def check(base: np.ndarray) -> None:
        if np.any(base == 0.0):
            raise DomainError(f"{name} requires a nonzero base point")
    return check

def _no_check(base: np.ndarray) -> None:
    return None


def _jets_exp(base, order):
    e = np.exp(base)
    return [e] * (order + 1)

def _jets_log(base, order):
    inv = 1.0 / base
    return [np.log(base), inv, -inv * inv, 2.0 * inv ** 3, -6.0 * inv ** 4][: order + 1]

def _jets_sin(base, order):
    s, c = np.sin(base), np.cos(base)
    return [s, c, -s, -c, s][: order + 1]

def _jets_cos(base, order):
    s, c = np.sin(base), np.cos(base)
    return [c, -s, -c, s, c][: order + 1]

def _jets_sqrt(base, order):
    r = np.sqrt(base)
    inv = 1.0 / base
    return [r, 0.5 * r * inv, -0.25 * r * inv ** 2,
            0.375 * r * inv ** 3, -0.9375 * r * inv ** 4][: order + 1]

def _jets_recip(base, order):
    inv = 1.0 / base
    return [inv, -inv * inv, 2.0 * inv ** 3, -6.0 * inv ** 4, 24.0 * inv ** 5][: order + 1]


_PRIMITIVES: dict[str, _Primitive] = {
    "exp": _Primitive(_no_check, _jets_exp),
    "log": _Primitive(_check_positive("log"), _jets_log),
    "sin": _Primitive(_no_check, _jets_sin),
    "cos": _Primitive(_no_check, _jets_cos),
    "sqrt": _Primitive(_check_positive("sqrt"), _jets_sqrt),
    "recip": _Primitive(_check_nonzero("recip"), _jets_recip),
}


def lift_primitive(name: str, a: Tower) -> Tower:
    """Apply a scalar primitive to a tower via its truncated Taylor series.

    The series around the real part is exact here: the nilpotent part of
    an order-n tower has vanishing (n+1)-st power, so summing derivative
    terms up to order n reproduces the primitive's full n-jet.
    """
    try:
        prim = _PRIMITIVES[name]
    except KeyError:
        raise ValueError(f"unknown primitive {name!r}") from None
    base = a.coeffs[0]
    prim.check(base)
    derivs = prim.jets(base, a.order)
    out = Tower.constant(derivs[0], a.order)
    if a.order == 0:
        return out
    nil_arr = a.coeffs.copy()
    nil_arr[0] = 0.0
    nil = Tower._raw(a.order, nil_arr)
    power = nil
    for k in range(1, a.order + 1):
        out = out + power * np.asarray(derivs[k] / _FACTORIAL[k])
        if k < a.order:
            power = tower_mul(power, nil)
    return out


def reciprocal(a: Tower) -> Tower:
    return lift_primitive("recip", a)


def pow_int(a: Tower, exponent: int) -> Tower:
    """Integer power; negative exponents require a nonzero base point."""
    if exponent < 0:
        return reciprocal(pow_int(a, -exponent))
    if exponent == 0:
        return Tower.constant(np.ones(a.batch_shape), a.order)
    result = None
    square = a
    k = exponent
    while k:
        if k & 1:
            result = square if result is None else tower_mul(result, square)
        k >>= 1
        if k:
            square = tower_mul(square, square)
    return result


def allclose(a: Tower, b: Tower, tol: float = 1e-12) -> bool:
    if a.order != b.order:
        return False
    x, y = _align(a.coeffs, b.coeffs)
    scale = 1.0 + max(np.max(np.abs(x)), np.max(np.abs(y)))
    return bool(np.max(np.abs(x - y)) <= tol * scale)
