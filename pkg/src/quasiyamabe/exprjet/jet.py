"""Truncated multivariate Taylor polynomials ("jets") with numpy storage.

A :class:`Jet` holds an array of shape ``(*shape, N)``: the leading axes index
points and tensor components, the last axis holds the Taylor coefficients of
all monomials of total degree <= order, in graded order.  Because the graded
ordering is the same for every order, truncation is a slice.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


class OrderExceededError(ValueError):
    """A derivative beyond the computed jet order was requested."""


class JetSpace:
    """Monomial bookkeeping for jets in ``nvars`` variables up to ``order``."""

    def __init__(self, nvars: int, order: int):
        if nvars < 0 or order < 0:
            raise ValueError("nvars and order must be non-negative")
        self.nvars = nvars
        self.order = order
        rows = []
        for d in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), d):
                alpha = [0] * nvars
                for v in combo:
                    alpha[v] += 1
                rows.append(alpha)
        self.indices = np.array(rows, dtype=np.int64).reshape(len(rows), nvars)
        self.size = len(self.indices)
        self.degree = self.indices.sum(axis=1)
        self.factorial = np.array(
            [math.prod(math.factorial(a) for a in alpha) for alpha in self.indices],
            dtype=float,
        )
        self._base = order + 1
        self._codes = self._encode(self.indices)
        self._lookup = {int(c): i for i, c in enumerate(self._codes)}

        # product table: all (left, right) pairs whose degrees fit, sorted by target
        deg_ok = (self.degree[:, None] + self.degree[None, :]) <= order
        left, right = np.nonzero(deg_ok)
        target = self._index_of(self.indices[left] + self.indices[right])
        perm = np.argsort(target, kind="stable")
        self.pair_left = left[perm]
        self.pair_right = right[perm]
        target = target[perm]
        self.pair_starts = np.flatnonzero(np.r_[True, target[1:] != target[:-1]])

    def _encode(self, alphas: np.ndarray) -> np.ndarray:
        weights = self._base ** np.arange(self.nvars, dtype=np.int64)
        return alphas @ weights

    def _index_of(self, alphas: np.ndarray) -> np.ndarray:
        codes = self._encode(np.atleast_2d(alphas))
        return np.array([self._lookup[int(c)] for c in codes], dtype=np.int64)

    def index(self, alpha) -> int:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.nvars:
            raise ValueError(f"multi-index {alpha} has wrong length for {self.nvars} variables")
        if any(a < 0 for a in alpha):
            raise ValueError(f"negative multi-index {alpha}")
        if sum(alpha) > self.order:
            raise OrderExceededError(
                f"degree {sum(alpha)} requested from a jet of order {self.order}"
            )
        return self._lookup[int(self._encode(np.array([alpha]))[0])]

    def derivative_map(self, var: int) -> tuple[np.ndarray, np.ndarray]:
        """Source indices and factors for d/dx_var, landing in order-1."""
        return _derivative_map(self.nvars, self.order, var)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        prod = a[..., self.pair_left] * b[..., self.pair_right]
        return np.add.reduceat(prod, self.pair_starts, axis=-1)


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


@lru_cache(maxsize=None)
def _derivative_map(nvars: int, order: int, var: int):
    if order == 0:
        raise OrderExceededError("cannot differentiate an order-0 jet")
    src = jet_space(nvars, order)
    dst = jet_space(nvars, order - 1)
    shifted = dst.indices.copy()
    shifted[:, var] += 1
    return src._index_of(shifted), shifted[:, var].astype(float)


class Jet:
    """Array of truncated Taylor expansions sharing one :class:`JetSpace`.

    Arithmetic broadcasts over the leading axes like numpy.  Mixing jets of
    different order truncates to the lower one.
    """

    __slots__ = ("space", "data")
    __array_priority__ = 100  # keep ndarray.__mul__ from swallowing jets

    def __init__(self, space: JetSpace, data):
        data = np.asarray(data, dtype=float)
        if data.shape[-1:] != (space.size,):
            raise ValueError(
                f"coefficient axis has length {data.shape[-1:]}, expected {space.size}"
            )
        self.space = space
        self.data = data

    # -- construction -------------------------------------------------------

    @classmethod
    def constant(cls, space: JetSpace, values) -> "Jet":
        values = np.asarray(values, dtype=float)
        data = np.zeros(values.shape + (space.size,))
        data[..., 0] = values
        return cls(space, data)

    @classmethod
    def variable(cls, space: JetSpace, var: int, values) -> "Jet":
        j = cls.constant(space, values)
        if space.order > 0:
            alpha = [0] * space.nvars
            alpha[var] = 1
            j.data[..., space.index(alpha)] = 1.0
        return j

    # -- inspection ---------------------------------------------------------

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.data[..., 0]

    def coefficient(self, alpha) -> np.ndarray:
        return self.data[..., self.space.index(alpha)]

    def derivative(self, alpha) -> np.ndarray:
        """Raw mixed partial d^alpha at the base point (alpha! times the coefficient)."""
        i = self.space.index(alpha)
        return self.data[..., i] * self.space.factorial[i]

    def __repr__(self) -> str:
        return f"Jet(nvars={self.space.nvars}, order={self.order}, shape={self.shape})"

    # -- structural ---------------------------------------------------------

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderExceededError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        sp = jet_space(self.space.nvars, order)
        return Jet(sp, self.data[..., : sp.size])

    def partial(self, var: int) -> "Jet":
        src, fac = self.space.derivative_map(var)
        return Jet(jet_space(self.space.nvars, self.order - 1), self.data[..., src] * fac)

    def d(self) -> "Jet":
        """Gradient as a new trailing tensor axis: ``J.d()[..., i] = dJ/dx_i``."""
        parts = [self.partial(i).data for i in range(self.space.nvars)]
        return Jet(jet_space(self.space.nvars, self.order - 1), np.stack(parts, axis=-2))

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            idx = idx + (slice(None),)
        return Jet(self.space, self.data[idx])

    def sum(self, axis: int) -> "Jet":
        return Jet(self.space, self.data.sum(axis=axis - 1 if axis < 0 else axis))

    def swapaxes(self, a: int, b: int) -> "Jet":
        a = a - 1 if a < 0 else a
        b = b - 1 if b < 0 else b
        return Jet(self.space, np.swapaxes(self.data, a, b))

    def expand(self, axis: int) -> "Jet":
        """Insert a length-1 tensor axis (negative axes count from the last tensor axis)."""
        axis = axis - 1 if axis < 0 else axis
        return Jet(self.space, np.expand_dims(self.data, axis))

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> tuple[JetSpace, np.ndarray, np.ndarray]:
        if isinstance(other, Jet):
            if other.space.nvars != self.space.nvars:
                raise ValueError("jets over different numbers of variables")
            k = min(self.order, other.order)
            a, b = self.truncate(k), other.truncate(k)
            return a.space, a.data, b.data
        return self.space, self.data, None

    def __add__(self, other) -> "Jet":
        sp, a, b = self._coerce(other)
        if b is None:
            other = np.asarray(other, dtype=float)
            shape = np.broadcast_shapes(self.shape, other.shape)
            out = np.broadcast_to(a, shape + (sp.size,)).copy()
            out[..., 0] += other
            return Jet(sp, out)
        return Jet(sp, a + b)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(self.space, -self.data)

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        sp, a, b = self._coerce(other)
        if b is None:
            return Jet(sp, a * np.asarray(other, dtype=float)[..., None])
        return Jet(sp, sp.mul(a, b))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return Jet(self.space, self.data / np.asarray(other, dtype=float)[..., None])

    def __rtruediv__(self, other) -> "Jet":
        return reciprocal(self) * other

    def __pow__(self, exponent) -> "Jet":
        if isinstance(exponent, (int, np.integer)):
            return integer_power(self, int(exponent))
        return real_power(self, float(exponent))


# -- tensor contraction ------------------------------------------------------


def jeinsum(subscripts: str, *operands) -> Jet:
    """``np.einsum`` over tensor axes with jet (truncated) products.

    Subscripts name the trailing tensor axes only; leading point axes
    broadcast.  Non-jet operands are treated as constants.
    """
    inputs, output = subscripts.replace(" ", "").split("->")
    terms = inputs.split(",")
    if len(terms) != len(operands):
        raise ValueError("operand count does not match subscripts")
    jets = [op for op in operands if isinstance(op, Jet)]
    if not jets:
        raise TypeError("jeinsum needs at least one Jet operand")
    k = min(j.order for j in jets)
    sp = jet_space(jets[0].space.nvars, k)
    ops = [
        op.truncate(k) if isinstance(op, Jet) else Jet.constant(sp, op) for op in operands
    ]
    acc, acc_sub = ops[0].data, terms[0]
    for idx in range(1, len(ops)):
        later = set(output).union(*terms[idx + 1 :])
        sub = terms[idx]
        keep = "".join(
            dict.fromkeys(c for c in acc_sub + sub if c in later)
        )
        prod = np.einsum(
            f"...{acc_sub}P,...{sub}P->...{keep}P",
            acc[..., sp.pair_left],
            ops[idx].data[..., sp.pair_right],
        )
        acc = np.add.reduceat(prod, sp.pair_starts, axis=-1)
        acc_sub = keep
    if acc_sub != output:
        acc = np.einsum(f"...{acc_sub}N->...{output}N", acc)
    return Jet(sp, acc)


def jlinear(subscripts: str, j: Jet) -> Jet:
    """Linear rearrangement (trace, transpose) of tensor axes."""
    src, dst = subscripts.replace(" ", "").split("->")
    return Jet(j.space, np.einsum(f"...{src}N->...{dst}N", j.data))


def stack(jets, axis: int = -1) -> Jet:
    """Stack jets along a new tensor axis (negative axes count from the end of tensor axes)."""
    k = min(j.order for j in jets)
    jets = [j.truncate(k) for j in jets]
    shape = np.broadcast_shapes(*(j.shape for j in jets))
    datas = [np.broadcast_to(j.data, shape + (jets[0].space.size,)) for j in jets]
    axis = axis - 1 if axis < 0 else axis
    return Jet(jets[0].space, np.stack(datas, axis=axis))


# -- elementary functions ----------------------------------------------------


def compose(a: Jet, coeffs) -> Jet:
    """Evaluate sum_j coeffs[j] * (a - a0)^j by Horner's rule.

    ``coeffs[j]`` is f^(j)(a0)/j! (arrays broadcasting with ``a.shape``).
    """
    h = Jet(a.space, a.data.copy())
    h.data[..., 0] = 0.0
    out = Jet.constant(a.space, np.broadcast_to(coeffs[-1], a.shape))
    for c in reversed(coeffs[:-1]):
        out = out * h + c
    return out


def _kth(order):
    return range(order + 1)


def jexp(a: Jet) -> Jet:
    e = np.exp(a.value)
    return compose(a, [e / math.factorial(j) for j in _kth(a.order)])


def jlog(a: Jet) -> Jet:
    x = a.value
    coeffs = [np.log(x)] + [(-1.0) ** (j + 1) / (j * x**j) for j in range(1, a.order + 1)]
    return compose(a, coeffs)


def jsin(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [s, c, -s, -c]
    return compose(a, [cycle[j % 4] / math.factorial(j) for j in _kth(a.order)])


def jcos(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [c, -s, -c, s]
    return compose(a, [cycle[j % 4] / math.factorial(j) for j in _kth(a.order)])


def jsinh(a: Jet) -> Jet:
    s, c = np.sinh(a.value), np.cosh(a.value)
    return compose(a, [(s if j % 2 == 0 else c) / math.factorial(j) for j in _kth(a.order)])


def jcosh(a: Jet) -> Jet:
    s, c = np.sinh(a.value), np.cosh(a.value)
    return compose(a, [(c if j % 2 == 0 else s) / math.factorial(j) for j in _kth(a.order)])


def reciprocal(a: Jet) -> Jet:
    x = a.value
    return compose(a, [(-1.0) ** j / x ** (j + 1) for j in _kth(a.order)])


def real_power(a: Jet, b: float) -> Jet:
    """a**b for real b via the binomial series; a must be positive."""
    x = a.value
    coeffs = []
    binom = 1.0
    for j in _kth(a.order):
        coeffs.append(binom * x ** (b - j))
        binom *= (b - j) / (j + 1)
    return compose(a, coeffs)


def integer_power(a: Jet, n: int) -> Jet:
    if n < 0:
        return integer_power(reciprocal(a), -n)
    result = Jet.constant(a.space, np.ones(a.shape))
    base = a
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result
