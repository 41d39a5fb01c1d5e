"""Evaluation of expression trees on jets and on plain floats."""

from __future__ import annotations

import numpy as np

from .jet import (
    Jet,
    integer_power,
    jcos,
    jcosh,
    jet_space,
    jexp,
    jlog,
    jsin,
    jsinh,
    reciprocal,
)
from .parser import (
    CONSTANTS,
    BinOp,
    Call,
    Const,
    Expr,
    ExprError,
    Neg,
    Num,
    Var,
    as_expr,
    bind,
    to_source,
    variables,
)


class ExprDomainError(ExprError):
    """Evaluation left the domain of ln, sqrt, a fractional power, or division."""

    def __init__(self, message: str, subexpr: Expr, point=None):
        self.subexpr = subexpr
        self.point = point
        where = "" if point is None else f" at point {np.asarray(point).tolist()}"
        super().__init__(f"{message} in {to_source(subexpr)!r}{where}")


def _coordinate_names(chart) -> tuple[str, ...]:
    return tuple(getattr(chart, "coordinates", chart))


def _integer_exponent(e: Expr) -> int | None:
    if variables(e):
        return None
    v = eval_float(e, (), ())
    if np.isfinite(v) and float(v).is_integer() and abs(v) <= 64:
        return int(v)
    return None


class _JetEvaluator:
    def __init__(self, names, points: np.ndarray, order: int):
        self.names = names
        self.points = points
        self.space = jet_space(len(names), order)
        self.batch = points.shape[:-1]
        self.seeds = {
            name: Jet.variable(self.space, i, points[..., i]) for i, name in enumerate(names)
        }

    def _positive(self, x: Jet, node: Expr, what: str):
        bad = ~(x.value > 0)
        if np.any(bad):
            first = np.argwhere(np.atleast_1d(bad))[0]
            pt = self.points.reshape(-1, len(self.names))[first[0]] if self.batch else self.points
            raise ExprDomainError(f"{what} of non-positive argument", node, pt)

    def _nonzero(self, x: Jet, node: Expr):
        bad = x.value == 0
        if np.any(bad):
            first = np.argwhere(np.atleast_1d(bad))[0]
            pt = self.points.reshape(-1, len(self.names))[first[0]] if self.batch else self.points
            raise ExprDomainError("division by zero", node, pt)

    def const(self, v: float) -> Jet:
        return Jet.constant(self.space, np.full(self.batch, v))

    def __call__(self, e: Expr) -> Jet:
        if isinstance(e, Num):
            return self.const(e.value)
        if isinstance(e, Const):
            return self.const(CONSTANTS[e.name])
        if isinstance(e, Var):
            return self.seeds[e.name]
        if isinstance(e, Neg):
            return -self(e.operand)
        if isinstance(e, Call):
            return self.call(e)
        if isinstance(e, BinOp):
            if e.op == "^":
                return self.power(e)
            a, b = self(e.left), self(e.right)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                self._nonzero(b, e.right)
                return a * reciprocal(b)
        raise TypeError(f"unknown node {e!r}")

    def power(self, e: BinOp) -> Jet:
        base = self(e.left)
        n = _integer_exponent(e.right)
        if n is not None:
            if n < 0:
                self._nonzero(base, e.left)
            return integer_power(base, n)
        # fractional or coordinate-dependent exponent: exp(b * ln(a))
        self._positive(base, e, "non-integer power")
        return jexp(self(e.right) * jlog(base))

    def call(self, e: Call) -> Jet:
        a = self(e.arg)
        f = e.func
        if f == "exp":
            return jexp(a)
        if f == "ln":
            self._positive(a, e, "ln")
            return jlog(a)
        if f == "sqrt":
            self._positive(a, e, "sqrt")
            return jexp(0.5 * jlog(a))
        if f == "sin":
            return jsin(a)
        if f == "cos":
            return jcos(a)
        if f == "tan":
            c = jcos(a)
            self._nonzero(c, e)
            return jsin(a) * reciprocal(c)
        if f == "sinh":
            return jsinh(a)
        if f == "cosh":
            return jcosh(a)
        if f == "tanh":
            return jsinh(a) * reciprocal(jcosh(a))
        raise TypeError(f"unknown function {f!r}")


def eval_jet(e, chart, point, order: int = 4) -> Jet:
    """Jet of ``e`` at ``point`` (shape ``(n,)`` or ``(..., n)``) up to ``order``.

    ``chart`` is anything with a ``coordinates`` attribute, or a sequence of
    coordinate names.  The coefficient of multi-index alpha is
    d^alpha e / alpha!.
    """
    e = as_expr(e)
    names = _coordinate_names(chart)
    bind(e, names)
    points = np.asarray(point, dtype=float)
    if points.shape[-1:] != (len(names),):
        raise ValueError(f"point has shape {points.shape}, chart dimension is {len(names)}")
    with np.errstate(all="ignore"):
        return _JetEvaluator(names, points, order)(e)


def eval_float(e, chart, point):
    """Plain value of ``e`` (equivalent to the order-0 jet)."""
    names = _coordinate_names(chart)
    point = np.asarray(point, dtype=float)
    if not names:
        point = point.reshape(point.shape[:-1] + (0,)) if point.ndim else np.zeros(0)
    return eval_jet(e, names, point, order=0).value


def derivative(j: Jet, multi_index) -> np.ndarray | float:
    """Raw mixed partial of a jet; raises OrderExceededError past its order."""
    out = j.derivative(multi_index)
    return float(out) if np.ndim(out) == 0 else out
