"""Charts, metric patches and field containers."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from ..exprjet import Expr, ExprDomainError, Jet, Num, as_expr, bind, eval_jet, stack, to_source
from ..exprjet.parser import RESERVED

_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*\Z")


class GeometryError(ValueError):
    """Base class for chart and metric errors."""


class DomainConstraintError(GeometryError):
    """A point violates the chart's domain constraints."""


class MetricError(GeometryError):
    """The metric is singular, non-symmetric or not positive definite."""


@dataclass(frozen=True)
class Chart:
    """Named coordinates plus constraints that must be > 0 at admissible points."""

    coordinates: tuple[str, ...]
    constraints: tuple[Expr, ...] = ()
    name: str = ""

    def __post_init__(self):
        coords = tuple(self.coordinates)
        if not coords:
            raise GeometryError("a chart needs at least one coordinate")
        if len(set(coords)) != len(coords):
            raise GeometryError(f"duplicate coordinate names in {coords}")
        for c in coords:
            if not _IDENT.match(c) or c in RESERVED:
                raise GeometryError(f"invalid coordinate name {c!r}")
        cons = tuple(bind(as_expr(c), coords) for c in self.constraints)
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "constraints", cons)

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    def admissible(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.all(np.isfinite(pts), axis=-1)
        for c in self.constraints:
            try:
                ok &= eval_jet(c, self.coordinates, pts, 0).value > 0
            except ExprDomainError:
                for i, p in enumerate(pts):
                    try:
                        ok[i] &= eval_jet(c, self.coordinates, p, 0).value > 0
                    except ExprDomainError:
                        ok[i] = False
        return ok

    def require_admissible(self, points) -> None:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.dimension:
            raise GeometryError(
                f"points have {pts.shape[-1]} coordinates, chart has {self.dimension}"
            )
        ok = self.admissible(pts)
        if not ok.all():
            bad = pts[~ok][0]
            raise DomainConstraintError(
                f"point {bad.tolist()} violates domain constraints "
                f"{[to_source(c) + ' > 0' for c in self.constraints]}"
            )


@dataclass(frozen=True)
class MetricPatch:
    """Symmetric matrix of expressions; only the upper triangle is stored."""

    chart: Chart
    upper: tuple[tuple[Expr, ...], ...] = field(repr=False)

    def __post_init__(self):
        n = self.chart.dimension
        rows = tuple(tuple(bind(as_expr(e), self.chart.coordinates) for e in r) for r in self.upper)
        if len(rows) != n or any(len(r) != n - i for i, r in enumerate(rows)):
            raise MetricError(f"upper triangle has wrong shape for dimension {n}")
        object.__setattr__(self, "upper", rows)

    @classmethod
    def from_matrix(cls, chart: Chart, matrix) -> "MetricPatch":
        """Build from a full square matrix (or ragged upper-triangle rows).

        Lower-triangle entries of a full matrix must mirror the upper ones.
        """
        n = chart.dimension
        rows = [list(r) for r in matrix]
        if len(rows) != n:
            raise MetricError(f"metric has {len(rows)} rows, chart dimension is {n}")
        if n > 1 and [len(r) for r in rows] == [n - i for i in range(n)]:
            return cls(chart, tuple(tuple(r) for r in rows))
        if any(len(r) != n for r in rows):
            raise MetricError("metric matrix must be square")
        for i in range(n):
            for j in range(i):
                if as_expr(rows[i][j]) != as_expr(rows[j][i]):
                    raise MetricError(
                        f"metric entry [{i}][{j}] = {rows[i][j]!r} does not mirror [{j}][{i}] = {rows[j][i]!r}"
                    )
        return cls(chart, tuple(tuple(rows[i][i:]) for i in range(n)))

    @classmethod
    def diagonal(cls, chart: Chart, entries) -> "MetricPatch":
        n = chart.dimension
        entries = list(entries)
        return cls(chart, tuple((entries[i],) + (Num(0.0),) * (n - i - 1) for i in range(n)))

    @classmethod
    def conformal(cls, chart: Chart, factor) -> "MetricPatch":
        return cls.diagonal(chart, [factor] * chart.dimension)

    @classmethod
    def euclidean(cls, chart: Chart) -> "MetricPatch":
        return cls.conformal(chart, Num(1.0))

    def component(self, i: int, j: int) -> Expr:
        if i > j:
            i, j = j, i
        return self.upper[i][j - i]

    def matrix(self) -> list[list[Expr]]:
        n = self.chart.dimension
        return [[self.component(i, j) for j in range(n)] for i in range(n)]

    def jet(self, points, order: int) -> Jet:
        pts = np.asarray(points, dtype=float)
        n = self.chart.dimension
        entries = {}
        for i in range(n):
            for j in range(i, n):
                entries[i, j] = eval_jet(self.component(i, j), self.chart.coordinates, pts, order)
        rows = [stack([entries[min(i, j), max(i, j)] for j in range(n)]) for i in range(n)]
        return stack(rows, axis=-2)


@dataclass(frozen=True)
class ScalarField:
    chart: Chart
    expr: Expr

    def __post_init__(self):
        object.__setattr__(self, "expr", bind(as_expr(self.expr), self.chart.coordinates))

    def jet(self, points, order: int) -> Jet:
        return eval_jet(self.expr, self.chart.coordinates, points, order)


@dataclass(frozen=True)
class VectorField:
    """Contravariant components xi^i."""

    chart: Chart
    components: tuple[Expr, ...]

    def __post_init__(self):
        comps = tuple(bind(as_expr(c), self.chart.coordinates) for c in self.components)
        if len(comps) != self.chart.dimension:
            raise GeometryError(
                f"{len(comps)} components given for a {self.chart.dimension}-dimensional chart"
            )
        object.__setattr__(self, "components", comps)

    def jet(self, points, order: int) -> Jet:
        return stack([eval_jet(c, self.chart.coordinates, points, order) for c in self.components])


class OneForm(VectorField):
    """Covariant components eta_i."""


@dataclass(frozen=True)
class TensorValue:
    """Pointwise tensor components with an index signature such as ``"ll"`` or ``"ul"``.

    ``u`` marks a contravariant (upper) index and ``l`` a covariant one.
    """

    array: np.ndarray
    signature: str
    point: np.ndarray | None = None

    def __post_init__(self):
        arr = np.asarray(self.array, dtype=float)
        if arr.ndim < len(self.signature) or set(self.signature) - {"u", "l"}:
            raise ValueError(f"array of shape {arr.shape} does not fit signature {self.signature!r}")
        object.__setattr__(self, "array", arr)

    @classmethod
    def symmetric(cls, array, signature: str = "ll", point=None, rtol: float = 1e-10) -> "TensorValue":
        arr = np.asarray(array, dtype=float)
        asym = np.max(np.abs(arr - np.swapaxes(arr, -1, -2)), initial=0.0)
        if asym > rtol * max(1.0, np.max(np.abs(arr), initial=0.0)):
            raise ValueError(f"tensor is not symmetric (asymmetry {asym:.3e})")
        return cls(arr, signature, point)

    def __array__(self, dtype=None, copy=None):
        return self.array if dtype is None else self.array.astype(dtype)

    def __getitem__(self, idx):
        return self.array[idx]

    @property
    def shape(self):
        return self.array.shape
