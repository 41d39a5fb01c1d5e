"""Point-evaluation front end to :class:`LocalGeometry`.

Each function accepts a single point ``(n,)`` or a batch ``(B, n)`` and
returns values of matching shape.
"""

from __future__ import annotations

import numpy as np

from .charts import MetricError, MetricPatch, ScalarField, TensorValue, VectorField
from .local import LocalGeometry

DEFAULT_ORDER = 4


def _setup(g: MetricPatch, p, order: int):
    p = np.asarray(p, dtype=float)
    return LocalGeometry(g, p, order), p.ndim == 1


def _out(arr, single: bool):
    arr = np.asarray(arr)
    return arr[0] if single else arr


def _tensor(arr, sig: str, p, single: bool, symmetric: bool = False) -> TensorValue:
    arr = _out(arr, single)
    if symmetric:
        return TensorValue.symmetric(arr, sig, np.asarray(p))
    return TensorValue(arr, sig, np.asarray(p))


def metric_at(g: MetricPatch, p) -> tuple[TensorValue, TensorValue]:
    geo, single = _setup(g, p, 0)
    gv = geo.g.value
    inv = np.linalg.inv(gv)
    resid = np.max(np.abs(gv @ inv - np.eye(geo.n)))
    if resid > 1e-12 * max(1.0, float(np.max(np.abs(gv) * np.max(np.abs(inv))))):
        raise MetricError(f"metric is numerically singular (|g g^-1 - I| = {resid:.2e})")
    return _tensor(gv, "ll", p, single, True), _tensor(inv, "uu", p, single, True)


def christoffel(g: MetricPatch, p) -> TensorValue:
    """``Gamma[k,i,j] = Gamma^k_{ij}``."""
    geo, single = _setup(g, p, 1)
    return _tensor(geo.christoffel.value, "ull", p, single)


def riemann(g: MetricPatch, p) -> tuple[TensorValue, TensorValue]:
    """(``Rup[m,l,i,j]``, lowered ``R[i,j,k,l]``); see :mod:`.local` for conventions."""
    geo, single = _setup(g, p, 2)
    return (
        _tensor(geo.riemann.value, "ulll", p, single),
        _tensor(geo.riemann_lowered.value, "llll", p, single),
    )


def ricci(g: MetricPatch, p) -> TensorValue:
    geo, single = _setup(g, p, 2)
    return _tensor(geo.ricci.value, "ll", p, single, True)


def ricci_operator(g: MetricPatch, p) -> TensorValue:
    geo, single = _setup(g, p, 2)
    return _tensor(geo.ricci_operator.value, "ul", p, single)


def scalar_curvature(g: MetricPatch, p):
    geo, single = _setup(g, p, 2)
    return _out(geo.scal.value, single)


def grad(g: MetricPatch, f: ScalarField, p):
    geo, single = _setup(g, p, 1)
    return _out(geo.grad(geo.field(f)).value, single)


def hessian(g: MetricPatch, f: ScalarField, p) -> TensorValue:
    geo, single = _setup(g, p, 2)
    return _tensor(geo.hessian(geo.field(f)).value, "ll", p, single, True)


def laplacian(g: MetricPatch, f: ScalarField, p):
    geo, single = _setup(g, p, 2)
    return _out(geo.laplacian(geo.field(f)).value, single)


def lie_derivative_metric(g: MetricPatch, x: VectorField, p) -> TensorValue:
    geo, single = _setup(g, p, 1)
    return _tensor(geo.lie_metric(geo.field(x)).value, "ll", p, single)


def covariant_derivative_vector(g: MetricPatch, x: VectorField, p) -> TensorValue:
    """``A[i,j] = (nabla_j X)^i``."""
    geo, single = _setup(g, p, 1)
    return _tensor(geo.nabla_vector(geo.field(x)).value, "ul", p, single)


def vector_field_norms(g: MetricPatch, x: VectorField, p):
    """(|X|^2, |nabla X|^2) with every index contracted through the metric."""
    geo, single = _setup(g, p, 1)
    xj = geo.field(x)
    return (
        _out(geo.norm2_vector(xj).value, single),
        _out(geo.norm2_11(geo.nabla_vector(xj)).value, single),
    )


def divergence(g: MetricPatch, t, p):
    """Divergence of a VectorField, OneForm, or a (0,2) tensor given as an
    ``n x n`` nested list of expressions (or a callable ``geo -> Jet``)."""
    from .charts import OneForm

    geo, single = _setup(g, p, 2)
    if isinstance(t, OneForm):
        return _out(geo.div_covector(geo.field(t)).value, single)
    if isinstance(t, VectorField):
        return _out(geo.div_vector(geo.field(t)).value, single)
    if callable(t):
        return _out(geo.div_02(t(geo)).value, single)
    sym = MetricPatch.from_matrix(g.chart, t)
    return _out(geo.div_02(sym.jet(geo.points, geo.order)).value, single)


def scalar_curvature_derivatives(g: MetricPatch, p, order: int = DEFAULT_ORDER):
    """(grad scal, Hess(scal)) by differentiating through the curvature pipeline."""
    geo, single = _setup(g, p, order)
    geo.need(4, "Hess(scal)")
    return (
        _out(geo.scal_gradient.value, single),
        _tensor(geo.scal_hessian.value, "ll", p, single, True),
    )
