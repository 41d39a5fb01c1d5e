"""Tensor calculus on jets of a metric around a batch of base points.

Every quantity is a :class:`Jet` whose leading axis runs over the points, so
derived fields (scal, |xi|^2, ...) can be differentiated again.  Each
derivative costs one jet order: with the metric at order k, Christoffels have
order k-1 and curvature k-2.

Conventions: ``R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``;
``Rup[m,l,i,j]`` is the d_m component of R(d_i, d_j) d_l;
``R[i,j,k,l] = g(R(d_i, d_j) d_l, d_k)`` so ``R[i,j,i,j]`` is sectional
curvature times the area factor (negative on hyperbolic space);
``Ric(Y,Z) = tr(X -> R(X,Y)Z)`` (positive on round spheres);
``Laplacian = trace of Hessian``.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from ..exprjet import Jet, OrderExceededError, jeinsum, jlinear
from .charts import MetricError, MetricPatch


def _inverse(g: Jet) -> Jet:
    """Jet inverse of a batch of matrices via the terminating Neumann series."""
    a0 = np.linalg.inv(g.value)
    a = Jet.constant(g.space, a0)
    e = g - Jet.constant(g.space, g.value)
    ae = jeinsum("ij,jk->ik", a, e)
    term, total = a, a
    for _ in range(g.order):
        term = -jeinsum("ij,jk->ik", ae, term)
        total = total + term
    return total


class LocalGeometry:
    """Metric jets and the differential operators built from them."""

    def __init__(self, metric: MetricPatch, points, order: int):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        metric.chart.require_admissible(pts)
        self.metric = metric
        self.points = pts
        self.order = order
        self.n = metric.chart.dimension
        self.g = metric.jet(pts, order)
        g0 = self.g.value
        if not np.all(np.isfinite(g0)):
            raise MetricError("metric is not finite at some sample point")
        eig = np.linalg.eigvalsh(g0)
        if np.any(eig[:, 0] <= 0):
            bad = pts[np.argmax(eig[:, 0] <= 0)]
            raise MetricError(f"metric is not positive definite at {bad.tolist()}")

    def need(self, order: int, what: str) -> None:
        if self.order < order:
            raise OrderExceededError(f"{what} needs jet order >= {order}, have {self.order}")

    def field(self, f) -> Jet:
        return f.jet(self.points, self.order)

    def constant(self, values) -> Jet:
        return Jet.constant(self.g.space, values)

    # -- metric and connection ---------------------------------------------

    @cached_property
    def ginv(self) -> Jet:
        return _inverse(self.g)

    @cached_property
    def christoffel(self) -> Jet:
        """``Gamma[k,i,j] = Gamma^k_{ij}``."""
        self.need(1, "Christoffel symbols")
        dg = self.g.d()  # dg[i,j,l] = d_l g_ij
        first = 0.5 * (
            jlinear("jli->lij", dg) + jlinear("ilj->lij", dg) - jlinear("ijl->lij", dg)
        )
        return jeinsum("kl,lij->kij", self.ginv, first)

    @cached_property
    def riemann(self) -> Jet:
        """``Rup[m,l,i,j]``: component m of R(d_i, d_j) d_l."""
        self.need(2, "curvature")
        gam = self.christoffel
        dgam = gam.d()  # dgam[m,j,l,i] = d_i Gamma^m_{jl}
        g2 = gam.truncate(self.order - 2)
        return (
            jlinear("mjli->mlij", dgam)
            - jlinear("milj->mlij", dgam)
            + jeinsum("mip,pjl->mlij", g2, g2)
            - jeinsum("mjp,pil->mlij", g2, g2)
        )

    @cached_property
    def riemann_lowered(self) -> Jet:
        """``R[i,j,k,l] = g(R(d_i, d_j) d_l, d_k)``."""
        return jeinsum("km,mlij->ijkl", self.g, self.riemann)

    @cached_property
    def ricci(self) -> Jet:
        rc = jlinear("mlmj->lj", self.riemann)
        return 0.5 * (rc + rc.swapaxes(-1, -2))

    @cached_property
    def ricci_operator(self) -> Jet:
        """``Q[i,j] = g^{ik} S_kj``."""
        return jeinsum("ik,kj->ij", self.ginv, self.ricci)

    @cached_property
    def scal(self) -> Jet:
        return jeinsum("ij,ij->", self.ginv, self.ricci)

    # -- index gymnastics ----------------------------------------------------

    def lower(self, x: Jet) -> Jet:
        return jeinsum("ij,j->i", self.g, x)

    def raise_(self, w: Jet) -> Jet:
        return jeinsum("ij,j->i", self.ginv, w)

    def inner(self, x: Jet, y: Jet) -> Jet:
        return jeinsum("ij,i,j->", self.g, x, y)

    def norm2_vector(self, x: Jet) -> Jet:
        return self.inner(x, x)

    def norm2_covector(self, w: Jet) -> Jet:
        return jeinsum("ij,i,j->", self.ginv, w, w)

    def norm2_02(self, t: Jet) -> Jet:
        return jeinsum("ik,jl,ij,kl->", self.ginv, self.ginv, t, t)

    def norm2_11(self, a: Jet) -> Jet:
        """|A|^2 of a (1,1) tensor stored as ``A[i,j] = A^i_j``."""
        return jeinsum("ik,jl,ij,kl->", self.g, self.ginv, a, a)

    def trace_02(self, t: Jet) -> Jet:
        return jeinsum("ij,ij->", self.ginv, t)

    def apply(self, x: Jet, f: Jet) -> Jet:
        """Directional derivative X(f) = X^i d_i f."""
        return jeinsum("i,i->", x, f.d())

    # -- derivatives of fields ----------------------------------------------

    def grad(self, f: Jet) -> Jet:
        return self.raise_(f.d())

    def hessian(self, f: Jet) -> Jet:
        df = f.d()
        return df.d() - jeinsum("kij,k->ij", self.christoffel, df)

    def laplacian(self, f: Jet) -> Jet:
        return self.trace_02(self.hessian(f))

    def nabla_vector(self, x: Jet) -> Jet:
        """``A[i,j] = (nabla_j X)^i``."""
        return x.d() + jeinsum("ijk,k->ij", self.christoffel, x)

    def nabla_covector(self, w: Jet) -> Jet:
        """``A[i,j] = (nabla_i w)_j``."""
        return w.d().swapaxes(-1, -2) - jeinsum("kij,k->ij", self.christoffel, w)

    def nabla_02(self, t: Jet) -> Jet:
        """``A[i,k,j] = (nabla_i T)_{kj}``."""
        dt = jlinear("kji->ikj", t.d())
        gam = self.christoffel
        return dt - jeinsum("mik,mj->ikj", gam, t) - jeinsum("mij,km->ikj", gam, t)

    def div_vector(self, x: Jet) -> Jet:
        return jlinear("ii->", self.nabla_vector(x))

    def div_covector(self, w: Jet) -> Jet:
        return self.trace_02(self.nabla_covector(w))

    def div_02(self, t: Jet) -> Jet:
        """``div(T)_j = g^{ik} (nabla_i T)_{kj}``."""
        return jeinsum("ik,ikj->j", self.ginv, self.nabla_02(t))

    def lie_metric(self, x: Jet) -> Jet:
        """(L_X g)_ij from partial derivatives only (no Christoffels)."""
        dg = self.g.d()
        dx = x.d()  # dx[k,i] = d_i X^k
        return (
            jeinsum("k,ijk->ij", x, dg)
            + jeinsum("kj,ki->ij", self.g, dx)
            + jeinsum("ik,kj->ij", self.g, dx)
        )

    @cached_property
    def scal_gradient(self) -> Jet:
        return self.grad(self.scal)

    @cached_property
    def scal_hessian(self) -> Jet:
        self.need(4, "Hess(scal)")
        return self.hessian(self.scal)
