"""Shared jets of (f, mu, phi) on a base metric."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from ..exprjet import Jet, Num, as_expr, jeinsum
from ..geometry import LocalGeometry, MetricPatch, ScalarField


def scalar_field(chart, value) -> ScalarField:
    if isinstance(value, ScalarField):
        return value
    if isinstance(value, (int, float)):
        value = Num(float(value))
    return ScalarField(chart, as_expr(value))


class BaseFields:
    """f, mu, phi and their derivatives on ``(B, g_B)`` over a batch of points."""

    def __init__(self, base: MetricPatch, points, order: int, f=0.0, mu=0.0, phi=1.0):
        chart = base.chart
        self.geo = LocalGeometry(base, points, order)
        self.n = self.geo.n
        self.f = self.geo.field(scalar_field(chart, f))
        self.mu = self.geo.field(scalar_field(chart, mu))
        self.phi = self.geo.field(scalar_field(chart, phi))
        if np.any(self.phi.value <= 0):
            raise ValueError("warping function must be positive at every sample point")

    @cached_property
    def df(self) -> Jet:
        return self.f.d()

    @cached_property
    def dphi(self) -> Jet:
        return self.phi.d()

    @cached_property
    def xi(self) -> Jet:
        return self.geo.raise_(self.df)

    @cached_property
    def grad_phi(self) -> Jet:
        return self.geo.raise_(self.dphi)

    @cached_property
    def hess(self) -> Jet:
        return self.geo.hessian(self.f)

    @cached_property
    def lap(self) -> Jet:
        return self.geo.trace_02(self.hess)

    @cached_property
    def lap_phi(self) -> Jet:
        return self.geo.laplacian(self.phi)

    @cached_property
    def xi2(self) -> Jet:
        return self.geo.norm2_vector(self.xi)

    @cached_property
    def grad_phi2(self) -> Jet:
        return self.geo.norm2_covector(self.dphi)

    @cached_property
    def xi_phi(self) -> Jet:
        """(grad f)(phi) = d phi(xi)."""
        return jeinsum("i,i->", self.xi, self.dphi)

    @cached_property
    def traceless_hess2(self) -> Jet:
        t = self.hess - (self.lap / self.n).expand(-1).expand(-1) * self.geo.g
        return self.geo.norm2_02(t)

    def e36(self) -> np.ndarray:
        """Delta f + mu |grad f|^2 - n (grad f)(phi)/phi."""
        return (
            self.lap.value
            + self.mu.value * self.xi2.value
            - self.n * self.xi_phi.value / self.phi.value
        )

    def lambda_base(self) -> Jet:
        return self.geo.scal - self.xi_phi / self.phi
