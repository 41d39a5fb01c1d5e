"""Pointwise identities for a base function f subject to a warping function phi.

The tensor condition studied here is

    Hess f - (n/2phi)(df (x) dphi + dphi (x) df) + mu df (x) df = 0,

whose trace is the scalar condition Delta f + mu|grad f|^2 = n dphi(grad f)/phi.
Divergences of (0,2) tensors are taken on the first slot.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from ..exprjet import Jet, jeinsum
from ..geometry import MetricPatch, TensorValue
from .base import BaseFields


def _outer(a: Jet, b: Jet) -> Jet:
    return jeinsum("i,j->ij", a, b)


def _s(x) -> Jet:
    """Scalar jet broadcast against a (0,2) tensor jet."""
    return x.expand(-1).expand(-1)


class Section33Fields(BaseFields):
    """Adds the divergence terms needed by the identities on top of :class:`BaseFields`."""

    @cached_property
    def rrr(self) -> Jet:
        sym = _outer(self.df, self.dphi) + _outer(self.dphi, self.df)
        return self.hess - _s(self.n / (2.0 * self.phi)) * sym + _s(self.mu) * _outer(self.df, self.df)

    @cached_property
    def hess_xi(self) -> Jet:
        """Hess f(xi, .) as a one-form."""
        return jeinsum("ij,j->i", self.hess, self.xi)

    @cached_property
    def div_hess_xi(self) -> Jet:
        return self.geo.div_covector(self.hess_xi)

    @cached_property
    def div_hess(self) -> Jet:
        return self.geo.div_02(self.hess)

    @cached_property
    def nabla_grad_phi(self) -> Jet:
        return self.geo.nabla_vector(self.grad_phi)

    @cached_property
    def nabla_xi_grad_phi_xi(self) -> Jet:
        """g(nabla_xi grad phi, xi)."""
        return jeinsum("ij,ik,j,k->", self.geo.g, self.nabla_grad_phi, self.xi, self.xi)

    @cached_property
    def d_xi2(self) -> Jet:
        return self.xi2.d()

    @cached_property
    def dmu(self) -> Jet:
        return self.mu.d()

    def e38_rhs(self) -> np.ndarray:
        phi = self.phi.value
        xphi = self.xi_phi.value
        lap = self.lap.value
        mu = self.mu.value
        xi2 = self.xi2.value
        return (
            self.n * (lap / phi - xphi / phi**2) * xphi
            + self.n / phi * self.nabla_xi_grad_phi_xi.value
            - 0.5 * mu * np.einsum("bi,bi->b", self.d_xi2.value, self.xi.value)
            - mu * lap * xi2
            - np.einsum("bi,bi->b", self.dmu.value, self.xi.value) * xi2
        )


def _fields(base: MetricPatch, f, mu, phi, p, order: int = 3) -> Section33Fields:
    return Section33Fields(base, np.atleast_2d(np.asarray(p, dtype=float)), order, f=f, mu=mu, phi=phi)


def _o(arr, p):
    arr = np.asarray(arr)
    return arr[0] if np.ndim(p) == 1 else arr


def condition_rrr_residual(base: MetricPatch, f, mu, phi, p) -> TensorValue:
    """The tensor condition as a symmetric (0,2) residual at ``p``."""
    s = _fields(base, f, mu, phi, p, 2)
    return TensorValue.symmetric(_o(s.rrr.value, p), "ll", np.asarray(p))


def condition_rrr_details(base: MetricPatch, f, mu, phi, p) -> dict[str, np.ndarray]:
    """Trace of the tensor residual next to the scalar condition, and the nabla xi audit.

    ``trace_minus_scalar`` vanishes identically.  ``nabla_xi_formula`` is
    nabla xi minus (n/2phi)(df (x) grad phi + dphi (x) xi) - mu df (x) xi with
    ``A[i,j] = (nabla_j xi)^i``; it is the raised tensor residual and so
    vanishes wherever the tensor condition does.
    """
    s = _fields(base, f, mu, phi, p, 2)
    tr = s.geo.trace_02(s.rrr).value
    e37 = s.e36()
    phi_v = s.phi.value[:, None, None]
    mu_v = s.mu.value[:, None, None]
    xi, gphi, df, dphi = s.xi.value, s.grad_phi.value, s.df.value, s.dphi.value
    formula = (s.n / (2 * phi_v)) * (
        np.einsum("bi,bj->bij", gphi, df) + np.einsum("bi,bj->bij", xi, dphi)
    ) - mu_v * np.einsum("bi,bj->bij", xi, df)
    nabla_xi = s.geo.nabla_vector(s.xi).value
    return {
        "trace": _o(tr, p),
        "scalar_condition": _o(e37, p),
        "trace_minus_scalar": _o(tr - e37, p),
        "nabla_xi_formula": _o(nabla_xi - formula, p),
    }


def section33_pointwise_residual(base: MetricPatch, f, mu, phi, p) -> dict[str, np.ndarray]:
    """Signed residuals of the three divergence identities and the two auxiliary divergences.

    ``e40`` holds for every f.  ``e38`` and ``e51`` are consequences of the
    tensor condition, so they are only meaningful where it holds.
    ``aux_div_phi`` and ``aux_div_mu`` are one-form residuals of the expanded
    divergences of (1/phi) df (x) dphi and mu df (x) df.
    """
    s = _fields(base, f, mu, phi, p, 3)
    n = s.n
    lap = s.lap.value
    hess2 = s.geo.norm2_02(s.hess).value
    traceless2 = s.traceless_hess2.value
    div_hess_xi_v = s.div_hess_xi.value
    div_hess_at_xi = np.einsum("bi,bi->b", s.div_hess.value, s.xi.value)

    e40 = div_hess_at_xi - (div_hess_xi_v - traceless2 - lap**2 / n)
    rhs38 = s.e38_rhs()
    e38 = div_hess_at_xi - rhs38
    e51 = div_hess_xi_v - (traceless2 + lap**2 / n + rhs38)

    phi = s.phi.value[:, None]
    t_phi = _outer(s.df, s.dphi) / _s(s.phi)
    aux_phi = s.geo.div_02(t_phi).value - (
        (lap / s.phi.value - s.xi_phi.value / s.phi.value**2)[:, None] * s.dphi.value
        + s.geo.lower(jeinsum("ij,j->i", s.nabla_grad_phi, s.xi)).value / phi
    )
    t_mu = _s(s.mu) * _outer(s.df, s.df)
    mu = s.mu.value[:, None]
    aux_mu = s.geo.div_02(t_mu).value - (
        0.5 * mu * s.d_xi2.value
        + mu * lap[:, None] * s.df.value
        + np.einsum("bi,bi->b", s.dmu.value, s.xi.value)[:, None] * s.df.value
    )
    return {
        "e40": _o(e40, p),
        "e38": _o(e38, p),
        "e51": _o(e51, p),
        "aux_div_phi": _o(aux_phi, p),
        "aux_div_mu": _o(aux_mu, p),
        "hess_norm2": _o(hess2, p),
        "rrr_max": _o(np.max(np.abs(s.rrr.value), axis=(1, 2)), p),
    }
