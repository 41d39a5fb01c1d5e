"""Warped products B x_phi F and the transfer of gradient solitons from the base."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exprjet import BinOp, Num
from ..geometry import Chart, LocalGeometry, MetricPatch, ScalarField
from ..soliton import SolitonInstance, SolitonState
from .base import BaseFields, scalar_field


class WarpError(ValueError):
    """Invalid warped-product data."""


class WarpConstructionError(WarpError):
    """The base data violate a precondition of the soliton construction."""

    def __init__(self, message: str, report: dict):
        self.report = report
        super().__init__(message)


@dataclass(frozen=True)
class WarpedProduct:
    base: MetricPatch
    fiber: MetricPatch
    phi: ScalarField
    metric: MetricPatch

    @property
    def chart(self) -> Chart:
        return self.metric.chart

    @property
    def n(self) -> int:
        return self.base.chart.dimension

    @property
    def m(self) -> int:
        return self.fiber.chart.dimension

    def split(self, points) -> tuple[np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts[:, : self.n], pts[:, self.n :]

    def lift(self, f) -> ScalarField:
        """Pull a base function back to the product chart."""
        f = scalar_field(self.base.chart, f)
        return ScalarField(self.chart, f.expr)


def build_warped(base, fiber: MetricPatch, phi, samples) -> WarpedProduct:
    """Assemble g = g_B + phi^2 g_F on the product chart.

    ``samples`` are base points (or product points) at which phi must be
    positive.  When phi is the literal 1 the fiber block is g_F verbatim.
    """
    if isinstance(base, SolitonInstance):
        base = base.metric
    if isinstance(fiber, SolitonInstance):
        fiber = fiber.metric
    clash = set(base.chart.coordinates) & set(fiber.chart.coordinates)
    if clash:
        raise WarpError(f"base and fiber share coordinate names {sorted(clash)}")
    phi = scalar_field(base.chart, phi)
    pts = np.atleast_2d(np.asarray(samples, dtype=float))[:, : base.chart.dimension]
    vals = phi.jet(pts, 0).value
    if np.any(~(vals > 0)):
        bad = pts[np.argmax(~(vals > 0))]
        raise WarpError(f"warping function is not positive at base point {bad.tolist()}")

    n, m = base.chart.dimension, fiber.chart.dimension
    chart = Chart(
        base.chart.coordinates + fiber.chart.coordinates,
        base.chart.constraints + fiber.chart.constraints,
        name=f"{base.chart.name}x{fiber.chart.name}" if base.chart.name else "",
    )
    unit = phi.expr == Num(1.0)
    phi2 = BinOp("^", phi.expr, Num(2.0))
    rows = []
    for i in range(n + m):
        row = []
        for j in range(i, n + m):
            if j < n:
                row.append(base.component(i, j))
            elif i < n:
                row.append(Num(0.0))
            else:
                c = fiber.component(i - n, j - n)
                row.append(c if unit or c == Num(0.0) else BinOp("*", phi2, c))
        rows.append(tuple(row))
    return WarpedProduct(base, fiber, phi, MetricPatch(chart, tuple(rows)))


def lift_checks(wp: WarpedProduct, f, points, order: int = 2) -> dict[str, np.ndarray]:
    """Lifted gradient and base-block Hessian against their base counterparts."""
    bpts, _ = wp.split(points)
    prod = LocalGeometry(wp.metric, points, order)
    base = LocalGeometry(wp.base, bpts, order)
    ft = prod.field(wp.lift(f))
    fb = base.field(scalar_field(wp.base.chart, f))
    n = wp.n
    grad_p = prod.grad(ft).value
    grad_b = base.grad(fb).value
    lifted = np.concatenate([grad_b, np.zeros((len(grad_b), wp.m))], axis=1)
    hp = prod.hessian(ft).value
    return {
        "grad": grad_p - lifted,
        "hess_base": hp[:, :n, :n] - base.hessian(fb).value,
        "hess_mixed": hp[:, :n, n:],
    }


def _scal_parts(wp: WarpedProduct, points, order: int = 2):
    bpts, fpts = wp.split(points)
    bf = BaseFields(wp.base, bpts, order, phi=wp.phi)
    scal_f = LocalGeometry(wp.fiber, fpts, order).scal.value
    return bf, scal_f


def warped_scal_formula(wp: WarpedProduct, points) -> np.ndarray:
    """scal_B + scal_F/phi^2 - 2m Delta(phi)/phi - m(m-1)|grad phi|^2/phi^2."""
    bf, scal_f = _scal_parts(wp, points)
    m = wp.m
    phi = bf.phi.value
    out = (
        bf.geo.scal.value
        + scal_f / phi**2
        - 2 * m * bf.lap_phi.value / phi
        - m * (m - 1) * bf.grad_phi2.value / phi**2
    )
    return out[0] if np.ndim(points) == 1 else out


def warped_scal_crosscheck(wp: WarpedProduct, points) -> np.ndarray:
    """Direct product-metric scal minus the warped-product formula."""
    direct = LocalGeometry(wp.metric, points, 2).scal.value
    diff = direct - np.atleast_1d(warped_scal_formula(wp, np.atleast_2d(points)))
    return diff[0] if np.ndim(points) == 1 else diff


def _base_value(base: MetricPatch, p, fn, order: int = 2, **fields):
    bf = BaseFields(base, np.atleast_2d(p), order, **fields)
    out = np.asarray(fn(bf))
    return out[0] if np.ndim(p) == 1 else out


def condition_e36_residual(base: MetricPatch, f, mu, phi, p):
    """Delta f + mu |grad f|^2 - n (grad f)(phi)/phi."""
    return _base_value(base, p, lambda b: b.e36(), f=f, mu=mu, phi=phi)


def lambda_base(base: MetricPatch, f, phi, p):
    """scal_B - (grad f)(phi)/phi."""
    return _base_value(base, p, lambda b: b.lambda_base().value, f=f, phi=phi)


def required_fiber_scal(base: MetricPatch, f, phi, lam, m: int, p):
    """(lambda - lambda_B) phi^2 + 2m phi Delta(phi) + m(m-1)|grad phi|^2.

    This is the scalar curvature the fiber must carry; it has to come out
    constant across base points.
    """
    lam_f = scalar_field(base.chart, lam)

    def fn(b: BaseFields):
        lam_v = b.geo.field(lam_f).value
        phi = b.phi.value
        return (
            (lam_v - b.lambda_base().value) * phi**2
            + 2 * m * phi * b.lap_phi.value
            + m * (m - 1) * b.grad_phi2.value
        )

    return _base_value(base, p, fn, f=f, phi=phi)


def theorem3_verify(wp: WarpedProduct, f, lam, mu, points, tol: float = 1e-8) -> dict:
    """Both sides of the base <-> warped-product soliton equivalence.

    ``points`` are product-chart points; their base parts serve as base
    samples.  Raises :class:`WarpConstructionError` if the base condition
    on (f, mu, phi) fails.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    bpts, fpts = wp.split(pts)
    n = wp.n
    bf = BaseFields(wp.base, bpts, 2, f=f, mu=mu, phi=wp.phi)
    e36 = bf.e36()
    e36_scale = 1 + np.abs(bf.lap.value) + np.abs(bf.mu.value * bf.xi2.value)
    if np.any(np.abs(e36) > tol * e36_scale):
        raise WarpConstructionError(
            "base data violate Delta f + mu|grad f|^2 = n (grad f)(phi)/phi",
            {"points": bpts.tolist(), "e36": e36.tolist()},
        )

    # base soliton with lambda_B
    lam_b = bf.lambda_base()
    geo_b = bf.geo
    base_res = (
        bf.hess.value
        + (lam_b.value - geo_b.scal.value)[:, None, None] * geo_b.g.value
        + bf.mu.value[:, None, None] * np.einsum("bi,bj->bij", bf.df.value, bf.df.value)
    )

    # lifted soliton on the product
    inst = SolitonInstance(wp.metric, potential=wp.lift(f), lam=wp.lift(lam).expr, mu=wp.lift(mu).expr)
    st = SolitonState(inst, pts, 2)
    prod_res = st.e22.value

    lam_p = st.lam.value
    reduction = (lam_p - st.scal.value) - (lam_b.value - geo_b.scal.value)

    required = np.atleast_1d(required_fiber_scal(wp.base, f, wp.phi, lam, wp.m, bpts))
    scal_f = LocalGeometry(wp.fiber, fpts, 2).scal.value
    phi = bf.phi.value
    g_f = LocalGeometry(wp.fiber, fpts, 0).g.value
    fiber_block = st.hess.value[:, n:, n:] - (bf.xi_phi.value * phi)[:, None, None] * g_f

    base_max = float(np.max(np.abs(base_res)))
    prod_max = float(np.max(np.abs(prod_res)))
    spread = float(np.ptp(required))
    mismatch = float(np.max(np.abs(required - scal_f)))
    fiber_scale = 1 + np.max(np.abs(required))
    preconditions = spread <= tol * fiber_scale and mismatch <= tol * fiber_scale
    base_ok = base_max <= tol
    prod_ok = prod_max <= tol
    return {
        "e36_max": float(np.max(np.abs(e36))),
        "base_residual_max": base_max,
        "product_residual_max": prod_max,
        "mixed_block_max": float(np.max(np.abs(prod_res[:, :n, n:]))),
        "fiber_scal_spread": spread,
        "fiber_scal_mismatch": mismatch,
        "fiber_scal_required": required,
        "fiber_scal_actual": scal_f,
        "reduction_max": float(np.max(np.abs(reduction))),
        "fiber_block_max": float(np.max(np.abs(fiber_block))),
        "base_ok": bool(base_ok),
        "product_ok": bool(prod_ok),
        "preconditions_ok": bool(preconditions),
        "iff_consistent": bool((not preconditions) or (base_ok == prod_ok)),
        "per_point": {
            "base_residual": np.max(np.abs(base_res), axis=(1, 2)),
            "product_residual": np.max(np.abs(prod_res), axis=(1, 2)),
            "reduction": np.abs(reduction),
            "fiber_block": np.max(np.abs(fiber_block), axis=(1, 2)),
            "fiber_scal": np.abs(required - scal_f),
            "e36": np.abs(e36),
        },
    }
