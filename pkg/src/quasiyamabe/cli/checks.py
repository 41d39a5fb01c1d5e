"""Check registry: identifier -> residual function, default tolerance and status.

Every check returns one non-negative magnitude per sample point (integral
checks return a single value).  Checks marked ``gated`` are consequences of
the soliton equation (or of the tensor condition on f and phi) and only
points where that premise holds count toward the verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from ..exprjet import ExprDomainError, OrderExceededError, as_expr
from ..geometry import GeometryError, LocalGeometry, ScalarField
from ..soliton import GATE_TOL, SolitonError, SolitonState, fit_constants
from ..warp import (
    WarpConstructionError,
    WarpError,
    compact_integral_checks,
    condition_e36_residual,
    condition_rrr_residual,
    e56_trajectory,
    lambda_base,
    lift_checks,
    required_fiber_scal,
    section33_pointwise_residual,
    theorem3_verify,
    warped_scal_crosscheck,
)
from .scenario import InputError, Setup


@dataclass
class Outcome:
    values: np.ndarray
    details: dict = field(default_factory=dict)
    gate: np.ndarray | None = None


@dataclass(frozen=True)
class CheckSpec:
    id: str
    fn: Callable[["Context", dict], Outcome]
    tol: float
    report_only: bool = False
    min_order: int = 2
    summary: str = ""


class Context:
    """Lazily shared state for one scenario run."""

    def __init__(self, setup: Setup, points: np.ndarray, order: int):
        self.setup = setup
        self.points = points
        self.order = order

    @cached_property
    def geo(self) -> LocalGeometry:
        return LocalGeometry(self.setup.metric, self.points, self.order)

    @cached_property
    def fit(self):
        return fit_constants(self.setup.instance(), self.points)

    @cached_property
    def coefficients(self) -> dict:
        if self.setup.data.get("fit_coefficients"):
            return {"lambda": self.fit.lam, "mu": self.fit.mu, "fitted": True}
        return {"fitted": False}

    @cached_property
    def instance(self):
        if self.coefficients["fitted"]:
            return self.setup.instance(self.fit.lam, self.fit.mu)
        return self.setup.instance()

    @cached_property
    def state(self) -> SolitonState:
        return SolitonState(self.instance, self.points, self.order)

    @cached_property
    def soliton_gate(self) -> np.ndarray:
        return self.state.soliton_mask(GATE_TOL)

    # base-level data (the scenario itself unless it is a warped product)

    @property
    def base(self):
        return self.setup.base()

    @property
    def base_points(self) -> np.ndarray:
        return self.points[:, : self.base.chart.dimension]

    def base_field(self, name: str, default=None):
        if name == "f" and "f" not in self.setup.fields:
            raise InputError("this check needs fields.f")
        return self.setup.field_or(name, default)

    @cached_property
    def section33(self) -> dict:
        return section33_pointwise_residual(
            self.base, self.base_field("f"), self.base_field("mu", 0.0),
            self.base_field("phi", 1.0), self.base_points,
        )

    def expected(self, entry: dict, chart=None):
        if "expected" not in entry or isinstance(entry["expected"], dict):
            raise InputError(f"check {entry['id']!r} needs an expected expression")
        chart = chart or self.setup.chart
        pts = self.points[:, : chart.dimension]
        return ScalarField(chart, as_expr(entry["expected"])).jet(pts, 0).value

    def require_warped(self, cid: str):
        if self.setup.warped is None:
            raise InputError(f"check {cid!r} needs a warped scenario")
        return self.setup.warped

    @cached_property
    def torus(self) -> dict:
        pc = self.setup.periodic
        if pc is None:
            raise InputError("torus checks need a periodic section")
        return compact_integral_checks(
            pc, self.setup.metric, self.base_field("f"), self.base_field("mu", 0.0),
            self.base_field("phi", 1.0),
        )


def _maxabs(a) -> np.ndarray:
    a = np.abs(np.asarray(a, dtype=float))
    return a.reshape(len(a), -1).max(axis=1) if a.ndim > 1 else a


# -- geometry -----------------------------------------------------------------


def _scal(ctx: Context, entry) -> Outcome:
    scal = ctx.geo.scal.value
    exp = ctx.expected(entry)
    return Outcome(np.abs(scal - exp), {"scal": scal})


def _riemann(ctx: Context, entry) -> Outcome:
    r = ctx.geo.riemann_lowered.value
    parts = [
        r + r.swapaxes(1, 2),
        r + r.swapaxes(3, 4),
        r - r.transpose(0, 3, 4, 1, 2),
        r + np.einsum("bjlki->bijkl", r) + np.einsum("blikj->bijkl", r),
    ]
    scale = 1 + _maxabs(r)
    return Outcome(np.max([_maxabs(p) for p in parts], axis=0) / scale)


def _metric_compat(ctx: Context, entry) -> Outcome:
    geo = ctx.geo
    return Outcome(_maxabs(geo.nabla_02(geo.g).value) / (1 + _maxabs(geo.g.value)))


def _contracted_bianchi(ctx: Context, entry) -> Outcome:
    geo = ctx.geo
    ds = geo.scal.d().value
    res = geo.div_02(geo.ricci).value - 0.5 * ds
    return Outcome(_maxabs(res) / (1 + _maxabs(ds)))


# -- soliton ------------------------------------------------------------------


def _soliton_residual(ctx: Context, entry) -> Outcome:
    st = ctx.state
    res = st.e22.value if ctx.instance.gradient else st.e8.value
    return Outcome(_maxabs(res), {"coefficients": ctx.coefficients})


def _gated(fn):
    def run(ctx: Context, entry) -> Outcome:
        out = fn(ctx, entry)
        out.gate = ctx.soliton_gate
        return out

    run.__doc__ = fn.__doc__
    return run


@_gated
def _trace(ctx: Context, entry) -> Outcome:
    return Outcome(np.abs(ctx.state.trace_identity_residual()))


@_gated
def _pairing(ctx: Context, entry) -> Outcome:
    return Outcome(np.abs(ctx.state.pairing_identity_residual()))


@_gated
def _quadratic(ctx: Context, entry) -> Outcome:
    val, scale = ctx.state.lambda_quadratic()
    return Outcome(np.abs(val) / (1 + scale), {"value": val})


@_gated
def _quadratic_printed(ctx: Context, entry) -> Outcome:
    val, scale = ctx.state.lambda_quadratic_as_printed()
    return Outcome(np.abs(val) / (1 + scale), {"value": val})


@_gated
def _bochner(ctx: Context, entry) -> Outcome:
    res, scale = ctx.state.bochner_residual()
    return Outcome(np.abs(res) / (1 + scale), {"signed": res})


@_gated
def _nabla_xi(ctx: Context, entry) -> Outcome:
    return Outcome(_maxabs(ctx.state.nabla_xi_residual()))


@_gated
def _geodesic(ctx: Context, entry) -> Outcome:
    return Outcome(_maxabs(ctx.state.generalized_geodesic_residual()))


@_gated
def _ricci_contraction(ctx: Context, entry) -> Outcome:
    r = ctx.state.ricci_contraction()
    vals = np.max([_maxabs(v) for v in r.values()], axis=0)
    return Outcome(vals, {k: _maxabs(v) for k, v in r.items()})


@_gated
def _max_principle(ctx: Context, entry) -> Outcome:
    out = ctx.state.maximum_principle()
    lhs, hyp = out["lhs"], out["hypothesis"]
    return Outcome(np.where(hyp, np.maximum(0.0, -lhs), 0.0), {"lhs": lhs, "hypothesis": hyp})


def _discriminant(ctx: Context, entry) -> Outcome:
    d = ctx.state.lambda_discriminant()
    return Outcome(np.maximum(0.0, -d), {"discriminant": d}, ctx.soliton_gate)


def _fit(ctx: Context, entry) -> Outcome:
    fit = ctx.fit
    val = fit.max_residual
    exp = entry.get("expected")
    if isinstance(exp, dict):
        if "lambda" in exp:
            val = max(val, abs(fit.lam - exp["lambda"]))
        if "mu" in exp:
            val = max(val, abs(fit.mu - exp["mu"]))
    details = {
        "lambda": fit.lam,
        "mu": fit.mu,
        "max_residual": fit.max_residual,
        "identifiable": fit.identifiable,
        "lambda_identifiable": fit.lambda_identifiable,
        "mu_identifiable": fit.mu_identifiable,
        "rank": fit.rank,
    }
    if isinstance(exp, dict):
        details["expected"] = exp
    return Outcome(np.array([val]), details)


def _constants_audit(ctx: Context, entry) -> Outcome:
    """Soliton residual under the scenario's stated (unfitted) constants."""
    inst = ctx.setup.instance()
    st = SolitonState(inst, ctx.points, 2)
    return Outcome(
        _maxabs(st.e22.value),
        {
            "lambda": ctx.setup.data.get("fields", {}).get("lambda"),
            "mu": ctx.setup.data.get("fields", {}).get("mu"),
            "trace_identity": st.trace_identity_residual(),
        },
    )


# -- warped products ------------------------------------------------------------


def _block(ctx: Context, entry) -> Outcome:
    wp = ctx.require_warped(entry["id"])
    n = wp.n
    g = ctx.geo.g.value
    hess = ctx.state.hess.value
    return Outcome(np.maximum(_maxabs(g[:, :n, n:]), _maxabs(hess[:, :n, n:])))


def _lift(ctx: Context, entry) -> Outcome:
    wp = ctx.require_warped(entry["id"])
    r = lift_checks(wp, ctx.base_field("f"), ctx.points)
    return Outcome(np.max([_maxabs(v) for v in r.values()], axis=0), {k: _maxabs(v) for k, v in r.items()})


def _scal_cross(ctx: Context, entry) -> Outcome:
    wp = ctx.require_warped(entry["id"])
    diff = warped_scal_crosscheck(wp, ctx.points)
    return Outcome(np.abs(diff) / (1 + np.abs(ctx.geo.scal.value)))


def _e36(ctx: Context, entry) -> Outcome:
    r = condition_e36_residual(
        ctx.base, ctx.base_field("f"), ctx.base_field("mu", 0.0), ctx.base_field("phi", 1.0), ctx.base_points
    )
    return Outcome(np.abs(r))


def _lambda_base(ctx: Context, entry) -> Outcome:
    lb = lambda_base(ctx.base, ctx.base_field("f"), ctx.base_field("phi", 1.0), ctx.base_points)
    exp = ctx.expected(entry, ctx.base.chart)
    return Outcome(np.abs(lb - exp), {"lambda_base": lb})


def _fiber_scal(ctx: Context, entry) -> Outcome:
    wp = ctx.require_warped(entry["id"])
    req = required_fiber_scal(
        wp.base, ctx.base_field("f"), wp.phi, ctx.base_field("lambda", 0.0), wp.m, ctx.base_points
    )
    actual = LocalGeometry(wp.fiber, ctx.points[:, wp.n :], 2).scal.value
    return Outcome(np.abs(req - actual), {"required": req, "actual": actual, "spread": float(np.ptp(req))})


def _theorem3(ctx: Context, entry) -> Outcome:
    wp = ctx.require_warped(entry["id"])
    try:
        r = theorem3_verify(
            wp, ctx.base_field("f"), ctx.base_field("lambda", 0.0), ctx.base_field("mu", 0.0), ctx.points
        )
    except WarpConstructionError as err:
        return Outcome(np.abs(np.asarray(err.report["e36"])), {"error": str(err)})
    per = r["per_point"]
    vals = np.max([per[k] for k in ("base_residual", "product_residual", "reduction", "fiber_block", "fiber_scal")], axis=0)
    details = {k: v for k, v in r.items() if k not in ("per_point", "fiber_scal_required", "fiber_scal_actual")}
    return Outcome(vals, details)


def _rrr(ctx: Context, entry) -> Outcome:
    r = condition_rrr_residual(
        ctx.base, ctx.base_field("f"), ctx.base_field("mu", 0.0), ctx.base_field("phi", 1.0), ctx.base_points
    )
    return Outcome(_maxabs(np.asarray(r)))


def _rrr_gate(ctx: Context) -> np.ndarray:
    s = ctx.section33
    return s["rrr_max"] <= GATE_TOL * (1 + s["hess_norm2"])


def _s33_e40(ctx: Context, entry) -> Outcome:
    s = ctx.section33
    return Outcome(np.abs(s["e40"]) / (1 + s["hess_norm2"]), {"signed": s["e40"]})


def _s33_e38(ctx: Context, entry) -> Outcome:
    s = ctx.section33
    return Outcome(np.abs(s["e38"]) / (1 + s["hess_norm2"]), {"signed": s["e38"]}, _rrr_gate(ctx))


def _s33_e51(ctx: Context, entry) -> Outcome:
    s = ctx.section33
    return Outcome(np.abs(s["e51"]) / (1 + s["hess_norm2"]), {"signed": s["e51"]}, _rrr_gate(ctx))


def _s33_aux(ctx: Context, entry) -> Outcome:
    s = ctx.section33
    return Outcome(np.maximum(_maxabs(s["aux_div_phi"]), _maxabs(s["aux_div_mu"])))


# -- torus integrals --------------------------------------------------------------


def _t_lap(ctx: Context, entry) -> Outcome:
    return Outcome(np.array([abs(ctx.torus["integral_laplacian"])]), {"value": ctx.torus["integral_laplacian"]})


def _t_ibp(ctx: Context, entry) -> Outcome:
    r = ctx.torus["ibp"]
    return Outcome(np.array([abs(r["residual"])]), r)


def _t_prop(ctx: Context, entry) -> Outcome:
    r = ctx.torus["proposition"]
    return Outcome(np.array([abs(r["residual"])]), r)


def _t_chain(ctx: Context, entry) -> Outcome:
    r = ctx.torus["proposition"]
    return Outcome(np.array([abs(r["mu_chain_residual"])]), r)


def _t_e56(ctx: Context, entry) -> Outcome:
    r = dict(ctx.torus["e56"])
    pc = ctx.setup.periodic
    r["trajectory"] = e56_trajectory(
        pc, ctx.setup.metric, ctx.base_field("f"), ctx.base_field("mu", 0.0), ctx.base_field("phi", 1.0)
    )
    return Outcome(np.array([abs(r["residual"])]), r)


def _t_corollary(ctx: Context, entry) -> Outcome:
    r = ctx.torus["corollary"]
    return Outcome(np.array([r["er_residual_normalized"]]), r)


_SPECS = [
    CheckSpec("scal", _scal, 1e-8, summary="scalar curvature against an expected expression"),
    CheckSpec("riemann-symmetries", _riemann, 1e-7, summary="Riemann symmetries and first Bianchi"),
    CheckSpec("metric-compatibility", _metric_compat, 1e-7, min_order=2, summary="nabla g = 0"),
    CheckSpec("contracted-bianchi", _contracted_bianchi, 1e-7, min_order=3, summary="div Ric = d scal / 2"),
    CheckSpec("soliton-residual", _soliton_residual, 1e-8, summary="defining soliton equation"),
    CheckSpec("trace-identity", _trace, 1e-8, summary="trace of the gradient equation"),
    CheckSpec("pairing-identity", _pairing, 1e-8, summary="gradient equation paired with Hess f"),
    CheckSpec("lambda-quadratic", _quadratic, 1e-7, summary="quadratic satisfied by lambda"),
    CheckSpec("lambda-quadratic-as-printed", _quadratic_printed, 1e-7, True,
              summary="the same quadratic with the alternative scal signs (audit)"),
    CheckSpec("discriminant", _discriminant, 1e-8, True, summary="discriminant of the lambda quadratic"),
    CheckSpec("bochner", _bochner, 1e-8, min_order=3, summary="Bochner-type formula for |xi|^2"),
    CheckSpec("nabla-xi", _nabla_xi, 1e-8, summary="closed form of nabla xi"),
    CheckSpec("generalized-geodesic", _geodesic, 1e-8, summary="nabla_xi xi proportional to xi"),
    CheckSpec("ricci-contraction", _ricci_contraction, 1e-7, min_order=3, summary="Q xi and S(xi, xi)"),
    CheckSpec("maximum-principle", _max_principle, 1e-8, min_order=3,
              summary="Delta |xi|^2 >= 0 under the Ricci bound, mu = 0"),
    CheckSpec("fit", _fit, 1e-8, summary="least-squares constants (lambda, mu)"),
    CheckSpec("fit-report", _fit, 1e-8, True, summary="least-squares constants, reported only"),
    CheckSpec("paper-constants-audit", _constants_audit, 1e-8, True,
              summary="soliton residual under the stated constants"),
    CheckSpec("block-structure", _block, 1e-10, summary="vanishing mixed blocks of g and Hess f"),
    CheckSpec("lift", _lift, 1e-9, summary="lifted gradient and base Hessian"),
    CheckSpec("warped-scal-crosscheck", _scal_cross, 1e-7, summary="warped scal formula against direct"),
    CheckSpec("e36", _e36, 1e-8, summary="Delta f + mu|grad f|^2 = n grad f(phi)/phi"),
    CheckSpec("lambda-base", _lambda_base, 1e-8, summary="base coefficient scal_B - grad f(phi)/phi"),
    CheckSpec("fiber-scal", _fiber_scal, 1e-8, summary="required fiber scal equals the fiber's scal"),
    CheckSpec("theorem3", _theorem3, 1e-8, summary="soliton transfer between base and warped product"),
    CheckSpec("rrr", _rrr, 1e-8, summary="tensor condition on (f, mu, phi)"),
    CheckSpec("section33-e40", _s33_e40, 1e-8, min_order=3, summary="div(Hess f)(xi) identity"),
    CheckSpec("section33-e38", _s33_e38, 1e-8, True, min_order=3,
              summary="divergence of the tensor condition (audit)"),
    CheckSpec("section33-e51", _s33_e51, 1e-8, True, min_order=3,
              summary="div(Hess f(xi)) under the tensor condition (audit)"),
    CheckSpec("section33-aux", _s33_aux, 1e-8, min_order=3, summary="expanded auxiliary divergences"),
    CheckSpec("torus-laplacian-integral", _t_lap, 1e-10, summary="integral of Delta f"),
    CheckSpec("torus-ibp", _t_ibp, 1e-7, summary="integration by parts for d|xi|^2(xi)"),
    CheckSpec("torus-proposition", _t_prop, 1e-7, summary="traceless Hessian integral identity"),
    CheckSpec("torus-mu-chain", _t_chain, 1e-7, True, summary="mu^2 |xi|^4 step of the chain (audit)"),
    CheckSpec("torus-e56", _t_e56, 1e-7, True, summary="five-term integral identity (audit)"),
    CheckSpec("torus-corollary", _t_corollary, 1e-7, True, summary="normalized residual of the product system"),
]

REGISTRY: dict[str, CheckSpec] = {s.id: s for s in _SPECS}

RUNTIME_ERRORS = (SolitonError, WarpError, GeometryError, ExprDomainError, OrderExceededError, ValueError)
