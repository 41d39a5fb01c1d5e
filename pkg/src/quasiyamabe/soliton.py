"""Pointwise residuals of the almost quasi-Yamabe soliton equation and its consequences.

An instance is (g, xi, lambda, mu) with

    1/2 L_xi g + (lambda - scal) g + mu eta (x) eta = 0,

and in the gradient case xi = grad f, eta = df:

    Hess f + (lambda - scal) g + mu df (x) df = 0.

Every identity below is evaluated as a signed residual on arbitrary input, so a
claimed consequence can be compared against whether the defining equation
actually holds at the same point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .exprjet import Jet, Num, as_expr, jeinsum
from .geometry import LocalGeometry, MetricPatch, OneForm, ScalarField, TensorValue, VectorField

DEFAULT_ORDER = 4
GATE_TOL = 1e-8


class SolitonError(ValueError):
    """A precondition of a soliton operation is violated."""


class NotGradientError(SolitonError):
    pass


def _scalar(chart, value) -> ScalarField:
    if isinstance(value, ScalarField):
        return value
    if isinstance(value, (int, float)):
        value = Num(float(value))
    return ScalarField(chart, as_expr(value))


@dataclass(frozen=True)
class SolitonInstance:
    """Metric, potential (f or xi), optional eta override and coefficients lambda, mu."""

    metric: MetricPatch
    potential: ScalarField | None = None
    xi: VectorField | None = None
    eta: OneForm | None = None
    lam: ScalarField = field(default=0.0)
    mu: ScalarField = field(default=0.0)
    constant_coefficients: bool = False

    def __post_init__(self):
        chart = self.metric.chart
        if (self.potential is None) == (self.xi is None):
            raise SolitonError("give exactly one of potential f or vector field xi")
        if self.potential is not None and not isinstance(self.potential, ScalarField):
            object.__setattr__(self, "potential", _scalar(chart, self.potential))
        if self.xi is not None and not isinstance(self.xi, VectorField):
            object.__setattr__(self, "xi", VectorField(chart, tuple(self.xi)))
        if self.eta is not None and not isinstance(self.eta, OneForm):
            object.__setattr__(self, "eta", OneForm(chart, tuple(self.eta)))
        object.__setattr__(self, "lam", _scalar(chart, self.lam))
        object.__setattr__(self, "mu", _scalar(chart, self.mu))

    @property
    def gradient(self) -> bool:
        return self.potential is not None

    @property
    def dimension(self) -> int:
        return self.metric.chart.dimension

    def with_coefficients(self, lam, mu) -> "SolitonInstance":
        chart = self.metric.chart
        return replace(self, lam=_scalar(chart, lam), mu=_scalar(chart, mu))

    def validate(self, points) -> None:
        """Check the stated invariants at sample points."""
        state = SolitonState(self, points, 1)
        if self.constant_coefficients:
            for name, j in (("lambda", state.lam), ("mu", state.mu)):
                v = j.value
                if np.ptp(v) > 1e-12 * (1 + np.max(np.abs(v))):
                    raise SolitonError(f"{name} is flagged constant but varies by {np.ptp(v):.3e}")
        if self.gradient and self.eta is not None:
            dev = np.max(np.abs(self.eta.jet(state.geo.points, 0).value - state.df.value))
            if dev > 1e-10:
                raise SolitonError(f"eta override differs from df by {dev:.3e}")


class SolitonState:
    """Jets of every soliton ingredient over a batch of points at one jet order."""

    def __init__(self, inst: SolitonInstance, points, order: int = DEFAULT_ORDER):
        self.inst = inst
        self.geo = LocalGeometry(inst.metric, points, order)
        self.n = self.geo.n
        self.order = order
        self.lam = self.geo.field(inst.lam)
        self.mu = self.geo.field(inst.mu)

    def need(self, order: int, what: str):
        self.geo.need(order, what)

    def _require_gradient(self, what: str):
        if not self.inst.gradient:
            raise NotGradientError(f"{what} is only defined for gradient instances")

    # -- fields ---------------------------------------------------------------

    @cached_property
    def f(self) -> Jet:
        self._require_gradient("the potential function")
        return self.geo.field(self.inst.potential)

    @cached_property
    def df(self) -> Jet:
        return self.f.d()

    @cached_property
    def xi(self) -> Jet:
        if self.inst.gradient:
            return self.geo.raise_(self.df)
        return self.geo.field(self.inst.xi)

    @cached_property
    def eta(self) -> Jet:
        if self.inst.eta is not None:
            return self.geo.field(self.inst.eta)
        if self.inst.gradient:
            return self.df
        return self.geo.lower(self.xi)

    @property
    def scal(self) -> Jet:
        return self.geo.scal

    @cached_property
    def lam_minus_scal(self) -> Jet:
        return self.lam - self.scal

    @cached_property
    def hess(self) -> Jet:
        return self.geo.hessian(self.f)

    @cached_property
    def lap(self) -> Jet:
        return self.geo.trace_02(self.hess)

    @cached_property
    def xi2(self) -> Jet:
        return self.geo.norm2_vector(self.xi)

    @cached_property
    def nabla_xi(self) -> Jet:
        return self.geo.nabla_vector(self.xi)

    @cached_property
    def nabla_xi2(self) -> Jet:
        return self.geo.norm2_11(self.nabla_xi)

    @cached_property
    def hess2(self) -> Jet:
        return self.geo.norm2_02(self.hess)

    @cached_property
    def xi_of_xi2(self) -> Jet:
        return self.geo.apply(self.xi, self.xi2)

    @cached_property
    def ricci_xi_xi(self) -> Jet:
        return jeinsum("ij,i,j->", self.geo.ricci, self.xi, self.xi)

    # -- defining equations ----------------------------------------------------

    @cached_property
    def e8(self) -> Jet:
        g = self.geo.g
        return (
            0.5 * self.geo.lie_metric(self.xi)
            + self.lam_minus_scal.expand(-1).expand(-1) * g
            + self.mu.expand(-1).expand(-1) * jeinsum("i,j->ij", self.eta, self.eta)
        )

    @cached_property
    def e22(self) -> Jet:
        self.need(2, "the gradient soliton residual")
        g = self.geo.g
        return (
            self.hess
            + self.lam_minus_scal.expand(-1).expand(-1) * g
            + self.mu.expand(-1).expand(-1) * jeinsum("i,j->ij", self.df, self.df)
        )

    def e22_scale(self) -> np.ndarray:
        g = self.geo.g.value
        parts = [
            np.abs(self.hess.value),
            np.abs((self.lam_minus_scal.value)[:, None, None] * g),
            np.abs(self.mu.value[:, None, None] * np.einsum("bi,bj->bij", self.df.value, self.df.value)),
        ]
        return np.max(np.stack(parts), axis=(0, 2, 3))

    def soliton_mask(self, tol: float = GATE_TOL) -> np.ndarray:
        """Points where the gradient equation holds to ``tol * (1 + scale)``."""
        res = np.max(np.abs(self.e22.value), axis=(1, 2))
        return res <= tol * (1 + self.e22_scale())

    # -- derived residuals (values) -----------------------------------------------

    def nabla_xi_residual(self) -> np.ndarray:
        """(nabla xi + (lambda - scal) I + mu df (x) xi)^i_j."""
        eye = np.eye(self.n)
        return (
            self.nabla_xi.value
            + self.lam_minus_scal.value[:, None, None] * eye
            + self.mu.value[:, None, None] * np.einsum("bi,bj->bij", self.xi.value, self.df.value)
        )

    def generalized_geodesic_residual(self) -> np.ndarray:
        self.need(2, "nabla_xi xi")
        nxx = np.einsum("bij,bj->bi", self.nabla_xi.value, self.xi.value)
        pot = self.lap.value + (self.n - 1) * self.lam_minus_scal.value
        return nxx - pot[:, None] * self.xi.value

    def trace_identity_residual(self) -> np.ndarray:
        return self.lap.value + self.n * self.lam_minus_scal.value + self.mu.value * self.xi2.value

    def pairing_identity_residual(self) -> np.ndarray:
        return (
            self.hess2.value
            + self.lam_minus_scal.value * self.lap.value
            + 0.5 * self.mu.value * self.xi_of_xi2.value
        )

    def lambda_quadratic(self) -> tuple[np.ndarray, np.ndarray]:
        """Quadratic in lambda obtained by eliminating Delta f between the trace
        and pairing identities; returns (value, scale)."""
        n, s, lam = self.n, self.scal.value, self.lam.value
        mx2 = self.mu.value * self.xi2.value
        terms = [
            n * lam**2,
            (-2 * n * s + mx2) * lam,
            n * s**2,
            -mx2 * s,
            -0.5 * self.mu.value * self.xi_of_xi2.value,
            -self.hess2.value,
        ]
        return sum(terms), np.max(np.abs(np.stack(terms)), axis=0)

    def lambda_quadratic_as_printed(self) -> tuple[np.ndarray, np.ndarray]:
        """Same quadratic with the alternative sign pattern on the scal terms, kept as an audit."""
        n, s, lam = self.n, self.scal.value, self.lam.value
        mx2 = self.mu.value * self.xi2.value
        terms = [
            n * lam**2,
            (2 * n * s + mx2) * lam,
            n * s**2,
            mx2 * s,
            -0.5 * self.mu.value * self.xi_of_xi2.value,
            -self.hess2.value,
        ]
        return sum(terms), np.max(np.abs(np.stack(terms)), axis=0)

    def lambda_discriminant(self) -> np.ndarray:
        mu = self.mu.value
        return (
            mu**2 * self.xi2.value**2
            + 2 * self.n * mu * self.xi_of_xi2.value
            + 4 * self.n * self.hess2.value
        )

    def bochner_terms(self) -> dict[str, np.ndarray]:
        n = self.n
        if n < 2:
            raise SolitonError("the Bochner-type formula needs dimension >= 2")
        self.need(3, "Delta(|xi|^2)")
        mu, lam, s = self.mu.value, self.lam.value, self.scal.value
        x2 = self.xi2.value
        bracket = (
            self.geo.apply(self.xi, self.mu).value
            - n / (n - 1) * mu**2 * x2
            - n**2 / (n - 1) * lam * mu
            + n**2 / (n - 1) * mu * s
        )
        lhs = 0.5 * self.geo.laplacian(self.xi2).value
        rhs_terms = {
            "nabla_xi_sq": self.nabla_xi2.value,
            "ricci": -self.ricci_xi_xi.value / (n - 1),
            "mu_xi_xi2": -(n - 2) / (2 * (n - 1)) * mu * self.xi_of_xi2.value,
            "xi2_bracket": -x2 * bracket,
        }
        return {"lhs": lhs, "bracket": bracket, **rhs_terms}

    def bochner_residual(self) -> tuple[np.ndarray, np.ndarray]:
        t = self.bochner_terms()
        parts = [t["lhs"], t["nabla_xi_sq"], t["ricci"], t["mu_xi_xi2"], t["xi2_bracket"]]
        res = parts[0] - sum(parts[1:])
        return res, np.max(np.abs(np.stack(parts)), axis=0)

    def maximum_principle(self, tol: float = GATE_TOL) -> dict[str, np.ndarray]:
        if np.any(np.abs(self.mu.value) > tol):
            raise SolitonError("the maximum-principle inequality is stated for mu = 0")
        self.need(3, "Delta(|xi|^2)")
        lhs = self.geo.laplacian(self.xi2).value
        sxx = self.ricci_xi_xi.value
        bound = (self.n - 1) * self.nabla_xi2.value
        scale = 1 + np.abs(sxx) + np.abs(bound) + np.abs(lhs)
        hypothesis = sxx <= bound + tol * scale
        return {
            "lhs": lhs,
            "hypothesis": hypothesis,
            "bound_ok": ~hypothesis | (lhs >= -tol * scale),
        }

    def classify(self, tol: float = GATE_TOL) -> dict[str, np.ndarray]:
        lam, mu, s = self.lam.value, self.mu.value, self.scal.value
        scale = 1 + np.abs(s)
        return {
            "torse_forming": (np.abs(lam - (s - 1)) <= tol * scale) & (np.abs(mu - 1) <= tol),
            "concircular": np.abs(mu) <= tol,
        }

    def _xi_nonzero(self) -> np.ndarray:
        x2 = self.xi2.value
        floor = 1e-8 * np.max(np.abs(self.geo.g.value), axis=(1, 2))
        if np.any(x2 <= floor):
            raise SolitonError("xi vanishes at a sample point; restrict to where xi != 0")
        return x2

    def grad_scal_alignment(self) -> tuple[np.ndarray, np.ndarray]:
        """(grad scal - h xi, h) with h = xi(scal)/|xi|^2."""
        self.need(3, "grad(scal)")
        x2 = self._xi_nonzero()
        gs = self.geo.scal_gradient.value
        xs = self.geo.apply(self.xi, self.scal).value
        h = xs / x2
        return gs - h[:, None] * self.xi.value, h

    def ricci_contraction(self) -> dict[str, np.ndarray]:
        """Signed audits of Q xi and S(xi, xi) against their closed forms."""
        self.need(3, "grad(scal)")
        n = self.n
        xi = self.xi.value
        lms = self.lam_minus_scal.value
        mu = self.mu.value
        q_xi = np.einsum("bij,bj->bi", self.geo.ricci_operator.value, xi)
        rhs_nn = -(n - 1) * self.geo.scal_gradient.value + ((n - 1) * mu * lms)[:, None] * xi
        xi_scal = self.geo.apply(self.xi, self.scal).value
        sxx = self.ricci_xi_xi.value
        rhs_j = -(n - 1) * xi_scal + (n - 1) * mu * lms
        rhs_nn_xi = np.einsum("bi,bij,bj->b", rhs_nn, self.geo.g.value, xi)
        return {
            "res_nn": q_xi - rhs_nn,
            "res_j": sxx - rhs_j,
            "res_j_contracted": sxx - rhs_nn_xi,
        }

    def theorem2_terms(self) -> dict[str, np.ndarray]:
        self.need(4, "Hess(scal)")
        geo = self.geo
        xi = self.xi
        xs = geo.apply(xi, self.scal)
        xxs = geo.apply(xi, xs).value
        nxx = jeinsum("ij,j->i", self.nabla_xi, xi)
        hs = geo.scal_hessian.value
        h_xi = np.einsum("bij,bj->bi", hs, xi.value)
        h_xx = np.einsum("bi,bi->b", h_xi, xi.value)
        nxx_scal = geo.apply(nxx, geo.scal).value
        return {
            "unit_xi": self.xi2.value - 1.0,
            "xi_xi_scal": xxs,
            "hess_scal_xi": np.sqrt(
                np.einsum("bi,bij,bj->b", h_xi, geo.ginv.value, h_xi)
            ),
            "hess_scal_xi_xi": h_xx,
            "hess_scal_identity": h_xx - (xxs - nxx_scal),
            "scal": geo.scal.value,
        }


# -- point-level API ----------------------------------------------------------------


def _state(inst, p, order, gate=False, what=""):
    p = np.asarray(p, dtype=float)
    st = SolitonState(inst, p, order)
    if gate and not st.soliton_mask().all():
        warnings.warn(
            f"{what}: the gradient soliton equation does not hold at every point; "
            "the identity is only claimed for solitons",
            stacklevel=3,
        )
    return st, p.ndim == 1


def _o(arr, single):
    arr = np.asarray(arr)
    return arr[0] if single else arr


def soliton_residual(inst: SolitonInstance, p) -> TensorValue:
    st, single = _state(inst, p, 2)
    return TensorValue(_o(st.e8.value, single), "ll", np.asarray(p))


def gradient_soliton_residual(inst: SolitonInstance, p) -> TensorValue:
    if not inst.gradient:
        raise NotGradientError("gradient_soliton_residual needs a potential function")
    st, single = _state(inst, p, 2)
    return TensorValue(_o(st.e22.value, single), "ll", np.asarray(p))


def nabla_xi_residual(inst: SolitonInstance, p) -> TensorValue:
    st, single = _state(inst, p, 2)
    st._require_gradient("nabla_xi_residual")
    return TensorValue(_o(st.nabla_xi_residual(), single), "ul", np.asarray(p))


def generalized_geodesic_residual(inst: SolitonInstance, p):
    st, single = _state(inst, p, 2, True, "generalized_geodesic_residual")
    return _o(st.generalized_geodesic_residual(), single)


def classify_field(inst: SolitonInstance, p, tol: float = GATE_TOL) -> dict:
    st, single = _state(inst, p, 2)
    return {k: _o(v, single) for k, v in st.classify(tol).items()}


def trace_identity_residual(inst: SolitonInstance, p):
    st, single = _state(inst, p, 2)
    return _o(st.trace_identity_residual(), single)


def pairing_identity_residual(inst: SolitonInstance, p):
    st, single = _state(inst, p, 2, True, "pairing_identity_residual")
    return _o(st.pairing_identity_residual(), single)


def lambda_quadratic_residual(inst: SolitonInstance, p, as_printed: bool = False):
    st, single = _state(inst, p, 2, True, "lambda_quadratic_residual")
    val, _ = st.lambda_quadratic_as_printed() if as_printed else st.lambda_quadratic()
    return _o(val, single)


def lambda_discriminant(inst: SolitonInstance, p):
    st, single = _state(inst, p, 2)
    return _o(st.lambda_discriminant(), single)


def bochner_residual(inst: SolitonInstance, p):
    if inst.dimension < 2:
        raise SolitonError("the Bochner-type formula needs dimension >= 2")
    st, single = _state(inst, p, 3, True, "bochner_residual")
    return _o(st.bochner_residual()[0], single)


def maximum_principle_inequality(inst: SolitonInstance, p, tol: float = GATE_TOL) -> dict:
    st, single = _state(inst, p, 3)
    out = st.maximum_principle(tol)
    return {"lhs": _o(out["lhs"], single), "bound_ok": _o(out["bound_ok"], single),
            "hypothesis": _o(out["hypothesis"], single)}


def grad_scal_alignment_residual(inst: SolitonInstance, p):
    """(grad scal - h xi, h); raises SolitonError where xi vanishes."""
    st, single = _state(inst, p, 3)
    res, h = st.grad_scal_alignment()
    return _o(res, single), _o(h, single)


def ricci_contraction_identities(inst: SolitonInstance, p) -> dict:
    st, single = _state(inst, p, 3)
    return {k: _o(v, single) for k, v in st.ricci_contraction().items()}


def theorem2_check(inst: SolitonInstance, points, tol: float = GATE_TOL) -> dict:
    """Hypotheses of the constant-scalar-curvature theorem and its conclusion metric."""
    if inst.dimension < 2:
        raise SolitonError("the theorem is stated for dimension > 1")
    st = SolitonState(inst, np.atleast_2d(points), 4)
    t = st.theorem2_terms()
    scale = 1 + np.abs(t["scal"])
    hyp = {
        "unit_xi": bool(np.all(np.abs(t["unit_xi"]) <= tol)),
        "xi_xi_scal_zero": bool(np.all(np.abs(t["xi_xi_scal"]) <= tol * scale)),
        "hess_scal_degenerate": bool(np.all(np.abs(t["hess_scal_xi"]) <= tol * scale)),
    }
    return {
        "hypotheses": hyp,
        "terms": t,
        "conclusion": {"scal_spread": float(np.ptp(t["scal"]))},
    }


@dataclass(frozen=True)
class FitResult:
    lam: float
    mu: float
    max_residual: float
    identifiable: bool
    lambda_identifiable: bool
    mu_identifiable: bool
    rank: int


def fit_constants(inst: SolitonInstance, points) -> FitResult:
    """Least-squares constants (lambda, mu) making the gradient equation hold at all points.

    Uses every upper-triangle component at every point jointly; the
    minimum-norm solution is returned when the system is rank deficient.
    """
    if not inst.gradient:
        raise NotGradientError("fit_constants needs a potential function")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) < 2:
        raise SolitonError("fit_constants needs at least two sample points")
    admissible = inst.metric.chart.admissible(pts)
    if not admissible.any():
        raise SolitonError("no admissible sample points")
    st = SolitonState(inst, pts[admissible], 2)
    n = st.n
    iu = np.triu_indices(n)
    g = st.geo.g.value[:, iu[0], iu[1]].ravel()
    dfdf = np.einsum("bi,bj->bij", st.df.value, st.df.value)[:, iu[0], iu[1]].ravel()
    base = (st.hess.value - st.scal.value[:, None, None] * st.geo.g.value)[:, iu[0], iu[1]].ravel()
    a = np.column_stack([g, dfdf])
    sol, _, rank, sv = np.linalg.lstsq(a, -base, rcond=None)
    # identifiability from the right singular vectors of the null space
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    tol = max(a.shape) * np.finfo(float).eps * (s[0] if s.size and s[0] > 0 else 1.0) * 1e4
    r = int(np.sum(s > tol))
    null = vt[r:]
    ident = [bool(np.all(np.abs(null[:, i]) < 1e-8)) for i in range(2)]
    resid = a @ sol + base
    return FitResult(
        lam=float(sol[0]),
        mu=float(sol[1]),
        max_residual=float(np.max(np.abs(resid))),
        identifiable=r == 2,
        lambda_identifiable=ident[0],
        mu_identifiable=ident[1],
        rank=r,
    )
