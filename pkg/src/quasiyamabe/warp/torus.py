"""Integral identities on flat and conformally flat tori by periodic trapezoid quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exprjet import Expr, as_expr, jeinsum
from ..exprjet.parser import constant_value
from ..geometry import Chart, MetricPatch, ScalarField
from .base import scalar_field
from .section33 import Section33Fields

DEFAULT_RESOLUTION = 64
SEAM_TOL = 1e-10


class PeriodicityError(ValueError):
    pass


@dataclass(frozen=True)
class PeriodicChart:
    """A chart whose coordinates are identified modulo ``periods``."""

    chart: Chart
    periods: tuple[float, ...]
    resolution: tuple[int, ...] | int = DEFAULT_RESOLUTION

    def __post_init__(self):
        n = self.chart.dimension
        periods = tuple(float(p) for p in self.periods)
        if len(periods) != n or any(not p > 0 for p in periods):
            raise ValueError(f"need {n} positive periods, got {self.periods}")
        res = self.resolution
        res = (int(res),) * n if np.isscalar(res) else tuple(int(r) for r in res)
        if len(res) != n or any(r < 2 for r in res):
            raise ValueError(f"need {n} resolutions >= 2, got {self.resolution}")
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "resolution", res)

    @property
    def dimension(self) -> int:
        return self.chart.dimension

    def with_resolution(self, res) -> "PeriodicChart":
        return PeriodicChart(self.chart, self.periods, res)

    def grid(self) -> np.ndarray:
        axes = [np.arange(r) * (p / r) for p, r in zip(self.periods, self.resolution)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([p / r for p, r in zip(self.periods, self.resolution)]))

    def check_periodic(self, exprs, samples: int = 16, name: str = "field") -> None:
        """Compare values and first derivatives across every seam at seeded samples."""
        rng = np.random.default_rng(20240517)
        n = self.dimension
        exprs = [as_expr(e) for e in exprs]
        for axis in range(n):
            pts = rng.uniform(0, 1, (samples, n)) * np.asarray(self.periods)
            pts[:, axis] = 0.0
            shifted = pts.copy()
            shifted[:, axis] = self.periods[axis]
            for e in exprs:
                field = ScalarField(self.chart, e)
                a = field.jet(pts, 1).data
                b = field.jet(shifted, 1).data
                gap = np.max(np.abs(a - b))
                if not gap <= SEAM_TOL * (1 + np.max(np.abs(a))):
                    raise PeriodicityError(
                        f"{name} is not periodic in {self.chart.coordinates[axis]} (seam gap {gap:.3e})"
                    )


def _sum(values: np.ndarray) -> float:
    # contiguous float64 reductions in numpy use pairwise summation
    return float(np.sum(np.ascontiguousarray(values, dtype=float)))


def _check_metric(pc: PeriodicChart, g: MetricPatch) -> None:
    if g.chart.coordinates != pc.chart.coordinates:
        raise ValueError("metric and periodic chart use different coordinates")
    comps = [g.component(i, j) for i in range(pc.dimension) for j in range(i, pc.dimension)]
    pc.check_periodic(comps, name="metric")


def torus_integral(pc: PeriodicChart, g: MetricPatch, field) -> float:
    """Integral of ``field`` against the Riemannian measure over one period cell."""
    _check_metric(pc, g)
    field = scalar_field(pc.chart, field)
    pc.check_periodic([field.expr], name="integrand")
    pts = pc.grid()
    gv = g.jet(pts, 0).value
    vol = np.sqrt(np.linalg.det(gv))
    return _sum(field.jet(pts, 0).value * vol) * pc.cell_volume


class _TorusQuadrature:
    def __init__(self, pc: PeriodicChart, g: MetricPatch, f, mu, phi):
        _check_metric(pc, g)
        self.pc = pc
        self.fields = Section33Fields(g, pc.grid(), 2, f=f, mu=mu, phi=phi)
        self.vol = np.sqrt(np.linalg.det(self.fields.geo.g.value))

    def integral(self, values) -> float:
        return _sum(np.asarray(values) * self.vol) * self.pc.cell_volume


def _as_constant(mu) -> float:
    if isinstance(mu, (int, float)):
        return float(mu)
    e: Expr = mu.expr if isinstance(mu, ScalarField) else as_expr(mu)
    v = constant_value(e)
    if v is None:
        raise ValueError("mu must be a real constant for the integral identities")
    return v


def _e56_terms(q: _TorusQuadrature, mu: float) -> dict[str, float]:
    s = q.fields
    n = s.n
    phi = s.phi.value
    xphi = s.xi_phi.value
    terms = {
        "traceless_hess": q.integral(s.traceless_hess2.value),
        "lap_times_xi_phi": (n + 1) * q.integral(s.lap.value * xphi / phi),
        "xi_norm": ((2 - mu) * n + 2) / (2 * n) * q.integral(s.xi2.value),
        "xi_phi_squared": -n * q.integral(xphi**2 / phi**2),
        "nabla_grad_phi": n * q.integral(s.nabla_xi_grad_phi_xi.value / phi),
    }
    terms["residual"] = float(sum(terms.values()))
    return terms


def _random_trig(coords, periods, rng, modes: int = 3) -> str:
    terms = []
    for _ in range(modes):
        amp = rng.uniform(0.2, 1.0)
        parts = []
        for c, p in zip(coords, periods):
            k = int(rng.integers(0, 3))
            if k:
                parts.append(f"{k * 2 * np.pi / p:.17g}*{c}")
        if not parts:
            parts = [f"{2 * np.pi / periods[0]:.17g}*{coords[0]}"]
        fn = "sin" if rng.uniform() < 0.5 else "cos"
        terms.append(f"{amp:.17g}*{fn}({'+'.join(parts)})")
    return "+".join(terms)


def _er_residual(q: _TorusQuadrature, mu: float) -> tuple[float, float]:
    """L2 size of (Hess f + mu df(x)df, Delta f + mu|xi|^2), absolute and normalized."""
    s = q.fields
    ddf = mu * jeinsum("i,j->ij", s.df, s.df)
    tens = q.integral(s.geo.norm2_02(s.hess + ddf).value)
    scal = q.integral((s.lap.value + mu * s.xi2.value) ** 2)
    scale = q.integral(s.geo.norm2_02(s.hess).value) + q.integral(s.geo.norm2_02(ddf).value)
    absolute = float(np.sqrt(max(tens, 0.0) + max(scal, 0.0)))
    return absolute, absolute / float(np.sqrt(max(scale, 1e-300)))


def compact_integral_checks(pc: PeriodicChart, g: MetricPatch, f, mu, phi=1.0,
                            trials: int = 8, seed: int = 0) -> dict:
    """Quadrature evaluation of the integral identities on a torus.

    ``ibp`` and ``proposition`` are genuine identities and should vanish to
    quadrature accuracy.  ``e56`` and ``corollary`` are reported for
    inspection only.
    """
    mu_c = _as_constant(mu)
    f_field = scalar_field(pc.chart, f)
    phi_field = scalar_field(pc.chart, phi)
    pc.check_periodic([f_field.expr, phi_field.expr], name="f/phi")
    q = _TorusQuadrature(pc, g, f_field, mu_c, phi_field)
    s = q.fields
    n = s.n
    xi2 = s.xi2.value
    lap = s.lap.value

    ibp_lhs = q.integral(np.einsum("bi,bi->b", s.d_xi2.value, s.xi.value))
    ibp_rhs = -q.integral(xi2 * lap)

    traceless = q.integral(s.traceless_hess2.value)
    hess2 = q.integral(s.geo.norm2_02(s.hess).value)
    lap2_n = q.integral(lap**2) / n
    xi4 = q.integral(xi2**2)
    chain = (n - 1) / n * mu_c**2 * xi4

    nabla_xi = s.geo.nabla_vector(s.xi)
    nabla_xi2 = s.geo.norm2_11(nabla_xi).value

    er_abs, er_rel = _er_residual(q, mu_c)
    rng = np.random.default_rng(seed)
    trial_rel = []
    for _ in range(trials):
        expr = _random_trig(pc.chart.coordinates, pc.periods, rng)
        qt = _TorusQuadrature(pc, g, expr, mu_c, 1.0)
        trial_rel.append(_er_residual(qt, mu_c)[1])

    return {
        "mu": mu_c,
        "integral_laplacian": q.integral(lap),
        "ibp": {"lhs": ibp_lhs, "rhs": ibp_rhs, "residual": ibp_lhs - ibp_rhs},
        "e56": _e56_terms(q, mu_c),
        "proposition": {
            "traceless_hess": traceless,
            "hess_minus_lap": hess2 - lap2_n,
            "residual": traceless - (hess2 - lap2_n),
            "mu_chain": chain,
            "mu_chain_residual": (hess2 - lap2_n) - chain,
        },
        "corollary": {
            "er_residual": er_abs,
            "er_residual_normalized": er_rel,
            "trial_min_normalized": float(min(trial_rel)) if trial_rel else float("nan"),
            "trials": trials,
            "mu2_xi4": mu_c**2 * xi4,
            "nabla_xi_l2": float(np.sqrt(max(q.integral(nabla_xi2), 0.0))),
            "nabla_xi_max": float(np.sqrt(np.max(np.abs(nabla_xi2)))),
        },
    }


def e56_trajectory(pc: PeriodicChart, g: MetricPatch, f, mu, phi=1.0,
                   resolutions=(16, 32, 64, 128)) -> list[tuple[int, float]]:
    """The e56 residual as the grid is refined; a plateau away from 0 is not quadrature error."""
    mu_c = _as_constant(mu)
    out = []
    for r in resolutions:
        q = _TorusQuadrature(pc.with_resolution(r), g, f, mu_c, phi)
        out.append((int(r), _e56_terms(q, mu_c)["residual"]))
    return out
