import numpy as np
import pytest

from conftest import euclidean, hyp_points, hyperbolic, line_sphere_matrix, make_metric, sphere, sphere_points
from identities import tensor_identity_residuals
from oracles import SymbolicGeometry, partial, random_metric_sources, random_scalar_source
from quasiyamabe.exprjet import OrderExceededError, as_expr
from quasiyamabe.geometry import (
    Chart,
    DomainConstraintError,
    GeometryError,
    LocalGeometry,
    MetricError,
    MetricPatch,
    OneForm,
    ScalarField,
    TensorValue,
    VectorField,
    christoffel,
    covariant_derivative_vector,
    divergence,
    grad,
    hessian,
    laplacian,
    lie_derivative_metric,
    metric_at,
    ricci,
    ricci_operator,
    riemann,
    scalar_curvature,
    scalar_curvature_derivatives,
    vector_field_norms,
)


class TestChartsAndMetrics:
    def test_duplicate_coordinates_rejected(self):
        with pytest.raises(GeometryError):
            Chart(("x", "x"))

    def test_empty_chart_rejected(self):
        with pytest.raises(GeometryError):
            Chart(())

    def test_constraint_must_bind(self):
        with pytest.raises(Exception):
            Chart(("x",), (as_expr("w"),))

    def test_lower_triangle_must_mirror(self):
        chart = Chart(("x", "y"))
        with pytest.raises(MetricError):
            MetricPatch.from_matrix(chart, [["1", "x"], ["y", "1"]])

    def test_upper_triangle_rows_accepted(self):
        chart = Chart(("x", "y"))
        g = MetricPatch.from_matrix(chart, [["2", "0.5"], ["3"]])
        gv, _ = metric_at(g, [0.0, 0.0])
        np.testing.assert_array_equal(np.asarray(gv), [[2, 0.5], [0.5, 3]])

    def test_not_positive_definite(self):
        g = make_metric(["x", "y"], [[1, 2], [2, 1]])
        with pytest.raises(MetricError):
            metric_at(g, [0.0, 0.0])

    def test_symmetric_tensor_rejects_asymmetry(self):
        with pytest.raises(ValueError):
            TensorValue.symmetric([[1.0, 1.0], [0.0, 1.0]])

    def test_vector_field_arity(self):
        with pytest.raises(GeometryError):
            VectorField(Chart(("x", "y")), (as_expr("1"),))


class TestMetricAt:
    def test_euclidean(self, euc3, rng):
        gv, gi = metric_at(euc3, rng.normal(size=3))
        np.testing.assert_array_equal(np.asarray(gv), np.eye(3))
        np.testing.assert_array_equal(np.asarray(gi), np.eye(3))

    def test_hyperbolic_point(self, hyp3):
        gv, gi = metric_at(hyp3, [0.0, 0.0, 2.0])
        np.testing.assert_allclose(np.asarray(gv), np.eye(3) / 4, rtol=1e-15)
        np.testing.assert_allclose(np.asarray(gi), 4 * np.eye(3), rtol=1e-15)

    def test_inverse_residual(self, rng):
        g = make_metric(["x1", "x2", "x3"], random_metric_sources(rng, 3))
        for p in rng.uniform(-0.5, 0.5, (5, 3)):
            gv, gi = metric_at(g, p)
            assert np.max(np.abs(np.asarray(gv) @ np.asarray(gi) - np.eye(3))) <= 1e-12

    def test_hyperbolic_boundary_rejected(self, hyp3):
        with pytest.raises(DomainConstraintError):
            metric_at(hyp3, [0.0, 0.0, 0.0])


class TestChristoffel:
    def test_euclidean_vanishes(self, euc3):
        assert np.all(np.asarray(christoffel(euc3, [0.3, 1.0, -2.0])) == 0)

    def test_hyperbolic_at_unit_height(self, hyp3):
        gam = np.asarray(christoffel(hyp3, [0.0, 0.0, 1.0]))
        expected = np.zeros((3, 3, 3))
        x, y, z = 0, 1, 2
        expected[z, x, x] = 1
        expected[z, y, y] = 1
        expected[z, z, z] = -1
        expected[x, x, z] = expected[x, z, x] = -1
        expected[y, y, z] = expected[y, z, y] = -1
        np.testing.assert_allclose(gam, expected, atol=1e-15)

    def test_sphere_at_origin(self):
        gam = np.asarray(christoffel(sphere(2), [0.0, 0.0]))
        assert np.max(np.abs(gam)) == 0

    def test_matches_symbolic_oracle(self, rng):
        for dim in (2, 3):
            src = random_metric_sources(rng, dim)
            oracle = SymbolicGeometry([f"x{i + 1}" for i in range(dim)], src)
            g = make_metric([f"x{i + 1}" for i in range(dim)], src)
            for p in rng.uniform(-0.5, 0.5, (4, dim)):
                np.testing.assert_allclose(np.asarray(christoffel(g, p)), oracle.christoffel(p), atol=1e-12)


class TestCurvature:
    def test_euclidean_flat(self, euc3, rng):
        pts = rng.normal(size=(5, 3))
        _, r = riemann(euc3, pts)
        assert np.max(np.abs(np.asarray(r))) == 0
        assert np.all(scalar_curvature(euc3, pts) == 0)

    @pytest.mark.parametrize("which,sign", [("hyp", -1.0), ("sph", 1.0)])
    def test_sectional_curvature(self, which, sign, rng):
        g = hyperbolic() if which == "hyp" else sphere(3)
        pts = hyp_points(rng) if which == "hyp" else sphere_points(rng)
        _, r = riemann(g, pts)
        r = np.asarray(r)
        gv = np.asarray(metric_at(g, pts)[0])
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                area = gv[:, i, i] * gv[:, j, j] - gv[:, i, j] ** 2
                np.testing.assert_allclose(r[:, i, j, i, j], sign * area, rtol=0, atol=1e-9 * (1 + np.max(area)))

    @pytest.mark.parametrize("which,factor,scal", [("hyp", -2.0, -6.0), ("sph", 2.0, 6.0)])
    def test_space_form_ricci_and_scal(self, which, factor, scal, rng):
        g = hyperbolic() if which == "hyp" else sphere(3)
        pts = hyp_points(rng) if which == "hyp" else sphere_points(rng)
        gv = np.asarray(metric_at(g, pts)[0])
        np.testing.assert_allclose(np.asarray(ricci(g, pts)), factor * gv, atol=1e-9 * (1 + np.max(np.abs(gv))))
        np.testing.assert_allclose(np.asarray(ricci_operator(g, pts)), factor * np.broadcast_to(np.eye(3), gv.shape),
                                   atol=1e-9)
        np.testing.assert_allclose(scalar_curvature(g, pts), scal, atol=1e-9)

    def test_unit_two_sphere(self, rng):
        np.testing.assert_allclose(scalar_curvature(sphere(2), sphere_points(rng, m=2)), 2.0, atol=1e-10)

    def test_ricci_matches_symbolic_oracle(self, rng):
        for dim in (2, 3):
            src = random_metric_sources(rng, dim)
            oracle = SymbolicGeometry([f"x{i + 1}" for i in range(dim)], src)
            g = make_metric([f"x{i + 1}" for i in range(dim)], src)
            for p in rng.uniform(-0.5, 0.5, (3, dim)):
                np.testing.assert_allclose(np.asarray(ricci(g, p)), oracle.ricci(p), atol=1e-10)
                assert abs(scalar_curvature(g, p) - oracle.scal(p)) <= 1e-10


class TestScalarOperators:
    def test_euclidean_quadratic(self, euc3, rng):
        f = ScalarField(euc3.chart, as_expr("(x1^2+x2^2+x3^2)/2"))
        p = rng.normal(size=3)
        np.testing.assert_allclose(grad(euc3, f, p), p, rtol=1e-15)
        np.testing.assert_allclose(np.asarray(hessian(euc3, f, p)), np.eye(3), atol=1e-15)
        assert laplacian(euc3, f, p) == pytest.approx(3.0, abs=1e-14)

    def test_hyperbolic_log_potential(self, hyp3):
        f = ScalarField(hyp3.chart, as_expr("-ln(z)"))
        p = [0.0, 0.0, 1.0]
        np.testing.assert_allclose(grad(hyp3, f, p), [0, 0, -1], atol=1e-15)
        np.testing.assert_allclose(np.asarray(hessian(hyp3, f, p)), np.diag([1.0, 1.0, 0.0]), atol=1e-15)
        assert laplacian(hyp3, f, p) == pytest.approx(2.0, abs=1e-14)

    def test_constant_field(self, hyp3, rng):
        f = ScalarField(hyp3.chart, as_expr("3.5"))
        p = hyp_points(rng, 4)
        assert np.all(grad(hyp3, f, p) == 0)
        assert np.all(np.asarray(hessian(hyp3, f, p)) == 0)
        assert np.all(laplacian(hyp3, f, p) == 0)

    def test_hessian_symmetry(self, rng):
        src = random_metric_sources(rng, 3)
        g = make_metric(["x1", "x2", "x3"], src)
        geo = LocalGeometry(g, rng.uniform(-0.5, 0.5, (6, 3)), 2)
        h = geo.hessian(geo.field(ScalarField(g.chart, as_expr(random_scalar_source(rng, 3))))).value
        assert np.max(np.abs(h - np.swapaxes(h, -1, -2))) <= 1e-11

    def test_matches_symbolic_oracle(self, rng):
        src = random_metric_sources(rng, 3)
        names = ["x1", "x2", "x3"]
        oracle = SymbolicGeometry(names, src)
        g = make_metric(names, src)
        fs = random_scalar_source(rng, 3)
        ops = oracle.scalar_ops(fs)
        f = ScalarField(g.chart, as_expr(fs))
        for p in rng.uniform(-0.5, 0.5, (4, 3)):
            gr, h, lap = ops(p)
            np.testing.assert_allclose(grad(g, f, p), gr, atol=1e-12)
            np.testing.assert_allclose(np.asarray(hessian(g, f, p)), h, atol=1e-12)
            assert abs(laplacian(g, f, p) - lap) <= 1e-11


class TestVectorOperators:
    def test_lie_derivative_of_gradient_is_twice_hessian(self, hyp3, rng):
        pts = hyp_points(rng, 10)
        fs = "sin(x)*z+y^2/z"
        f = ScalarField(hyp3.chart, as_expr(fs))
        # grad f = z^2 (d_x f, d_y f, d_z f)
        xi = VectorField(hyp3.chart, tuple(as_expr(s) for s in ("z^2*cos(x)*z", "z^2*2*y/z", "z^2*(sin(x)-y^2/z^2)")))
        lie = np.asarray(lie_derivative_metric(hyp3, xi, pts))
        h = np.asarray(hessian(hyp3, f, pts))
        assert np.max(np.abs(lie - 2 * h)) <= 1e-9 * (1 + np.max(np.abs(h)))

    def test_constant_field_is_killing_on_euclidean(self, euc3, rng):
        x = VectorField(euc3.chart, tuple(as_expr(c) for c in ("1", "-2", "0.5")))
        assert np.max(np.abs(np.asarray(lie_derivative_metric(euc3, x, rng.normal(size=(4, 3)))))) == 0

    def test_position_field_is_homothetic(self, euc3, rng):
        x = VectorField(euc3.chart, tuple(as_expr(c) for c in ("x1", "x2", "x3")))
        pts = rng.normal(size=(4, 3))
        np.testing.assert_allclose(np.asarray(lie_derivative_metric(euc3, x, pts)), np.broadcast_to(2 * np.eye(3), (4, 3, 3)), atol=1e-15)
        np.testing.assert_allclose(np.asarray(covariant_derivative_vector(euc3, x, pts)), np.broadcast_to(np.eye(3), (4, 3, 3)), atol=1e-15)
        x2, nx2 = vector_field_norms(euc3, x, pts)
        np.testing.assert_allclose(x2, np.sum(pts**2, axis=1), rtol=1e-14)
        np.testing.assert_allclose(nx2, 3.0, rtol=1e-15)

    def test_hyperbolic_potential_gradient_norms(self, hyp3):
        xi = VectorField(hyp3.chart, tuple(as_expr(c) for c in ("0", "0", "-z")))
        x2, nx2 = vector_field_norms(hyp3, xi, [0.0, 0.0, 1.0])
        assert x2 == pytest.approx(1.0, abs=1e-15)
        assert nx2 == pytest.approx(2.0, abs=1e-14)
        a = np.asarray(covariant_derivative_vector(hyp3, xi, [0.0, 0.0, 1.0]))
        # with fitted constants nabla xi = I - df (x) xi, i.e. diag(1, 1, 0)
        np.testing.assert_allclose(a, np.diag([1.0, 1.0, 0.0]), atol=1e-15)

    def test_zero_field(self, hyp3, rng):
        z = VectorField(hyp3.chart, (as_expr("0"),) * 3)
        pts = hyp_points(rng, 3)
        assert np.all(np.asarray(covariant_derivative_vector(hyp3, z, pts)) == 0)
        assert all(np.all(v == 0) for v in vector_field_norms(hyp3, z, pts))


class TestDivergence:
    def test_divergence_of_gradient_is_laplacian(self, hyp3, rng):
        pts = hyp_points(rng, 10)
        f = ScalarField(hyp3.chart, as_expr("x*y+ln(z)*cos(y)"))
        geo = LocalGeometry(hyp3, pts, 2)
        div_grad = geo.div_vector(geo.grad(geo.field(f))).value
        div_df = divergence(hyp3, OneForm(hyp3.chart, tuple(as_expr(s) for s in ("y", "x-ln(z)*sin(y)", "cos(y)/z"))), pts)
        lap = laplacian(hyp3, f, pts)
        assert np.max(np.abs(div_grad - lap)) <= 1e-9 * (1 + np.max(np.abs(lap)))
        assert np.max(np.abs(div_df - lap)) <= 1e-9 * (1 + np.max(np.abs(lap)))

    @pytest.mark.parametrize("which", ["hyp", "sph"])
    def test_contracted_bianchi(self, which, rng):
        g = hyperbolic() if which == "hyp" else sphere(3)
        pts = hyp_points(rng, 8) if which == "hyp" else sphere_points(rng, 8)
        geo = LocalGeometry(g, pts, 3)
        res = geo.div_02(geo.ricci).value - 0.5 * geo.scal.d().value
        assert np.max(np.abs(res)) <= 1e-8

    def test_contracted_bianchi_generic(self, rng):
        g = make_metric(["x1", "x2", "x3"], random_metric_sources(rng, 3))
        geo = LocalGeometry(g, rng.uniform(-0.5, 0.5, (8, 3)), 3)
        res = geo.div_02(geo.ricci).value - 0.5 * geo.scal.d().value
        assert np.max(np.abs(res)) <= 1e-8

    def test_zero_tensor(self, hyp3):
        assert np.all(divergence(hyp3, [[0] * 3] * 3, [0.0, 0.0, 1.0]) == 0)

    def test_divergence_of_metric_vanishes(self, hyp3, rng):
        pts = hyp_points(rng, 4)
        assert np.max(np.abs(divergence(hyp3, hyp3.matrix(), pts))) <= 1e-12


class TestScalDerivatives:
    def test_space_forms(self, hyp3, sph3, euc3, rng):
        for g, pts in ((hyp3, hyp_points(rng, 4)), (sph3, sphere_points(rng, 4)), (euc3, rng.normal(size=(4, 3)))):
            d, h = scalar_curvature_derivatives(g, pts)
            assert np.max(np.abs(d)) <= 1e-9
            assert np.max(np.abs(np.asarray(h))) <= 1e-8

    def test_conformal_plane_against_finite_differences(self, rng):
        g = make_metric(["x", "y"], [["1+x^2", 0], [0, "1+x^2"]])

        def scal(q):
            return float(scalar_curvature(g, q))

        for p in rng.uniform(-1, 1, (4, 2)):
            d, _ = scalar_curvature_derivatives(g, p)
            geo = LocalGeometry(g, p, 3)
            dscal = geo.scal.d().value[0]
            for i in range(2):
                ref = partial(scal, p, i, h=1e-2)
                assert abs(dscal[i] - ref) <= 1e-5 * max(1.0, abs(ref))
            # gradient raises the index with g^{-1} = I/(1+x^2)
            np.testing.assert_allclose(d, dscal / (1 + p[0] ** 2), rtol=1e-12)

    def test_warped_line_sphere(self):
        g = make_metric(["t", "u", "v"], line_sphere_matrix())
        p = [0.0, 0.3, -0.2]
        assert scalar_curvature(g, p) == pytest.approx(-4.0, abs=1e-10)
        d, _ = scalar_curvature_derivatives(g, p)
        assert d[0] == pytest.approx(-4.0, abs=1e-9)
        np.testing.assert_allclose(d[1:], 0.0, atol=1e-9)

    def test_needs_fourth_order(self, hyp3):
        with pytest.raises(OrderExceededError):
            scalar_curvature_derivatives(hyp3, [0.0, 0.0, 1.0], order=3)


@pytest.mark.parametrize("seed", range(6))
def test_identities_on_random_metrics(seed):
    rng = np.random.default_rng(1000 + seed)
    dim = 2 + seed % 2
    g = make_metric([f"x{i + 1}" for i in range(dim)], random_metric_sources(rng, dim))
    res = tensor_identity_residuals(g, random_scalar_source(rng, dim), rng.uniform(-0.5, 0.5, (8, dim)))
    for name, (r, scale) in res.items():
        assert np.all(r <= 1e-9 * scale), name


def test_identities_on_space_forms(rng):
    for g, pts in ((hyperbolic(), hyp_points(rng, 6)), (sphere(3), sphere_points(rng, 6)), (euclidean(2), rng.normal(size=(6, 2)))):
        names = g.chart.coordinates
        fs = f"sin({names[0]})*{names[-1]}^2+{names[1]}"
        res = tensor_identity_residuals(g, fs, pts)
        for name, (r, scale) in res.items():
            assert np.all(r <= 1e-9 * scale), name
