import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import partial, second_partial
from quasiyamabe.exprjet import (
    BinOp,
    Call,
    ExprBindError,
    ExprDomainError,
    ExprSyntaxError,
    Neg,
    Num,
    OrderExceededError,
    Var,
    bind,
    derivative,
    eval_float,
    eval_jet,
    parse,
    to_source,
)

XYZ = ("x", "y", "z")


class TestParse:
    def test_negative_exponent(self):
        assert parse("z^(-2)") == BinOp("^", Var("z"), Num(-2.0))

    def test_negated_log(self):
        assert parse("-ln(z)") == Neg(Call("ln", Var("z")))

    def test_power_is_right_associative(self):
        assert eval_float("2^3^2", (), ()) == 512.0

    def test_unary_minus_below_power(self):
        assert eval_float("-2^2", (), ()) == -4.0

    def test_precedence_of_products_over_sums(self):
        assert eval_float("1+2*3-4/2", (), ()) == 5.0

    @pytest.mark.parametrize("source", ["", "   ", "2x", "ln(", "x +* y", "(x", "x)", "foo(x)", "sin x"])
    def test_syntax_errors(self, source):
        with pytest.raises(ExprSyntaxError):
            parse(source)

    def test_error_carries_offset_and_expected(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse("x + ")
        assert info.value.offset == 4
        assert info.value.expected
        assert "byte offset 4" in str(info.value)

    def test_offset_counts_bytes(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse("é")
        assert info.value.offset == 0
        with pytest.raises(ExprSyntaxError) as info:
            parse("1 + é +")
        assert info.value.offset == 4

    def test_unbound_name_is_an_error(self):
        with pytest.raises(ExprBindError):
            bind(parse("x*w"), XYZ)

    def test_pi_constant(self):
        assert eval_float("pi", (), ()) == pytest.approx(math.pi, abs=0)


class TestEvaluate:
    def test_product_with_sine(self):
        j = eval_jet("x*sin(y)", ("x", "y"), [2.0, 0.0], order=2)
        assert j.value == pytest.approx(0.0, abs=1e-15)
        assert derivative(j, (1, 0)) == pytest.approx(0.0, abs=1e-15)
        assert derivative(j, (0, 1)) == pytest.approx(2.0, abs=1e-15)
        assert j.coefficient((1, 1)) == pytest.approx(1.0, abs=1e-15)
        assert derivative(j, (0, 2)) == pytest.approx(0.0, abs=1e-15)

    def test_log_of_negative_is_domain_error(self):
        with pytest.raises(ExprDomainError) as info:
            eval_jet("ln(z)", ("z",), [-1.0])
        assert "ln" in str(info.value)

    @pytest.mark.parametrize("source", ["sqrt(x)", "1/x", "x^0.5"])
    def test_other_domain_errors(self, source):
        with pytest.raises(ExprDomainError):
            eval_jet(source, ("x",), [0.0] if source == "1/x" else [-1.0])

    def test_integer_power_of_negative_base(self):
        assert eval_float("x^2", ("x",), [-2.0]) == 4.0
        assert eval_float("(-2)^3", (), ()) == -8.0

    def test_annihilated_term_is_exactly_zero(self):
        j = eval_jet("x+0*y", ("x", "y"), [0.3, -1.7], order=1)
        assert derivative(j, (0, 1)) == 0.0

    def test_square(self):
        assert derivative(eval_jet("x^2", ("x",), [1.3], 2), (2,)) == pytest.approx(2.0, abs=1e-14)

    def test_exp_fourth_derivative(self):
        assert derivative(eval_jet("exp(x)", ("x",), [0.0], 4), (4,)) == pytest.approx(1.0, abs=1e-14)

    def test_mixed_partial_of_sin_cos(self):
        j = eval_jet("sin(x)*cos(y)", ("x", "y"), [math.pi / 2, 0.0], 2)
        assert derivative(j, (1, 1)) == pytest.approx(0.0, abs=1e-15)

    def test_order_exceeded(self):
        j = eval_jet("x^3", ("x",), [1.0], 2)
        with pytest.raises(OrderExceededError):
            derivative(j, (3,))

    def test_degree_zero_matches_float(self):
        src = "exp(x)*sin(y)/(2+cos(z))+ln(1+x^2)"
        p = [0.3, -0.4, 1.1]
        assert eval_jet(src, XYZ, p, 3).value == eval_float(src, XYZ, p)

    def test_batch_matches_single_points(self):
        pts = np.array([[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]])
        batch = eval_jet("x*y^2+sin(z)", XYZ, pts, 2)
        for k, p in enumerate(pts):
            single = eval_jet("x*y^2+sin(z)", XYZ, p, 2)
            np.testing.assert_array_equal(batch.data[k], single.data)

    def test_exp_of_log_is_identity(self):
        for x0 in (0.2, 1.0, 3.7):
            a = eval_jet("exp(ln(x))", ("x",), [x0], 4).data
            b = eval_jet("x", ("x",), [x0], 4).data
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12 * abs(x0))

    def test_hyperbolic_and_tangent(self):
        j = eval_jet("tanh(x)+tan(x)+sinh(x)*cosh(x)", ("x",), [0.0], 3)
        assert derivative(j, (1,)) == pytest.approx(3.0, abs=1e-14)
        # tanh''' (0) = -2, tan''' (0) = 2, (sinh cosh)''' (0) = 4
        assert derivative(j, (3,)) == pytest.approx(4.0, abs=1e-13)


class TestJetRing:
    @pytest.fixture
    def jets(self):
        p = [0.4, -0.3, 0.9]
        return [eval_jet(s, XYZ, p, 4) for s in ("x*exp(y)", "sin(z)+y^2", "1/(2+x*z)")]

    def test_additive_inverse(self, jets):
        a, b, _ = jets
        np.testing.assert_allclose(((a + b) - b).data, a.data, rtol=0, atol=1e-15)

    def test_commutative(self, jets):
        a, b, _ = jets
        np.testing.assert_allclose((a * b).data, (b * a).data, rtol=1e-15, atol=0)

    def test_associative_and_distributive(self, jets):
        a, b, c = jets
        np.testing.assert_allclose(((a * b) * c).data, (a * (b * c)).data, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose((a * (b + c)).data, (a * b + a * c).data, rtol=1e-12, atol=1e-15)

    def test_division_inverts_multiplication(self, jets):
        a, b, c = jets
        np.testing.assert_allclose(((a * c) / c).data, a.data, rtol=1e-12, atol=1e-14)


# -- round trip -----------------------------------------------------------------

_names = st.sampled_from(["x", "y", "z"])
_numbers = st.floats(min_value=0, max_value=100, allow_nan=False).map(lambda v: repr(round(v, 3)))
_leaf = st.one_of(_names, _numbers, st.just("pi"))


def _grow(children):
    binary = st.tuples(children, st.sampled_from(["+", "-", "*", "/", "^"]), children).map(
        lambda t: f"{t[0]} {t[1]} {t[2]}"
    )
    unary = children.map(lambda s: f"-{s}")
    func = st.tuples(
        st.sampled_from(["exp", "ln", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt"]), children
    ).map(lambda t: f"{t[0]}({t[1]})")
    paren = children.map(lambda s: f"({s})")
    return st.one_of(binary, unary, func, paren)


grammar_strings = st.recursive(_leaf, _grow, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(grammar_strings)
def test_print_parse_round_trip(source):
    tree = parse(source)
    assert parse(to_source(tree)) == tree


# -- finite-difference oracle -----------------------------------------------------


def _random_expression(rng, depth):
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return str(rng.choice(XYZ))
        return repr(round(float(rng.uniform(0.5, 2.0)), 2))
    kind = rng.integers(0, 9)
    a = _random_expression(rng, depth - 1)
    b = _random_expression(rng, depth - 1)
    if kind == 0:
        return f"({a}+{b})"
    if kind == 1:
        return f"({a}-{b})"
    if kind == 2:
        return f"({a}*{b})"
    if kind == 3:
        return f"({a}/(2+sin({b})))"
    if kind == 4:
        return f"({a})^{int(rng.integers(2, 4))}"
    if kind == 5:
        return f"exp(0.3*{a})"
    if kind == 6:
        return f"ln(1+({a})^2)"
    if kind == 7:
        return f"sin({a})"
    return f"cos({a})"


def _expression_corpus(count=100, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        src = _random_expression(rng, 4)
        p = rng.uniform(-1.0, 1.0, size=3)
        v = eval_float(src, XYZ, p)
        if np.isfinite(v) and abs(v) < 50:
            out.append((src, p))
    return out


CORPUS = _expression_corpus()


def test_corpus_size():
    assert len(CORPUS) == 100


@pytest.mark.parametrize("idx", range(len(CORPUS)))
def test_partials_match_richardson(idx):
    src, p = CORPUS[idx]
    j = eval_jet(src, XYZ, p, 2)

    def fn(q):
        return eval_float(src, XYZ, q)

    for i in range(3):
        alpha = [0, 0, 0]
        alpha[i] = 1
        ref = partial(fn, p, i)
        assert abs(derivative(j, tuple(alpha)) - ref) <= 1e-5 * max(1.0, abs(ref))
        for k in range(i, 3):
            beta = [0, 0, 0]
            beta[i] += 1
            beta[k] += 1
            ref = second_partial(fn, p, i, k)
            assert abs(derivative(j, tuple(beta)) - ref) <= 1e-5 * max(1.0, abs(ref))
