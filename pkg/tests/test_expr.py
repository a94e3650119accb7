import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gkdvwaves import dual as D
from gkdvwaves.errors import DomainError, ExprSyntaxError, UnboundParameterError
from gkdvwaves.expr import Binary, Const, Param, Unary, Var, eval_dual, evaluate, parse, pretty

CATALOG_STRINGS = ["6*u", "u^2", "u^n/n", "alpha*sqrt(u)+beta*u", "2*alpha*u-beta*u^2", "u*ln(abs(u))",
                   "1+alpha*sqrt(u)+beta*ln(abs(u))"]


def test_parse_trees():
    assert parse("6*u").root == Binary("*", Const(6.0), Var())
    e = parse("alpha*sqrt(u)+beta*u")
    assert e.root == Binary("+", Binary("*", Param("alpha"), Unary("sqrt", Var())), Binary("*", Param("beta"), Var()))
    assert e.params == {"alpha", "beta"}
    assert parse("2*alpha*u - beta*u^2").params == {"alpha", "beta"}


def test_precedence():
    # ^ binds tighter than unary minus, and is right-associative
    assert evaluate(parse("-u^2"), 3.0) == -9.0
    assert evaluate(parse("2^3^2"), 0.0) == 512.0
    assert evaluate(parse("1-2-3"), 0.0) == -4.0
    assert evaluate(parse("8/4/2"), 0.0) == 1.0
    assert evaluate(parse("2*-u"), 3.0) == -6.0


@pytest.mark.parametrize("src, offset", [("6*", 2), ("u+", 2), ("(u", 2), ("u)", 1), ("", 0)])
def test_syntax_errors(src, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(src)
    assert info.value.offset == offset


def test_unknown_function_and_bare_name():
    with pytest.raises(ExprSyntaxError, match="unknown function"):
        parse("tanh(u)")
    with pytest.raises(ExprSyntaxError):
        parse("sqrt u")


def test_eval_examples():
    assert evaluate(parse("6*u"), 2.0) == 12.0
    assert evaluate(parse("u^2"), 3.0) == 9.0
    assert evaluate(parse("alpha*sqrt(u)+beta*u"), 4.0, {"alpha": 2, "beta": 1}) == 8.0


def test_eval_arrays_and_constants():
    u = np.linspace(0, 1, 5)
    assert np.allclose(evaluate(parse("u^2"), u), u**2)
    assert evaluate(parse("3"), u).shape == u.shape


def test_domain_errors():
    with pytest.raises(DomainError):
        evaluate(parse("sqrt(u)"), -1.0)
    with pytest.raises(DomainError):
        evaluate(parse("ln(abs(u))"), 0.0)
    with pytest.raises(DomainError):
        evaluate(parse("1/u"), 0.0)
    with pytest.raises(DomainError):
        eval_dual(parse("abs(u)"), D.Dual(0.0, 1.0))


def test_unbound():
    with pytest.raises(UnboundParameterError):
        evaluate(parse("alpha*u"), 1.0)


def test_dual_examples():
    d = eval_dual(parse("u^2"), D.Dual(3.0, 1.0))
    assert (d.val, d.der) == (9.0, 6.0)
    d = eval_dual(parse("sqrt(u)"), D.Dual(4.0, 1.0))
    assert (d.val, d.der) == (2.0, 0.25)
    e = parse("u*ln(abs(u))")
    d = eval_dual(e, D.Dual(-2.0, 1.0))
    h = 1e-6
    fd = (evaluate(e, -2.0 + h) - evaluate(e, -2.0 - h)) / (2 * h)
    assert abs(d.der - fd) <= 1e-8


@pytest.mark.parametrize("src", CATALOG_STRINGS)
def test_round_trip_catalog(src):
    e = parse(src)
    assert parse(pretty(e)).root == e.root


# -- random expressions -------------------------------------------------------------

_leaf = st.one_of(st.just(Var()), st.integers(1, 5).map(lambda k: Const(float(k))), st.just(Param("alpha")))


def _grow(children):
    # functions restricted to ones smooth on u > 0 with the guards below
    un = st.builds(Unary, st.sampled_from(["exp", "sin", "cos", "neg"]), children)
    safe = st.builds(lambda n: Unary("sqrt", Binary("+", Binary("*", n, n), Const(1.0))), children)
    log = st.builds(lambda n: Unary("ln", Binary("+", Unary("abs", n), Const(1.0))), children)
    bi = st.builds(Binary, st.sampled_from(["+", "-", "*"]), children, children)
    div = st.builds(lambda a, b: Binary("/", a, Binary("+", Binary("*", b, b), Const(1.0))), children, children)
    powr = st.builds(lambda a, k: Binary("^", a, Const(float(k))), children, st.integers(2, 3))
    return st.one_of(un, safe, log, bi, div, powr)


nodes = st.recursive(_leaf, _grow, max_leaves=6)


@given(nodes)
def test_pretty_round_trip_random(node):
    text = pretty(node)
    assert parse(text).root == parse(pretty(parse(text))).root


@given(nodes, st.floats(0.2, 2.0))
def test_dual_matches_fd(node, u):
    e = parse(pretty(node))
    params = {"alpha": 0.7}
    with np.errstate(all="ignore"):
        f0 = evaluate(e, u, params)
        if not math.isfinite(f0) or abs(f0) > 1e6:
            return
        d = eval_dual(e, D.Dual(u, 1.0), params).der
        h = 1e-6
        fd = (evaluate(e, u + h, params) - evaluate(e, u - h, params)) / (2 * h)
    scale = max(1.0, abs(d), abs(f0))
    assert abs(d - fd) <= 1e-6 * scale
