import numpy as np
import pytest
from hypothesis import given, strategies as st

from gkdvwaves import geometry as G
from gkdvwaves.errors import DomainError

P = G.JetPoint(0.0, 1.0, 2.0, 3.0)
NONLINEARITIES = [("6*u", {}), ("u^2", {}), ("alpha*sqrt(u)+beta*u", {"alpha": 1.0, "beta": 1.0}),
                  ("2*alpha*u-beta*u^2", {"alpha": 1.0, "beta": 2.0}), ("u*ln(abs(u))", {})]


def test_vector_field_examples():
    assert np.array_equal(G.gkdv_vector_field("6*u", 1.0)(P), [1, 2, 3, -10])
    assert G.gkdv_vector_field("u^2", 1.0)((0, 2.0, 0.0, 5.0))[3] == 0.0
    assert np.array_equal(G.gkdv_vector_field("u^2", 2.0)((0, 1, 1, 0)), [1, 1, 0, 1])


def test_cinf_structure_examples():
    X1, X2, X3 = G.cinf_structure()
    assert np.array_equal(X2((0, 2, 4, 0)), [0, 0, 1, 2])
    assert np.array_equal(X1(P), [1, 0, 0, 0])
    assert np.array_equal(X3(P), [0, 0, 0, 1])
    with pytest.raises(DomainError):
        X2((0, 0.0, 1.0, 0))


def test_interior_product_leading_slot():
    w = G.interior_product([1, 0, 0, 0], G.VOLUME)
    assert w.degree == 3
    assert w[(1, 2, 3)] == 1.0
    assert np.count_nonzero(w.coeffs) == 1


vec = st.lists(st.floats(-3, 3), min_size=4, max_size=4)


@given(vec, st.integers(1, 4), st.data())
def test_contraction_nilpotent(v, k, data):
    coeffs = data.draw(st.lists(st.floats(-3, 3), min_size=G.KForm(k, np.zeros(len(G.basis(k)))).coeffs.size,
                                max_size=len(G.basis(k))))
    w = G.KForm(k, coeffs)
    once = G.interior_product(v, w)
    if once.degree == 0:
        return
    assert np.max(np.abs(G.interior_product(v, once).coeffs), initial=0.0) <= 1e-12


@given(vec, vec, st.floats(-2, 2))
def test_contraction_linear(v, u, s):
    w = G.KForm(2, np.arange(1.0, 7.0))
    lhs = G.interior_product(np.add(v, np.multiply(s, u)), w).coeffs
    rhs = G.interior_product(v, w).coeffs + s * G.interior_product(u, w).coeffs
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_omega_forms_examples():
    w1, w2, w3 = G.omega_forms("6*u", 1.0, {}, P)
    assert np.allclose(w1.coeffs, [-2, 1, 0, 0])
    assert np.allclose(w2.coeffs, [0, -3, 2, 0])
    assert np.allclose(w3.coeffs, [0, -16, 4, -2])


def test_brackets():
    Z = G.gkdv_vector_field("6*u", 1.0)
    X1, X2, _ = G.cinf_structure()
    rng = np.random.default_rng(3)
    for p in G.random_jet_points(rng, 10):
        assert np.allclose(G.lie_bracket(X1, Z, p), 0.0)
        assert np.allclose(G.lie_bracket(X1, X2, p), 0.0)
        assert np.max(np.abs(G.lie_bracket(Z, X2, p) + G.lie_bracket(X2, Z, p))) <= 1e-12
    fd = G.lie_bracket_fd(Z, X2, P)
    assert np.max(np.abs(G.lie_bracket(Z, X2, P) - fd)) <= 1e-6


@pytest.mark.parametrize("a, params", [("6*u", {}), ("u^2", {})])
@pytest.mark.parametrize("c", [1.0, -1.0])
def test_involutivity(a, params, c):
    rng = np.random.default_rng(0)
    rep = G.involutivity_report(a, c, params, G.random_jet_points(rng, 50))
    assert rep.passed
    assert all(ch.ranks == (2, 3, 4) for ch in rep.checks)


def test_determining_examples():
    assert G.determining_residual((0, 1, 2, 3)) == (0.0, 0.0)
    assert max(map(abs, G.determining_residual((5, -2, 1, 7)))) <= 1e-12
    assert max(map(abs, G.determining_residual((0, 1e-3, 1, 1)))) <= 1e-9


@given(st.floats(-5, 5), st.floats(1e-3, 5), st.floats(-5, 5), st.floats(-5, 5), st.booleans())
def test_determining_random(z, y, y1, y2, neg):
    y = -y if neg else y
    assert max(map(abs, G.determining_residual((z, y, y1, y2)))) <= 1e-10


@pytest.mark.parametrize("a, params", NONLINEARITIES)
def test_omega_closed_forms_everywhere(a, params):
    rng = np.random.default_rng(1)
    for p in G.random_jet_points(rng, 20, y_range=(0.1, 2.0)):
        G.omega_forms(a, 0.7, params, p)  # raises on mismatch


def test_rank_threshold_is_relative():
    M = np.diag([1e6, 1.0, 1e-3])
    assert G.numerical_rank(M) == 3
    assert G.numerical_rank(1e-8 * M) == 3
    assert G.numerical_rank(np.diag([1e6, 1.0, 1e-5])) == 2
    assert G.numerical_rank(np.diag([1.0, 1e-11])) == 1
