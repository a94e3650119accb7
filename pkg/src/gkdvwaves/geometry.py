"""Exterior calculus on the second-order jet space J^2(R, R).

Coordinates are ordered ``(z, y, y1, y2)``. Vector fields are given by
component functions that work on floats, arrays and duals alike, so Lie
brackets are computed exactly by lifting one coordinate at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import dual as D
from .errors import DomainError, InternalConsistencyError
from .expr import as_expr, check_bindings, evaluate

COORDS = ("z", "y", "y1", "y2")
DIM = 4


class JetPoint(NamedTuple):
    z: float
    y: float
    y1: float
    y2: float


@dataclass(frozen=True)
class VectorField:
    name: str
    components: Callable  # (z, y, y1, y2) -> 4-tuple
    domain: Callable = field(default=lambda p: True, compare=False)

    def at(self, p) -> tuple:
        p = JetPoint(*p)
        if not self.domain(p):
            raise DomainError(f"{self.name} undefined at {tuple(map(D.real_part, p))}")
        return tuple(self.components(*p))

    def __call__(self, p) -> np.ndarray:
        return np.array([float(D.real_part(c)) for c in self.at(p)])


def basis(k):
    """Strictly increasing multi-indices of length ``k`` over the 4 coordinates."""
    return list(combinations(range(DIM), k))


@dataclass
class KForm:
    """Value of a k-form at a point: coefficients on ``dx_I``, I increasing."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (comb(DIM, self.degree),):
            raise ValueError(f"a {self.degree}-form on J^2 has {comb(DIM, self.degree)} coefficients")

    def __getitem__(self, index):
        return self.coeffs[basis(self.degree).index(tuple(index))]

    def __repr__(self):
        terms = []
        for I, v in zip(basis(self.degree), self.coeffs):
            if v != 0:
                terms.append(f"{v:+.6g} " + "^".join("d" + COORDS[i] for i in I))
        return f"KForm({self.degree}: {' '.join(terms) or '0'})"


VOLUME = KForm(4, [1.0])


def interior_product(v: Sequence[float], w: KForm) -> KForm:
    """Contract the vector ``v`` into the first slot of ``w``."""
    if w.degree < 1:
        raise ValueError("cannot contract a 0-form")
    v = np.asarray(v, dtype=float)
    out_basis = basis(w.degree - 1)
    lookup = {I: c for I, c in zip(basis(w.degree), w.coeffs)}
    out = np.zeros(len(out_basis))
    for n, J in enumerate(out_basis):
        total = 0.0
        for i in range(DIM):
            if i in J:
                continue
            I = tuple(sorted((i,) + J))
            # moving dx_i from the front to its sorted slot costs its position
            total += (-1) ** I.index(i) * v[i] * lookup[I]
        out[n] = total
    return KForm(w.degree - 1, out)


# -- the gKdV vector field and its C-infinity structure ----------------------


def gkdv_vector_field(a, c, params=None) -> VectorField:
    """Z = d_z + y1 d_y + y2 d_y1 + (c - a(y)) y1 d_y2."""
    a = as_expr(a)
    check_bindings(a, params)
    params = dict(params or {})

    def comps(z, y, y1, y2):
        return (1.0, y1, y2, (c - evaluate(a, y, params)) * y1)

    return VectorField("Z", comps)


def cinf_structure():
    """The fields X1 = d_z, X2 = d_y1 + (y1/y) d_y2, X3 = d_y2."""
    X1 = VectorField("X1", lambda z, y, y1, y2: (1.0, 0.0, 0.0, 0.0))
    X2 = VectorField(
        "X2",
        lambda z, y, y1, y2: (0.0, 0.0, 1.0, D.div(y1, y)),
        domain=lambda p: D.real_part(p.y) != 0,
    )
    X3 = VectorField("X3", lambda z, y, y1, y2: (0.0, 0.0, 0.0, 1.0))
    return X1, X2, X3


def jacobian(V: VectorField, p) -> np.ndarray:
    """``J[i, j] = d V_i / d x_j`` by lifting coordinate j to a dual."""
    p = [float(x) for x in p]
    J = np.zeros((DIM, DIM))
    for j in range(DIM):
        lifted = list(p)
        lifted[j] = D.Dual(p[j], 1.0)
        for i, comp in enumerate(V.at(lifted)):
            J[i, j] = float(D.derivative(comp))
    return J


def lie_bracket(V: VectorField, W: VectorField, p) -> np.ndarray:
    """[V, W]_i = sum_j V_j d_j W_i - W_j d_j V_i."""
    return jacobian(W, p) @ V(p) - jacobian(V, p) @ W(p)


def lie_bracket_fd(V: VectorField, W: VectorField, p, h=1e-6) -> np.ndarray:
    """Central-difference bracket; an oracle independent of the dual path."""
    p = np.asarray(p, dtype=float)

    def jac(F):
        J = np.zeros((DIM, DIM))
        for j in range(DIM):
            e = np.zeros(DIM)
            e[j] = h
            J[:, j] = (F(p + e) - F(p - e)) / (2 * h)
        return J

    return jac(W) @ V(p) - jac(V) @ W(p)


# -- omega forms ---------------------------------------------------------------


def contract_chain(fields: Sequence[np.ndarray], w: KForm = VOLUME) -> KForm:
    """``fields[-1] ⌟ ... ⌟ fields[0] ⌟ w`` (first field contracts first)."""
    for v in fields:
        w = interior_product(v, w)
    return w


def omega_forms_contraction(a, c, params, p):
    Z = gkdv_vector_field(a, c, params)
    X = [F(p) for F in cinf_structure()]
    z = Z(p)
    # omega_i omits X_i from Z, X_1, X_2, X_3
    return tuple(contract_chain([z] + [X[j] for j in range(3) if j != i]) for i in range(3))


def omega_forms_closed(a, c, params, p):
    z, y, y1, y2 = (float(v) for v in p)
    if y == 0:
        raise DomainError("omega forms require y != 0")
    ay = float(evaluate(as_expr(a), y, params))
    w1 = KForm(1, [-y1, 1.0, 0.0, 0.0])
    w2 = KForm(1, [0.0, -y2, y1, 0.0])
    w3 = KForm(1, [0.0, -y1 * (y2 / y + ay - c), y1 * y1 / y, -y1])
    return w1, w2, w3


def omega_forms(a, c, params, p, rtol=1e-10):
    """The reduction 1-forms, computed by contraction and checked against their closed forms."""
    if float(p[1]) == 0:
        raise DomainError("omega forms require y != 0")
    got = omega_forms_contraction(a, c, params, p)
    ref = omega_forms_closed(a, c, params, p)
    for i, (g, r) in enumerate(zip(got, ref), start=1):
        scale = max(1.0, np.max(np.abs(r.coeffs)))
        if np.max(np.abs(g.coeffs - r.coeffs)) > rtol * scale:
            raise InternalConsistencyError(f"omega_{i} contraction {g} != closed form {r}")
    return got


# -- structure checks ------------------------------------------------------------


def numerical_rank(M, rel=1e-10):
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel * s[0]))


def span_residual(M, b):
    """Relative residual of the least-squares projection of ``b`` onto the columns of ``M``."""
    coef, *_ = np.linalg.lstsq(M, b, rcond=None)
    r = np.linalg.norm(b - M @ coef)
    return r / max(1.0, np.linalg.norm(b))


@dataclass
class PointCheck:
    point: JetPoint
    ranks: tuple
    bracket_residual: float
    passed: bool


@dataclass
class InvolutivityReport:
    checks: list
    rank_rel: float
    bracket_tol: float

    @property
    def passed(self):
        return all(ch.passed for ch in self.checks)

    @property
    def max_bracket_residual(self):
        return max((ch.bracket_residual for ch in self.checks), default=0.0)


def involutivity_report(a, c, params, sample, bracket_tol=1e-8, rank_rel=1e-10) -> InvolutivityReport:
    """Rank and bracket-closure of S({Z, X1..Xi}) for i = 1, 2, 3 at each point."""
    Z = gkdv_vector_field(a, c, params)
    fields = [Z, *cinf_structure()]
    checks = []
    for p in sample:
        p = JetPoint(*map(float, p))
        cols = [F(p) for F in fields]
        ranks = []
        worst = 0.0
        for i in (1, 2, 3):
            M = np.column_stack(cols[: i + 1])
            ranks.append(numerical_rank(M, rank_rel))
            for u in range(i + 1):
                for v in range(u + 1, i + 1):
                    b = lie_bracket(fields[u], fields[v], p)
                    worst = max(worst, span_residual(M, b))
        ok = ranks == [2, 3, 4] and worst <= bracket_tol
        checks.append(PointCheck(p, tuple(ranks), worst, ok))
    return InvolutivityReport(checks, rank_rel, bracket_tol)


def _eta(z, y, y1):
    return D.div(y1, y)


def determining_residual(p, dtype=np.longdouble):
    """Residuals of the determining system for X2 with eta = y1 / y.

    The first equation cancels terms of size y1^3 / y^2, so it is evaluated
    in extended precision by default and rounded to float at the end.
    """
    z, y, y1, y2 = (dtype(v) for v in p)
    if y == 0:
        raise DomainError("eta = y1/y undefined at y = 0")
    one = dtype(1)
    eta = _eta(z, y, y1)
    eta_z = D.derivative(_eta(D.Dual(z, one), y, y1))
    eta_y = D.derivative(_eta(z, D.Dual(y, one), y1))
    eta_y1 = D.derivative(_eta(z, y, D.Dual(y1, one)))
    r1 = eta * eta * y1 + eta_y * y1 * y1 + eta_y1 * y1 * y2 - eta * y2 + eta_z * y1
    return float(r1), float(eta_z)


def random_jet_points(rng, n, y_range=(-2.0, 2.0), min_abs_y=0.1, y1_range=(-2.0, 2.0), y2_range=(-2.0, 2.0),
                      min_abs_y1=0.0):
    """Seeded jet points with ``|y| >= min_abs_y`` (and optionally ``|y1| >= min_abs_y1``)."""
    pts = []
    while len(pts) < n:
        y = rng.uniform(*y_range)
        y1 = rng.uniform(*y1_range)
        if abs(y) < min_abs_y or abs(y1) < min_abs_y1:
            continue
        pts.append(JetPoint(rng.uniform(-5, 5), y, y1, rng.uniform(*y2_range)))
    return pts
