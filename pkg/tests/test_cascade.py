import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ellipk

from gkdvwaves.cascade import (CascadeConfig, build_cascade, gauge_constants, gauge_shift_check, h3,
                               known_radicand, radicand)
from gkdvwaves.errors import DomainError, DoubleRootError


def kdv(c=1.0, C2=0.0, C3=0.0, domain=(-1.0, 1.0), **kw):
    return build_cascade(CascadeConfig("6*u", c, {}, C2, C3, domain=domain, **kw))


def test_h1_h2_examples():
    assert kdv().h1(1.0) == pytest.approx(-1.5, abs=1e-14)
    f = build_cascade(CascadeConfig("u^2", 1.0, domain=(-2, 2)))
    assert f.h2(1.0) == pytest.approx(5 / 12, abs=1e-14)
    assert f.radicand(1.0) == pytest.approx(5 / 6, abs=1e-14)


@pytest.mark.parametrize("base", [0.0, 0.3, 0.9])
def test_gauge_zero_at_base(base):
    f = kdv(domain=(0.1, 1.0) if base else (-1, 1), y_base=base if base else None)
    b = base if base else 0.0
    assert f.h1(b) == 0.0 and f.h2(b) == 0.0


def test_radicand_examples():
    f = kdv()
    assert radicand(f, 0.3) == pytest.approx(0.036, abs=1e-15)
    assert abs(radicand(f, 0.5)) <= 1e-15


def test_h2_closed_form_schamel():
    p = {"alpha": 1.0, "beta": 1.0}
    f = build_cascade(CascadeConfig("alpha*sqrt(u)+beta*u", 1.0, p, domain=(0.0, 4.0)))
    y = np.linspace(0.01, 4, 50)
    # H1 = y^2/2 - 2/5 y^(5/2) - y^3/3,  H2 = y/2 - 4/15 y^(3/2) - y^2/6
    assert np.allclose(f.h1(y), y**2 / 2 - 0.4 * y**2.5 - y**3 / 3, atol=1e-13)
    assert np.allclose(f.h2(y), y / 2 - 4 / 15 * y**1.5 - y**2 / 6, atol=1e-13)


def test_h2_two_routes():
    f = build_cascade(CascadeConfig("u*ln(abs(u))", 0.5, domain=(0.2, 3.0)))
    y = np.linspace(0.3, 2.9, 9)
    assert np.allclose(f.h2(y), f.h2_direct(y), atol=1e-11)


def test_h3_sech2_inversion():
    f = kdv()
    y = 0.5 / math.cosh(0.5) ** 2
    assert h3(f, 0.5, y) == pytest.approx(-1.0, abs=1e-10)
    assert h3(f, 0.5, 0.393224) == pytest.approx(-1.0, abs=1e-5)
    assert h3(f, 0.3, 0.3) == 0.0


def test_h3_diverges_at_double_root():
    f = kdv()
    with pytest.raises(DoubleRootError):
        h3(f, 0.5, 0.0)
    # approaching the double root: H3 ~ ln(y) (stable oracle -ln((1+s)^2/(2y)), s = sqrt(1-2y))
    vals = []
    for y in (1e-3, 1e-6, 1e-9):
        s = math.sqrt(1 - 2 * y)
        ref = -math.log((1 + s) ** 2 / (2 * y))
        got = h3(f, 0.5, y)
        assert got == pytest.approx(ref, abs=1e-9)
        vals.append(got)
    assert vals[0] > vals[1] > vals[2]


def test_h3_rejects_negative_radicand():
    f = kdv()
    with pytest.raises(DomainError):
        h3(f, 0.3, 0.7)


def test_h3_cnoidal_half_period():
    # R = -2 (y - e1)(y - e2)(y - e3) with roots 0 < 0.2 < 0.6: half period 2K(m)/sqrt(e3 - e1) * sqrt(2)
    e1, e2, e3 = -0.1, 0.2, 0.6
    c = 2 * (e1 + e2 + e3)
    C2 = -2 * (e1 * e2 + e1 * e3 + e2 * e3)
    C3 = -e1 * e2 * e3
    f = kdv(c, C2, C3)
    m = (e3 - e2) / (e3 - e1)
    ref = 2 * ellipk(m) / math.sqrt(2 * (e3 - e1)) * 1.0
    assert h3(f, e2, e3) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("a, params, domain", [
    ("6*u", {}, (-1.0, 1.0)),
    ("u^2", {}, (-3.0, 3.0)),
    ("2*alpha*u-beta*u^2", {"alpha": 1.0, "beta": 2.0}, (-2.0, 2.0)),
    ("u^n/n", {"n": 3.0}, (-2.0, 2.0)),
    ("u^n/n", {"n": 4.0}, (-2.0, 2.0)),
])
@pytest.mark.parametrize("c, C2, C3", [(1.0, 0.0, 0.0), (-1.0, 0.3, 0.1)])
def test_radicand_identity(a, params, domain, c, C2, C3):
    f = build_cascade(CascadeConfig(a, c, params, C2, C3, domain=domain))
    y = np.linspace(*domain, 1000)
    ref = known_radicand(a)(y, c, C2, C3, params)
    assert np.max(np.abs(f.radicand(y) - ref)) <= 1e-10 * np.max(np.abs(ref))


@settings(max_examples=25)
@given(st.floats(0.2, 2.0), st.floats(-0.5, 0.5), st.floats(-0.05, 0.05))
def test_dradicand_matches_difference(c, C2, C3):
    f = kdv(c, C2, C3)
    y = np.linspace(-0.9, 0.9, 7)
    h = 1e-5
    fd = (f.radicand(y + h) - f.radicand(y - h)) / (2 * h)
    assert np.allclose(f.dradicand(y), fd, atol=1e-8)
    assert np.allclose(f.d2radicand(y), 2 * (c - 6 * y))


def test_h3_monotone_on_positive_set():
    f = kdv()
    y = np.linspace(0.05, 0.5, 200)
    v = f.h3(0.5, y)
    assert np.all(np.diff(v) > 0)


def test_refinement_within_error_estimate():
    cfg = CascadeConfig("u*ln(abs(u))", 0.5, domain=(0.2, 3.0))
    f1 = build_cascade(cfg)
    f2 = build_cascade(cfg.replace(abs_tol=cfg.abs_tol / 2, rel_tol=cfg.rel_tol / 2))
    y = np.linspace(0.25, 2.9, 11)
    r1, e1 = f1.radicand_with_error(y)
    assert np.all(np.abs(r1 - f2.radicand(y)) <= np.maximum(e1, 1e-15) * 10 + 1e-14)
    for g in (f1.h1, f1.h2):
        assert np.allclose(g(y), (f2.h1 if g == f1.h1 else f2.h2)(y), atol=1e-12)
    yy = np.linspace(0.25, 0.9, 8)  # R > 0 here
    v1, err = f1.h3_with_error(0.5, yy)
    assert np.all(np.abs(v1 - f2.h3(0.5, yy)) <= err * 10 + 1e-13)


def test_gauge_examples():
    base = CascadeConfig("6*u", 1.0, domain=(-1.0, 1.0))
    rep = gauge_shift_check(base, base.replace(domain=(0.05, 1.0), y_base=0.1))
    assert rep.passed
    same = CascadeConfig("6*u", 1.0, domain=(0.05, 1.0), y_base=0.1)
    rep = gauge_shift_check(same, same)
    assert rep.delta_C2 == 0.0 and rep.delta_C3 == 0.0 and rep.passed
    g = CascadeConfig("2*alpha*u-beta*u^2", 1.0, {"alpha": 1.0, "beta": 2.0}, domain=(0.01, 2.0), y_base=0.05)
    assert gauge_shift_check(g, g.replace(y_base=0.2)).max_abs_diff <= 1e-9


def test_gauge_constants_closed_form():
    # a = 6u from base 0 to base b: dC3 = -H1(b), dC2 = -2 H2(b) - 2 H1(b)/b
    f = kdv()
    b = 0.1
    d2, d3 = gauge_constants(f, b)
    h1 = b**2 / 2 - 2 * b**3
    h2 = b / 2 - b**2
    assert d3 == pytest.approx(-h1, abs=1e-15)
    assert d2 == pytest.approx(-2 * h2 - 2 * h1 / b, abs=1e-14)


def test_config_validation():
    with pytest.raises(ValueError):
        CascadeConfig("6*u", 1.0, domain=(1.0, 0.0))
    with pytest.raises(ValueError):
        CascadeConfig("6*u", 1.0, domain=(0.1, 1.0), y_base=2.0)
    with pytest.raises(ValueError):
        CascadeConfig("6*u", 1.0, domain=(-1.0, 1.0), y_base=0.5)
    with pytest.raises(ValueError):
        CascadeConfig("1/u", 1.0, domain=(-1.0, 1.0))
    with pytest.raises(ValueError):
        CascadeConfig("6*u", 1.0, abs_tol=0.0)
    assert CascadeConfig("alpha*sqrt(u)+beta*u", 1.0, {"alpha": 1, "beta": 1}).y_base == 0.0
    assert CascadeConfig("6*u", 1.0, domain=(0.2, 1.0)).y_base == 0.6
