"""Residual checks, conserved-quantity drift and the aggregated report."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from . import dual as D
from .cascade import CascadeConfig, CascadeFns, build_cascade, gauge_shift_check, known_radicand, natural_domain
from .catalog import CatalogEntry, eval_entry, list_catalog
from .errors import DomainError, GKdVError
from .expr import as_expr, evaluate, pretty
from .odeint import dopri5
from .profile import WaveProfile, find_turning_points, integrate_profile, prolong

FD6 = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])
MIN_FD_POINTS = 9


# -- residuals ----------------------------------------------------------------------


def ode_residual(p: WaveProfile, a, c, params=None):
    """``max |-c y1 + y3 + a(y) y1|`` with y3 from 6th-order differences of y2."""
    if p.y1 is None or p.y2 is None:
        raise ValueError("profile must be prolonged (y1, y2) first")
    z = np.asarray(p.z, dtype=float)
    if z.size < MIN_FD_POINTS:
        raise ValueError(f"grid too coarse: {z.size} points, need at least {MIN_FD_POINTS}")
    h = z[1] - z[0]
    if not np.allclose(np.diff(z), h, rtol=1e-9, atol=0):
        raise ValueError("ode_residual needs a uniform grid")
    y2 = np.asarray(p.y2, dtype=float)
    n = z.size
    y3 = sum(w * y2[k : n - 6 + k] for k, w in enumerate(FD6)) / h
    y = np.asarray(p.y, dtype=float)[3 : n - 3]
    y1 = np.asarray(p.y1, dtype=float)[3 : n - 3]
    av = np.asarray(evaluate(as_expr(a), y, params)) + 0.0 * y
    return float(np.max(np.abs(-c * y1 + y3 + av * y1)))


def _chain(u, order, like):
    """``[u, u', ..., u^(order)]`` from a value nested ``order`` duals deep."""
    out = []
    for k in range(order + 1):
        node = u
        for _ in range(k):
            node = node.der if isinstance(node, D.Dual) else 0.0 * D.real_part(node)
        out.append(np.asarray(D.real_part(node), dtype=float) + 0.0 * like)
    return out


def field_derivatives(e: CatalogEntry, x, t, c, C1=0.0, params=None):
    """``(u, u_x, u_xx, u_xxx, u_t)`` by nested duals (exact up to rounding)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    params = dict(params or {})
    ux = eval_entry(e, D.lift(x, 3), t, c, C1, params)
    u, u1, u2, u3 = _chain(ux, 3, x)
    ut = _chain(eval_entry(e, x, D.lift(t, 1), c, C1, params), 1, x)[1]
    return u, u1, u2, u3, ut


def pde_residual(e: CatalogEntry, sample, c, C1=0.0, params=None, a=None):
    """``max |u_t + u_xxx + a(u) u_x|`` over the sample points ``(x, t)``."""
    xs, ts = (np.asarray(v, dtype=float) for v in sample)
    params = dict(params or {})
    u, ux, _, uxxx, ut = field_derivatives(e, xs, ts, c, C1, params)
    av = np.asarray(evaluate(as_expr(a if a is not None else e.a_source), u, params)) + 0.0 * u
    res = ut + uxxx + av * ux
    if not np.all(np.isfinite(res)):
        raise DomainError(f"{e.id}: non-finite residual at a sample point")
    return float(np.max(np.abs(res)))


def sample_points(e: CatalogEntry, c, C1=0.0, params=None, n=200, seed=0, t_range=(-2.0, 2.0), cap=None):
    """Seeded ``(x, t)`` with ``|x - c t - C1| <= window`` away from poles.

    Points where the field exceeds ``cap`` (default ``20 max(1, |c|)``) are
    redrawn, which keeps the sample off the real poles some families have.
    """
    rng = np.random.default_rng(seed)
    cap = 20.0 * max(1.0, abs(c)) if cap is None else cap
    xs, ts = [], []
    got = 0
    for _ in range(100):
        z = rng.uniform(-e.window, e.window, n)
        t = rng.uniform(*t_range, n)
        x = z + c * t + C1
        u = np.asarray(D.real_part(eval_entry(e, x, t, c, C1, params)), dtype=float) + 0.0 * x
        keep = np.isfinite(u) & (np.abs(u) <= cap)
        xs.append(x[keep])
        ts.append(t[keep])
        got += int(keep.sum())
        if got >= n:
            break
    else:
        raise DomainError(f"{e.id}: could not find {n} admissible sample points")
    return np.concatenate(xs)[:n], np.concatenate(ts)[:n]


def profile_from_entry(e: CatalogEntry, z, c, C1=0.0, params=None) -> WaveProfile:
    """Sample ``y(z) = u(z, 0)`` and its exact z-derivatives."""
    z = np.asarray(z, dtype=float)
    u = eval_entry(e, D.lift(z, 2), np.zeros_like(z), c, C1, params)
    y, y1, y2 = _chain(u, 2, z)
    return WaveProfile(z, y, y1, y2, np.sign(y1), dict(c=c, C1=C1, entry=e.id, params=dict(params or {})))


# -- conserved quantities -------------------------------------------------------------


def integrate_third_order(a, c, params, y0, z_span, rtol=1e-16, atol=1e-19, dtype=np.longdouble):
    """Adaptive RK of ``y''' = (c - a(y)) y'`` as the system ``(y, y1, y2)``."""
    a = as_expr(a)
    params = dict(params or {})
    cc = dtype(c)

    def f(_, s):
        av = dtype(evaluate(a, s[0], params))
        return np.array([s[1], s[2], (cc - av) * s[1]], dtype=dtype)

    return dopri5(f, z_span, np.asarray(y0, dtype=dtype), rtol=rtol, atol=atol, dtype=dtype)


class Drift(NamedTuple):
    drift_I3: float
    drift_I2: float


def conserved_quantities(traj, fns: CascadeFns, C3=None):
    """``I3`` and ``I2`` along a trajectory; I2 uses ``C3 = I3(0)`` unless given."""
    y, y1, y2 = traj.y[0], traj.y[1], traj.y[2]
    if np.any(y == 0) or np.any(np.sign(y) != np.sign(y[0])):
        raise DomainError("trajectory crosses y = 0, where I2 is undefined")
    yf = np.asarray(y, dtype=float)
    ld = y.dtype.type
    h1 = np.asarray(fns.h1(yf), dtype=float).astype(y.dtype)
    h2 = np.asarray(fns.h2(yf), dtype=float).astype(y.dtype)
    I3 = y * y2 - y1 * y1 / ld(2) - h1
    C3 = I3[0] if C3 is None else ld(C3)
    I2 = (y1 * y1 - ld(2) * y * h2 + ld(2) * C3) / y
    return I3, I2


def conserved_drift(traj, fns: CascadeFns) -> Drift:
    I3, I2 = conserved_quantities(traj, fns)
    return Drift(float(np.max(np.abs(I3 - I3[0]))), float(np.max(np.abs(I2 - I2[0]))))


# -- report -------------------------------------------------------------------------


@dataclass
class VerificationReport:
    check_id: str
    max_residual: float
    tolerance: float
    sample: str
    seed: int | None = None
    passed: bool = field(init=False)

    def __post_init__(self):
        self.max_residual = float(self.max_residual)
        self.passed = bool(np.isfinite(self.max_residual) and self.max_residual <= self.tolerance)

    def as_dict(self):
        return {"check": self.check_id, "max_residual": self.max_residual, "tolerance": self.tolerance,
                "pass": self.passed, "sample": self.sample, "seed": self.seed}


@dataclass
class VerifyConfig:
    a: str = "6*u"
    c: float = 1.0
    params: Mapping[str, float] = field(default_factory=dict)
    C2: float = 0.0
    C3: float = 0.0
    domain: tuple | None = None
    seed: int = 0
    n_points: int = 50
    z_half: float = 5.0
    drift_length: float = 10.0


def _failure(check, exc, seed=None):
    return VerificationReport(check, float("inf"), 0.0, f"{type(exc).__name__}: {exc}", seed)


def _jet_range(domain):
    lo, hi = domain
    if lo >= 0:
        return (max(lo, 0.1), min(hi, 2.0)), False
    return (max(lo, -2.0), min(hi, 2.0)), True


def full_report(cfg: VerifyConfig) -> list:
    """Every check for one configuration, in a fixed order with recorded seeds."""
    from . import geometry as G

    try:
        a = as_expr(cfg.a)
    except GKdVError as exc:
        return [_failure("parse", exc)]
    params = dict(cfg.params)
    out = []

    def run(check, fn):
        try:
            out.extend(fn())
        except (GKdVError, ValueError, ArithmeticError) as exc:
            out.append(_failure(check, exc, cfg.seed))

    domain = tuple(cfg.domain) if cfg.domain is not None else natural_domain(a, params)
    (ylo, yhi), signed = _jet_range(domain)
    rng = np.random.default_rng(cfg.seed)
    pts = G.random_jet_points(rng, cfg.n_points, y_range=(ylo, yhi), min_abs_y=0.1)
    desc = f"{cfg.n_points} jet points, y in [{ylo:g}, {yhi:g}], |y| >= 0.1"

    def omega():
        worst = 0.0
        for p in pts:
            got = G.omega_forms_contraction(a, cfg.c, params, p)
            ref = G.omega_forms_closed(a, cfg.c, params, p)
            for g, r in zip(got, ref):
                worst = max(worst, float(np.max(np.abs(g.coeffs - r.coeffs))) / max(1.0, np.max(np.abs(r.coeffs))))
        return [VerificationReport("omega_forms", worst, 1e-10, desc, cfg.seed)]

    def involutive():
        rep = G.involutivity_report(a, cfg.c, params, pts)
        bad_rank = sum(ch.ranks != (2, 3, 4) for ch in rep.checks)
        return [
            VerificationReport("distribution_ranks", float(bad_rank), 0.0, desc + " (points with wrong rank)", cfg.seed),
            VerificationReport("involutivity", rep.max_bracket_residual, 1e-8, desc, cfg.seed),
        ]

    def determining():
        worst = max(max(abs(v) for v in G.determining_residual(p)) for p in pts)
        return [VerificationReport("determining_equations", worst, 1e-10, desc, cfg.seed)]

    run("omega_forms", omega)
    run("involutivity", involutive)
    run("determining_equations", determining)

    ccfg = None
    try:
        ccfg = CascadeConfig(a, cfg.c, params, cfg.C2, cfg.C3, domain=domain)
        fns = build_cascade(ccfg)
    except (GKdVError, ValueError, ArithmeticError) as exc:
        out.append(_failure("cascade_build", exc, cfg.seed))
        return out

    def identity():
        lo, hi = domain
        closed = known_radicand(a)
        if closed is not None:
            ys = np.linspace(lo, hi, 1000)
            ref = closed(ys, cfg.c, cfg.C2, cfg.C3, params)
            err = np.max(np.abs(fns.radicand(ys) - ref)) / max(np.max(np.abs(ref)), 1e-300)
            return [VerificationReport("radicand_closed_form", err, 1e-10,
                                       f"1000 points on [{lo:g}, {hi:g}], error relative to max|R|")]
        ys = np.linspace(lo, hi, 41)[1:-1]
        ys = ys[np.abs(ys) >= 0.05 * (hi - lo)]
        ref = np.asarray(fns.h2_direct(ys))
        err = np.max(np.abs(fns.h2(ys) - ref)) / max(np.max(np.abs(ref)), 1.0)
        return [VerificationReport("h2_two_routes", err, 1e-9, f"{ys.size} points on [{lo:g}, {hi:g}]")]

    def gauge():
        lo, hi = domain
        sub_lo = lo if lo > 0 else (0.1 * hi if hi > 0 else lo)
        sub = (sub_lo, hi)
        b1 = sub[0] + 0.25 * (sub[1] - sub[0])
        b2 = sub[0] + 0.6 * (sub[1] - sub[0])
        rep = gauge_shift_check(ccfg.replace(domain=sub, y_base=b1), ccfg.replace(domain=sub, y_base=b2))
        return [VerificationReport("gauge_shift", rep.max_abs_diff, rep.tolerance,
                                   f"bases {b1:g} -> {b2:g} on [{sub[0]:g}, {sub[1]:g}]")]

    run("radicand_identity", identity)
    run("gauge_shift", gauge)

    def orbit():
        tps = [p for p in find_turning_points(fns) if p.multiplicity == "simple" and p.y != 0]
        reps = []
        for tp in tps[:1]:
            prof = integrate_profile(fns, (-cfg.z_half, cfg.z_half), tp.y, dz=0.01)
            res = ode_residual(prof, a, cfg.c, params)
            reps.append(VerificationReport("profile_ode_residual", res, 1e-6,
                                           f"profile from turning point y*={tp.y:.12g}, dz=0.01"))
            y2 = float((2 * fns.h1(tp.y) + 2 * fns.C3) / (2 * tp.y))
            traj = integrate_third_order(a, cfg.c, params, (tp.y, 0.0, y2), (0.0, cfg.drift_length))
            dr = conserved_drift(traj, fns)
            span = f"z in [0, {cfg.drift_length:g}] from the turning point, extended-precision RK"
            reps.append(VerificationReport("drift_I3", dr.drift_I3, 1e-8, span))
            reps.append(VerificationReport("drift_I2", dr.drift_I2, 1e-8, span))
        return reps

    run("profile", orbit)

    def closed_forms():
        reps = []
        key = pretty(a)
        for e in list_catalog():
            if not e.validated or pretty(as_expr(e.a_source)) != key:
                continue
            try:
                e.check(cfg.c, params)
            except GKdVError:
                continue
            xs = sample_points(e, cfg.c, 0.0, params, n=200, seed=cfg.seed)
            reps.append(VerificationReport(f"pde_residual:{e.id}", pde_residual(e, xs, cfg.c, 0.0, params),
                                           1e-8, "200 seeded (x, t) points", cfg.seed))
        return reps

    run("closed_forms", closed_forms)
    return out
