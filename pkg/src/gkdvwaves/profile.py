"""Travelling-wave profiles from the quadrature cascade.

The primary route integrates ``dy/dz = ±sqrt(R(y))`` with an adaptive
Runge-Kutta 4(5) pair. The square root is not Lipschitz at roots of R, so the
integration stops in a guard band ``R < guard`` and classifies the root ahead:

* simple root: the orbit turns. The passage is filled in with the local series
  ``y = y* + R' d^2/4 + R' R'' d^4/96`` (d = distance in z from the turning
  point), whose duration is the exact H3 quadrature, and the branch flips;
* double root: the orbit creeps towards an equilibrium and never arrives, so
  the integration simply continues without the event.

A second route inverts ``z - z0 = ±H3(y0 -> y)`` on monotone segments and is
used to cross-check the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .cascade import CascadeFns, MULTIPLICITY_TOL
from .errors import DomainError, ProfileError

GUARD = 1e-8
RTOL = 1e-10
ATOL = 1e-14
ROOT_GRID = 2000
STEP_TOL = 1e-12


# -- turning points -------------------------------------------------------------


@dataclass(frozen=True)
class TurningPoint:
    y: float
    multiplicity: str  # "simple", "double" or "higher"
    slope: float  # R'(y)
    curvature: float  # R''(y)


@dataclass(frozen=True)
class TurningPointSet:
    points: tuple = ()
    interval: tuple = (np.nan, np.nan)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def roots(self):
        return [p.y for p in self.points]

    def as_dict(self):
        return {p.y: p.multiplicity for p in self.points}


def _multiplicity(fns, y):
    d1 = float(fns.dradicand(y))
    width = fns.domain[1] - fns.domain[0]
    try:
        d2 = float(fns.d2radicand(y))
    except DomainError:
        # a(y) has a removable singularity here (e.g. u ln|u| at 0): difference R' instead
        h = 1e-6 * width
        d2 = float((fns.dradicand(y + h) - fns.dradicand(y - h)) / (2 * h))
    # compare |R'| with the change R'' produces across a small fraction of the domain
    if abs(d1) > MULTIPLICITY_TOL * max(abs(d2), fns.scale / width**2):
        return "simple", d1, d2
    if abs(d2) > MULTIPLICITY_TOL * fns.scale / width**2:
        return "double", d1, d2
    return "higher", d1, d2


def find_turning_points(fns: CascadeFns, interval=None, n=ROOT_GRID) -> TurningPointSet:
    """Roots of R in ``interval`` with their multiplicity.

    Sign changes of R are bracketed on a grid and polished with Brent's method.
    Even-order roots do not change sign, so sign changes of R' are polished too
    and kept when R vanishes there to ``1e-12 * scale``.
    """
    lo, hi = interval if interval is not None else fns.domain
    lo, hi = float(lo), float(hi)
    if not (fns.domain[0] <= lo < hi <= fns.domain[1]):
        raise DomainError(f"interval ({lo}, {hi}) not inside cascade domain {fns.domain}")
    tol = 1e-12 * fns.scale
    ys = np.linspace(lo, hi, n + 1)
    r = np.asarray(fns.radicand(ys))
    dr = np.asarray(fns.dradicand(ys))
    found = []

    def polish(g, i):
        a, b = ys[i], ys[i + 1]
        ga, gb = g(a), g(b)
        if ga == 0:
            return a
        if gb == 0:
            return b
        if np.sign(ga) == np.sign(gb):
            # roundoff flipped a sign seen on the grid; the root is at the smaller end
            return a if abs(ga) <= abs(gb) else b
        return brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    R = lambda y: float(fns.radicand(y))  # noqa: E731
    dR = lambda y: float(fns.dradicand(y))  # noqa: E731
    for i in np.flatnonzero(np.sign(r[:-1]) * np.sign(r[1:]) < 0):
        found.append(polish(R, i))
    for i in np.flatnonzero(r == 0):
        found.append(ys[i])
    for i in np.flatnonzero(np.sign(dr[:-1]) * np.sign(dr[1:]) <= 0):
        if dr[i] == 0 and dr[i + 1] == 0:
            continue
        y = polish(dR, i)
        if abs(R(y)) <= tol:
            found.append(y)
    found.sort()
    points = []
    for y in found:
        if points and abs(y - points[-1].y) <= 1e-9 * max(1.0, abs(y)):
            continue
        kind, d1, d2 = _multiplicity(fns, y)
        points.append(TurningPoint(float(y), kind, d1, d2))
    return TurningPointSet(tuple(points), (lo, hi))


# -- profiles ---------------------------------------------------------------------


@dataclass
class WaveProfile:
    z: np.ndarray
    y: np.ndarray
    y1: np.ndarray = None
    y2: np.ndarray = None
    branch: np.ndarray = None  # sign of dy/dz: +1, -1, or 0 at an extremum or equilibrium
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.z.size

    @property
    def dz(self):
        return float(self.z[1] - self.z[0]) if self.z.size > 1 else 0.0

    def turning_indices(self):
        """Indices where the branch changes sign (grid points next to an extremum)."""
        b = self.branch
        return np.flatnonzero((b[:-1] * b[1:] < 0) | ((b[:-1] == 0) ^ (b[1:] == 0)))

    def monotone_segments(self):
        """Index ranges ``[i, j)`` on which the branch is constant and nonzero."""
        b = np.asarray(self.branch)
        segs = []
        i = 0
        while i < b.size:
            j = i
            while j < b.size and b[j] == b[i]:
                j += 1
            if b[i] != 0:
                segs.append((i, j))
            i = j
        return segs


def _meta(fns, **extra):
    cfg = fns.cfg
    m = dict(c=fns.c, C2=fns.C2, C3=fns.C3, a=cfg.a.source, params=dict(cfg.params), y_base=cfg.y_base)
    m.update(extra)
    return m


def prolong(p: WaveProfile, fns: CascadeFns) -> WaveProfile:
    """Fill ``y1 = branch * sqrt(R(y))`` and ``y2 = (y1^2 + 2 H1 + 2 C3) / (2 y)``."""
    y = np.asarray(p.y, dtype=float)
    if np.any(y == 0):
        raise DomainError("y2 is undefined where y = 0")
    r = np.asarray(fns.radicand(y)).reshape(y.shape)
    y1 = np.asarray(p.branch, dtype=float) * np.sqrt(np.maximum(r, 0.0))
    h1 = np.asarray(fns.h1(y)).reshape(y.shape)
    y2 = (y1 * y1 + 2.0 * h1 + 2.0 * fns.C3) / (2.0 * y)
    return replace(p, y1=y1, y2=y2)


def _root_ahead(fns, y, tau):
    """Simple root of R reached by moving from ``y`` in direction ``tau``, or None."""
    r = float(fns.radicand(y))
    d = float(fns.dradicand(y))
    if d == 0 or np.sign(d) == tau:
        return None
    lo, hi = fns.domain
    step = 1.5 * max(r, 0.0) / abs(d) + 4 * np.finfo(float).eps * max(1.0, abs(y))
    far = min(max(y + tau * step, lo), hi)
    if far == y:
        return None
    R = lambda v: float(fns.radicand(v))  # noqa: E731
    if R(far) > 0:
        return None
    if r <= 0:
        return y
    root = brentq(R, min(y, far), max(y, far), xtol=1e-16, rtol=4 * np.finfo(float).eps)
    kind, _, _ = _multiplicity(fns, root)
    return root if kind == "simple" else None


def _exit_point(fns, root, side, target):
    """Point on ``side`` of a simple root where R = target."""
    d = float(fns.dradicand(root))
    R = lambda v: float(fns.radicand(v)) - target  # noqa: E731
    step = 2.0 * target / abs(d)
    lo, hi = fns.domain
    for _ in range(60):
        far = min(max(root + side * step, lo), hi)
        if R(far) > 0:
            return brentq(R, min(root, far), max(root, far), xtol=1e-16, rtol=4 * np.finfo(float).eps)
        if far in (lo, hi):
            break
        step *= 2
    raise ProfileError(f"could not leave the turning point at y={root:.17g}")


class _Sweep:
    """One-directional integration in s >= 0 with dy/ds = tau sqrt(R)."""

    def __init__(self, fns, guard, rtol, atol):
        self.fns = fns
        self.guard = guard
        self.rtol = rtol
        self.atol = atol
        self.turns = []  # s positions of turning points

    def rhs(self, tau):
        fns = self.fns

        def f(s, y):
            return [tau * np.sqrt(max(float(fns.radicand(y[0])), 0.0))]

        return f

    def run(self, y0, tau, s_out):
        """Values of y and of sign(dy/ds) at the sorted positions ``s_out``."""
        fns = self.fns
        s_out = np.asarray(s_out, dtype=float)
        y_out = np.full(s_out.size, np.nan)
        sgn_out = np.zeros(s_out.size)
        S = s_out[-1] if s_out.size else 0.0
        s, y = 0.0, float(y0)
        use_event = True
        while True:
            r = float(fns.radicand(y))
            if use_event and r <= self.guard * (1 + 1e-6):
                root = _root_ahead(fns, y, tau)
                if root is None:
                    # inside the passage already, with the turning point behind
                    root = _root_ahead(fns, y, -tau)
                if root is not None:
                    s, y, tau = self._pass(root, s, y, tau, s_out, y_out, sgn_out)
                    if s >= S:
                        break
                    continue
                # double root ahead: an asymptotic tail
                use_event = False
            mask = s_out >= s
            if not np.any(mask):
                break
            events = None
            if use_event:
                def ev(_, v):
                    return float(fns.radicand(v[0])) - self.guard

                ev.terminal = True
                ev.direction = -1
                events = ev
            try:
                sol = solve_ivp(self.rhs(tau), (s, S), [y], method="RK45", t_eval=s_out[mask],
                                rtol=self.rtol, atol=self.atol, events=events)
            except DomainError as exc:
                raise ProfileError(f"profile left the cascade domain: {exc}") from None
            if sol.status == -1:
                raise ProfileError(f"integration failed: {sol.message}")
            idx = np.flatnonzero(mask)[: sol.t.size]
            y_out[idx] = sol.y[0]
            sgn_out[idx] = tau
            if sol.status == 1 and sol.t_events[0].size:
                s, y = float(sol.t_events[0][0]), float(sol.y_events[0][0][0])
                if s >= S:
                    break
                continue
            break
        return y_out, sgn_out

    def _pass(self, root, s, y, tau, s_out, y_out, sgn_out):
        """Cross the turning point at ``root``; returns the state after the passage."""
        fns = self.fns
        side = np.sign(float(fns.dradicand(root)))  # side of the root where R > 0
        to_root = abs(fns.h3(root, y)) if y != root else 0.0
        # heading into the root, or already past it with the centre behind us
        s_star = s + to_root if tau * (root - y) > 0 or y == root else s - to_root
        y_exit = _exit_point(fns, root, side, max(2.0 * self.guard, float(fns.radicand(y))))
        s_exit = s_star + abs(fns.h3(root, y_exit))
        d1 = float(fns.dradicand(root))
        d2 = float(fns.d2radicand(root))
        win = (s_out >= s) & (s_out < s_exit)
        delta = s_out[win] - s_star
        y_out[win] = root + d1 * delta**2 / 4 + d1 * d2 * delta**4 / 96
        slope = d1 * delta / 2 + d1 * d2 * delta**3 / 24
        sgn_out[win] = np.sign(slope)
        self.turns.append(s_star)
        return s_exit, y_exit, side


def _default_sign(fns, y):
    d = float(fns.dradicand(y))
    return -1.0 if d <= 0 else 1.0


def integrate_profile(fns: CascadeFns, z_span, y_start, sign_start=None, *, z_start=None, dz=0.01,
                      n=None, rtol=RTOL, atol=ATOL, guard=None) -> WaveProfile:
    """Solve ``dy/dz = ±sqrt(R(y))`` on a uniform grid over ``z_span``.

    ``y(z_start) = y_start`` with ``z_start`` defaulting to 0 when it lies in
    the span (else the left end). ``sign_start`` is the sign of dy/dz there;
    by default it is negative where R is decreasing (right of a maximum).
    At a simple turning point the direction is forced and ``sign_start`` is
    ignored; at a double root the profile is constant.
    """
    z0, z1 = map(float, z_span)
    if not z0 < z1:
        raise ValueError("z_span must be increasing")
    if z_start is None:
        z_start = 0.0 if z0 <= 0.0 <= z1 else z0
    if not z0 <= z_start <= z1:
        raise ValueError("z_start outside z_span")
    if n is None:
        n = int(round((z1 - z0) / dz)) + 1
    if n < 2:
        raise ValueError("need at least two grid points")
    z = np.linspace(z0, z1, n)
    y_start = float(y_start)
    guard = GUARD * fns.scale if guard is None else float(guard)
    r0 = float(fns.radicand(y_start))
    if r0 < -guard:
        raise DomainError(f"R({y_start:.17g}) = {r0:.3g} < 0: no real profile starts there")
    meta = _meta(fns, z_start=z_start, y_start=y_start, rtol=rtol, atol=atol, guard=guard)

    kind = None
    if r0 <= guard:
        tps = find_turning_points(fns, _local_interval(fns, y_start))
        near = [p for p in tps if abs(p.y - y_start) <= 1e-6 * max(1.0, abs(y_start))]
        if near and near[0].multiplicity != "simple":
            kind = "equilibrium"
        elif abs(r0) <= 1e-12 * fns.scale and near:
            kind = "turning"
            y_start = near[0].y
    if kind == "equilibrium":
        p = WaveProfile(z, np.full(n, y_start), branch=np.zeros(n), meta=dict(meta, kind="equilibrium"))
        return prolong(p, fns) if y_start != 0 else replace(p, y1=np.zeros(n), y2=np.zeros(n))

    if sign_start is None or kind == "turning":
        sign_start = _default_sign(fns, y_start)
    sign_start = float(np.sign(sign_start))
    if sign_start == 0:
        raise ValueError("sign_start must be + or -")

    y = np.empty(n)
    branch = np.empty(n)
    turns = []
    fwd = z >= z_start
    if np.any(fwd):
        sw = _Sweep(fns, guard, rtol, atol)
        yv, sg = sw.run(y_start, sign_start, z[fwd] - z_start)
        y[fwd], branch[fwd] = yv, sg
        turns += [z_start + s for s in sw.turns]
    bwd = ~fwd
    if np.any(bwd):
        sw = _Sweep(fns, guard, rtol, atol)
        s_b = (z_start - z[bwd])[::-1]
        yv, sg = sw.run(y_start, -sign_start, s_b)
        y[bwd], branch[bwd] = yv[::-1], -sg[::-1]
        turns += [z_start - s for s in sw.turns]
    if np.any(~np.isfinite(y)):
        raise ProfileError("integration did not cover the requested grid")
    turns = sorted(set(round(t, 12) for t in turns))
    p = WaveProfile(z, y, branch=branch, meta=dict(meta, kind="orbit", turning_z=turns))
    return prolong(p, fns)


def _local_interval(fns, y):
    lo, hi = fns.domain
    w = 1e-3 * (hi - lo)
    return max(lo, y - w), min(hi, y + w)


# -- H3 inversion route ----------------------------------------------------------


def invert_segment(fns: CascadeFns, y_ref, z_ref, z, sign, bracket, max_iter=30, table=400):
    """Solve ``z - z_ref = sign * H3(y_ref -> y)`` for y on a monotone segment.

    ``bracket`` is the closed y-interval of the segment. H3 is tabulated once
    on a grid clustered at the bracket ends and inverted by monotone
    interpolation; safeguarded Newton steps with ``dH3/dy = 1/sqrt(R)`` then
    polish each point, falling back to bisection when a step leaves the bracket.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    b0, b1 = float(min(bracket)), float(max(bracket))
    target = sign * (z - z_ref)
    # H3 increases with y, so g(y) = H3(y) - target is increasing
    nodes = b0 + (b1 - b0) * 0.5 * (1 - np.cos(np.linspace(0.0, np.pi, table)))
    h_nodes = np.asarray(fns.h3(y_ref, nodes), dtype=float)
    keep = np.concatenate([[True], np.diff(h_nodes) > 0])
    guess = PchipInterpolator(h_nodes[keep], nodes[keep], extrapolate=False)(target)
    lo = np.full(z.size, b0)
    hi = np.full(z.size, b1)
    y = np.where(np.isfinite(guess), guess, np.clip(float(y_ref), b0, b1))
    # H3 carries quadrature noise near 1e-13, so a point is frozen once its
    # Newton step drops below STEP_TOL relative
    active = np.ones(z.size, bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ya = y[idx]
        g = np.asarray(fns.h3(y_ref, ya)).reshape(-1) - target[idx]
        lo[idx] = np.where(g < 0, ya, lo[idx])
        hi[idx] = np.where(g > 0, ya, hi[idx])
        r = np.asarray(fns.radicand(ya)).reshape(-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = g * np.sqrt(np.maximum(r, 0.0))
        cand = ya - step
        ok = np.isfinite(cand) & (cand > lo[idx]) & (cand < hi[idx]) & (r > 0)
        new = np.where(g == 0, ya, np.where(ok, cand, 0.5 * (lo[idx] + hi[idx])))
        width = hi[idx] - lo[idx]
        frozen = (np.abs(new - ya) <= STEP_TOL * np.maximum(1.0, np.abs(ya))) | (
            width <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(ya)))
        y[idx] = new
        active[idx[frozen]] = False
    return y


def implicit_constants(fns: CascadeFns, p: WaveProfile, segment, y_ref):
    """``z - branch * H3(y_ref -> y)`` over one monotone segment (constant for an exact profile)."""
    i, j = segment
    return p.z[i:j] - p.branch[i:j] * np.asarray(fns.h3(y_ref, p.y[i:j]))


# -- travelling waves ------------------------------------------------------------


def to_travelling_wave(p: WaveProfile, C1, x, t, c=None):
    """``u(x, t) = y(x - c t - C1)`` by monotone cubic interpolation of the profile."""
    c = p.meta["c"] if c is None else c
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    zeta = x - c * t - C1
    span = (p.z[0], p.z[-1])
    tol = 1e-12 * max(1.0, abs(span[0]), abs(span[1]))
    if np.any(zeta < span[0] - tol) or np.any(zeta > span[1] + tol):
        raise DomainError(f"x - c t - C1 outside the profile range [{span[0]}, {span[1]}]")
    interp = PchipInterpolator(p.z, p.y, extrapolate=False)
    out = interp(np.clip(zeta, *span))
    return out if out.ndim else float(out)
