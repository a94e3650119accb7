"""Closed-form travelling waves for particular nonlinearities.

Each entry evaluates its printed formula literally, written in terms of
``theta = C1 - x + c t`` (or ``z = x - c t``), with dual-aware elementary
functions so that nested duals give exact x- and t-derivatives. Entries are
screened against the PDE residual when the catalogue is listed; a formula that
fails the screen is kept and flagged ``validated=False`` rather than corrected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from . import dual as D
from .errors import ConstraintError, DomainError, GKdVError

SCREEN_POINTS = 200
SCREEN_TOL = 1e-8
SCREEN_SEED = 0


@dataclass(frozen=True)
class Constraint:
    text: str
    check: Callable  # (c, params) -> bool


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    a_source: str
    param_names: tuple
    constraints: tuple
    formula: Callable  # (x, t, c, C1, params) -> u, dual-aware
    formula_text: str
    # parameter sets used by the residual screen: tuples of (c, params)
    screen_cases: tuple = ()
    window: float = 10.0  # half-width of the sampled |x - c t - C1| range
    validated: bool | None = None
    screen_detail: tuple = field(default=(), compare=False)

    def check(self, c, params: Mapping[str, float] | None = None):
        params = dict(params or {})
        missing = [p for p in self.param_names if p not in params]
        if missing:
            raise ConstraintError(f"{self.id}: missing parameter(s) {', '.join(missing)}")
        for con in self.constraints:
            if not con.check(c, params):
                raise ConstraintError(f"{self.id}: requires {con.text} (got c={c}, params={params})")

    def a_params(self, params):
        """Parameters of the nonlinearity (a subset of the entry's)."""
        return {k: params[k] for k in self.param_names if k in params}


def eval_entry(e: CatalogEntry, x, t, c, C1=0.0, params=None):
    """Value of the entry's formula; dual ``x``/``t`` give exact derivatives."""
    params = dict(params or {})
    e.check(c, params)
    return e.formula(x, t, float(c), float(C1), params)


# -- formulas ---------------------------------------------------------------------


def _theta(x, t, c, C1):
    return C1 - x + c * t


def _sech2(s):
    e = D.exp(s)
    em = D.exp(-s)
    ch = 0.5 * (e + em)
    return D.div(1.0, ch * ch)


def _kdv_pos(x, t, c, C1, p):
    return (c / 2) * _sech2(np.sqrt(c) / 2 * _theta(x, t, c, C1))


def _kdv_neg(x, t, c, C1, p):
    s = D.cos(np.sqrt(-c) / 2 * _theta(x, t, c, C1))
    return (c / 2) * D.div(1.0, s * s)


def _mkdv_pos(x, t, c, C1, p):
    e = D.exp(np.sqrt(c) * _theta(x, t, c, C1))
    return D.div(144 * c * e, e * e + 864 * c)


def _power_pos(x, t, c, C1, p):
    n = p["n"]
    s = n / 2 * np.sqrt(c) * _theta(x, t, c, C1)
    e, em = D.exp(s), D.exp(-s)
    ch = 0.5 * (e + em)
    return D.power(D.div(c * n * (n + 1) * (n + 2), 2 * ch * ch), 1.0 / n)


def _power_neg(x, t, c, C1, p):
    n = p["n"]
    # printed with sqrt(c) although c < 0: evaluated literally
    s = n / 2 * D.sqrt(c) * _theta(x, t, c, C1)
    k = D.cos(s)
    return D.power(D.div(c * n * (n + 1) * (n + 2), 2 * k * k), 1.0 / n)


def _schamel_pos(x, t, c, C1, p):
    al, be = p["alpha"], p["beta"]
    h = D.exp(0.5 * np.sqrt(c) * _theta(x, t, c, C1))
    q = D.div(900 * c * h, 240 * al * h + h * h + 67500 * be * c + 14400 * al * al)
    return q * q


def _schamel_neg(x, t, c, C1, p):
    al, be = p["alpha"], p["beta"]
    xi = 16 * al * al + 75 * be * c
    z = x - c * t
    arg = np.sqrt(-c) * (C1 - z) / 2
    cs = D.cos(arg)
    den = 75 * be * c - xi * cs * cs
    num = 225 * c * c * (8 * al * D.sqrt(xi) * D.sin(arg) + den)
    return D.div(num, den * den)


def _gardner_pos(x, t, c, C1, p):
    al, be = p["alpha"], p["beta"]
    e = D.exp(np.sqrt(c) * _theta(x, t, c, C1))
    return D.div(144 * c * e, 576 * al * al + 48 * e * al - 864 * be * c + e * e)


_POS = Constraint("c > 0", lambda c, p: c > 0)
_NEG = Constraint("c < 0", lambda c, p: c < 0)
_NAT = Constraint("n a positive integer", lambda c, p: float(p["n"]).is_integer() and p["n"] >= 1)
_NOT_ZERO = Constraint("(alpha, beta) != (0, 0)", lambda c, p: not (p["alpha"] == 0 and p["beta"] == 0))

_AB = {"alpha": 1.0, "beta": 1.0}

_ENTRIES = (
    CatalogEntry("kdv_pos", "6*u", (), (_POS,), _kdv_pos,
                 "c/2 sech^2(sqrt(c)/2 (C1 - x + c t))", ((1.0, {}), (4.0, {}))),
    CatalogEntry("kdv_neg", "6*u", (), (_NEG,), _kdv_neg,
                 "c/2 sec^2(sqrt(-c)/2 (C1 - x + c t))", ((-1.0, {}),)),
    CatalogEntry("mkdv_pos", "u^2", (), (_POS,), _mkdv_pos,
                 "144 c e^s / (e^(2s) + 864 c), s = sqrt(c) (C1 - x + c t)", ((1.0, {}),)),
    CatalogEntry("power_pos", "u^n/n", ("n",), (_POS, _NAT), _power_pos,
                 "(c n (n+1) (n+2) / (2 cosh^2(n/2 sqrt(c) (C1 - x + c t))))^(1/n)",
                 tuple((1.0, {"n": float(n)}) for n in range(1, 5))),
    CatalogEntry("power_neg", "u^n/n", ("n",), (_NEG, _NAT), _power_neg,
                 "(c n (n+1) (n+2) / (2 cos^2(n/2 sqrt(c) (C1 - x + c t))))^(1/n)",
                 tuple((-1.0, {"n": float(n)}) for n in range(1, 5))),
    CatalogEntry("schamel_kdv_pos", "alpha*sqrt(u)+beta*u", ("alpha", "beta"), (_POS,), _schamel_pos,
                 "(900 c h / (240 alpha h + h^2 + 67500 beta c + 14400 alpha^2))^2, h = e^(sqrt(c)/2 (C1 - x + c t))",
                 ((1.0, _AB),)),
    CatalogEntry("schamel_kdv_neg", "alpha*sqrt(u)+beta*u", ("alpha", "beta"), (_NEG,), _schamel_neg,
                 "225 c^2 (8 alpha sqrt(xi) sin(w) + 75 beta c - xi cos^2(w)) / (75 beta c - xi cos^2(w))^2, "
                 "w = sqrt(-c) (C1 - z)/2, xi = 16 alpha^2 + 75 beta c",
                 ((-0.1, _AB),)),
    CatalogEntry("gardner_pos", "2*alpha*u-beta*u^2", ("alpha", "beta"), (_POS, _NOT_ZERO), _gardner_pos,
                 "144 c e^s / (576 alpha^2 + 48 alpha e^s - 864 beta c + e^(2s)), s = sqrt(c) (C1 - x + c t)",
                 ((1.0, _AB),)),
)


def raw_entries():
    """Entries without running the residual screen."""
    return _ENTRIES


def get_entry(entry_id: str, screened=True) -> CatalogEntry:
    pool = list_catalog() if screened else _ENTRIES
    for e in pool:
        if e.id == entry_id:
            return e
    raise KeyError(f"unknown catalog entry {entry_id!r}; known: {', '.join(e.id for e in _ENTRIES)}")


def screen_entry(e: CatalogEntry, n=SCREEN_POINTS, tol=SCREEN_TOL, seed=SCREEN_SEED) -> CatalogEntry:
    """Run the PDE residual screen on each of the entry's screen cases."""
    from .verify import pde_residual, sample_points

    detail = []
    ok = True
    for c, params in e.screen_cases:
        label = f"c={c:g}" + "".join(f", {k}={v:g}" for k, v in sorted(params.items()))
        try:
            pts = sample_points(e, c, 0.0, params, n=n, seed=seed)
            res = pde_residual(e, pts, c, 0.0, params)
            good = bool(res <= tol)
            detail.append((label, float(res), "pass" if good else "residual above tolerance"))
        except (GKdVError, FloatingPointError, ZeroDivisionError) as exc:
            good = False
            detail.append((label, float("nan"), f"{type(exc).__name__}: {exc}"))
        ok = ok and good
    return replace(e, validated=ok, screen_detail=tuple(detail))


@lru_cache(maxsize=1)
def list_catalog():
    """All entries, each screened and flagged ``validated`` accordingly."""
    return tuple(screen_entry(e) for e in _ENTRIES)


def pseudo_entry(entry_id: str, a_source: str, fn, param_names=(), window=10.0) -> CatalogEntry:
    """An unconstrained entry wrapping ``fn(x, t, c, C1, params)`` (test fields)."""
    return CatalogEntry(entry_id, a_source, tuple(param_names), (), fn, "user-supplied", (), window)


def sample_field(e: CatalogEntry, x, t, c, C1=0.0, params=None):
    """Plain float evaluation on arrays (no derivatives)."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    out = eval_entry(e, x, t, c, C1, params)
    if isinstance(out, D.Dual):
        out = D.real_part(out)
    out = np.asarray(out, dtype=float) + 0.0 * x
    if not np.all(np.isfinite(out)):
        raise DomainError(f"{e.id} is not finite at some requested points")
    return out
