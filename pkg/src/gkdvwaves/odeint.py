"""Adaptive Dormand-Prince 5(4) integrator in a selectable float precision.

scipy's integrators are float64-only. Conserved-quantity monitoring along
orbits that approach a saddle needs accumulated error below double-precision
roundoff, so this integrator runs its state and tableau in ``np.longdouble``
when asked.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as Fr

import numpy as np

from .errors import GKdVError

_A = [
    [],
    [Fr(1, 5)],
    [Fr(3, 40), Fr(9, 40)],
    [Fr(44, 45), Fr(-56, 15), Fr(32, 9)],
    [Fr(19372, 6561), Fr(-25360, 2187), Fr(64448, 6561), Fr(-212, 729)],
    [Fr(9017, 3168), Fr(-355, 33), Fr(46732, 5247), Fr(49, 176), Fr(-5103, 18656)],
    [Fr(35, 384), Fr(0), Fr(500, 1113), Fr(125, 192), Fr(-2187, 6784), Fr(11, 84)],
]
_B = [Fr(35, 384), Fr(0), Fr(500, 1113), Fr(125, 192), Fr(-2187, 6784), Fr(11, 84), Fr(0)]
_BHAT = [Fr(5179, 57600), Fr(0), Fr(7571, 16695), Fr(393, 640), Fr(-92097, 339200), Fr(187, 2100), Fr(1, 40)]
_C = [Fr(0), Fr(1, 5), Fr(3, 10), Fr(4, 5), Fr(8, 9), Fr(1), Fr(1)]


def _tableau(dtype):
    cv = lambda q: dtype(q.numerator) / dtype(q.denominator)  # noqa: E731
    a = [[cv(q) for q in row] for row in _A]
    e = [cv(b) - cv(bh) for b, bh in zip(_B, _BHAT)]
    return a, e, [cv(q) for q in _C]


@dataclass
class Trajectory:
    z: np.ndarray
    y: np.ndarray  # shape (n_state, n_steps)
    rtol: float
    atol: float
    n_rejected: int

    @property
    def n_steps(self):
        return self.z.size - 1


class StepSizeUnderflow(GKdVError, RuntimeError):
    pass


def dopri5(f, z_span, y0, rtol=1e-12, atol=1e-15, dtype=np.float64, h0=None, max_steps=1_000_000):
    """Integrate ``y' = f(z, y)`` over ``z_span`` storing every accepted step.

    ``f`` receives and must return 1-D arrays of ``dtype``. Error control is
    the usual RMS norm of ``err / (atol + rtol * max(|y_n|, |y_{n+1}|))``.
    """
    a, e, c = _tableau(dtype)
    z0, z1 = (dtype(v) for v in z_span)
    direction = dtype(1) if z1 >= z0 else dtype(-1)
    y = np.array(y0, dtype=dtype)
    rtol_, atol_ = dtype(rtol), dtype(atol)
    k = [None] * 7
    k[0] = np.asarray(f(z0, y), dtype=dtype)
    h = dtype(h0) if h0 is not None else dtype(1e-3) * max(abs(z1 - z0), dtype(1))
    zs, ys = [z0], [y.copy()]
    z = z0
    rejected = 0
    one, fifth = dtype(1), dtype(0.2)
    while direction * (z1 - z) > 0:
        if len(zs) > max_steps:
            raise StepSizeUnderflow("maximum number of steps exceeded")
        h = min(h, abs(z1 - z))
        if z + direction * h == z:
            raise StepSizeUnderflow(f"step size underflow at z={float(z):.6g}")
        hs = direction * h
        for i in range(1, 7):
            acc = sum(a[i][j] * k[j] for j in range(i))
            k[i] = np.asarray(f(z + c[i] * hs, y + hs * acc), dtype=dtype)
        y_new = y + hs * sum(a[6][j] * k[j] for j in range(6))
        err = hs * sum(e[j] * k[j] for j in range(7))
        scale = atol_ + rtol_ * np.maximum(np.abs(y), np.abs(y_new))
        en = np.sqrt(np.mean((err / scale) ** 2))
        if not np.isfinite(en):
            raise StepSizeUnderflow(f"non-finite state near z={float(z):.6g}")
        if en <= one:
            z = z + hs
            y = y_new
            k[0] = k[6]  # FSAL
            zs.append(z)
            ys.append(y.copy())
        else:
            rejected += 1
        factor = dtype(5) if en == 0 else min(dtype(5), max(fifth, dtype(0.9) * en ** (-fifth)))
        h = h * factor
    return Trajectory(np.array(zs, dtype=dtype), np.array(ys, dtype=dtype).T, rtol, atol, rejected)
