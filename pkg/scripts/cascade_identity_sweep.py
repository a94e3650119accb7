#!/usr/bin/env python3
"""Numerically built R(y) against the closed-form radicands over a (c, C2, C3) sweep.

Writes one CSV row per case: nonlinearity, parameters, constants, max error
relative to max|R| on a 1000-point grid, and build+evaluate time.
"""

import argparse
import itertools
import time

import numpy as np

from gkdvwaves.cascade import CascadeConfig, build_cascade, known_radicand
from gkdvwaves.io import emit_csv

CASES = [
    ("6*u", {}),
    ("u^2", {}),
    ("2*alpha*u-beta*u^2", {"alpha": 1.0, "beta": 2.0}),
    ("u^n/n", {"n": 3.0}),
    ("u^n/n", {"n": 4.0}),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="cascade_identity.csv")
    ap.add_argument("--points", type=int, default=1000)
    ap.add_argument("--ymax", type=float, default=2.0)
    args = ap.parse_args()

    y = np.linspace(-args.ymax, args.ymax, args.points)
    rows = []
    for (a, p), c, C2, C3 in itertools.product(CASES, (1.0, -1.0), (0.0, 0.3), (0.0, 0.1)):
        t0 = time.perf_counter()
        fns = build_cascade(CascadeConfig(a, c, p, C2, C3, domain=(-args.ymax, args.ymax)))
        got = fns.radicand(y)
        dt = time.perf_counter() - t0
        ref = known_radicand(a)(y, c, C2, C3, p)
        err = np.max(np.abs(got - ref)) / np.max(np.abs(ref))
        label = ";".join(f"{k}={v:g}" for k, v in sorted(p.items()))
        rows.append((a, label, c, C2, C3, err, dt))
        print(f"{a:<20} {label:<16} c={c:+g} C2={C2:g} C3={C3:g}  rel err {err:.2e}  {dt * 1e3:.1f} ms")
    emit_csv(["a", "params", "c", "C2", "C3", "rel_error", "seconds"], rows, args.out)
    worst = max(r[5] for r in rows)
    print(f"worst relative error {worst:.2e} over {len(rows)} cases -> {args.out}")


if __name__ == "__main__":
    main()
