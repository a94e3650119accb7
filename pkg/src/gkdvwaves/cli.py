"""Command-line entry point: ``gkdvwaves <subcommand> [flags]``.

Exit codes: 0 success, 1 a check or numerical run failed, 2 usage, parse,
parameter or I/O error. Every subcommand accepts ``--config FILE`` (lines of
``key = value``; flags win) and ``--show-config``, which prints the merged
settings in the same format and exits.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io as gio
from .errors import BlowUpError, GKdVError, ProfileError, QuadratureError
from .odeint import StepSizeUnderflow

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# numerical breakdowns during a well-posed run count as failures, not usage errors
_RUN_FAILURES = (QuadratureError, ProfileError, BlowUpError, StepSizeUnderflow)


class UsageError(Exception):
    pass


def _params(text):
    """``"alpha=1,beta=2"`` (or a list of ``name=value``) -> dict."""
    items = text if isinstance(text, list) else [s for s in str(text).replace(" ", ",").split(",") if s]
    out = {}
    for item in items:
        name, sep, val = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"parameter {item!r} is not name=value")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            raise UsageError(f"parameter {name.strip()!r}: {val!r} is not a number") from None
    return out


def _opt_float(text):
    return None if text in (None, "", "none", "None") else float(text)


# key -> (type, default, help); one table per subcommand, shared keys merged in
_COMMON = {
    "nonlinearity": (str, "6*u", "a(u), e.g. '6*u' or 'alpha*sqrt(u)+beta*u'"),
    "param": (_params, {}, "parameter binding name=value (repeatable)"),
    "c": (float, 1.0, "wave speed"),
    "C2": (float, 0.0, "integration constant C2"),
    "C3": (float, 0.0, "integration constant C3"),
    "ymin": (_opt_float, None, "lower end of the y-domain (default: natural domain)"),
    "ymax": (_opt_float, None, "upper end of the y-domain"),
    "y_base": (_opt_float, None, "gauge base point of H1, H2"),
}

_KEYS = {
    "profile": dict(_COMMON, **{
        "zmin": (float, -10.0, "left end of the z grid"),
        "zmax": (float, 10.0, "right end of the z grid"),
        "dz": (float, 0.01, "z spacing"),
        "y0": (_opt_float, None, "y at z=0 (default: largest simple turning point)"),
        "sign": (float, -1.0, "sign of dy/dz at z=0 when y0 is not a turning point"),
        "out": (str, "-", "CSV path, '-' for stdout"),
    }),
    "cascade-table": dict(_COMMON, **{
        "n": (int, 201, "number of y samples"),
        "y_ref": (_opt_float, None, "lower limit of H3 (default: largest simple turning point, "
                                    "else the sample with the largest R)"),
        "out": (str, "-", "CSV path, '-' for stdout"),
    }),
    "catalog-list": {
        "out": (str, "", "optional JSON path for the listing"),
    },
    "catalog-eval": {
        "id": (str, "kdv_pos", "catalogue entry id"),
        "param": (_params, {}, "parameter binding name=value (repeatable)"),
        "c": (float, 1.0, "wave speed"),
        "C1": (float, 0.0, "phase constant"),
        "t": (float, 0.0, "time"),
        "xmin": (float, -10.0, "left end of the x grid"),
        "xmax": (float, 10.0, "right end of the x grid"),
        "n": (int, 201, "number of x samples"),
        "out": (str, "-", "CSV path, '-' for stdout"),
    },
    "verify": {
        "nonlinearity": _COMMON["nonlinearity"],
        "param": _COMMON["param"],
        "c": _COMMON["c"],
        "C2": _COMMON["C2"],
        "C3": _COMMON["C3"],
        "ymin": _COMMON["ymin"],
        "ymax": _COMMON["ymax"],
        "seed": (int, 0, "seed for every sampled check"),
        "n_points": (int, 50, "jet points for the geometric checks"),
        "out": (str, "", "optional JSON report path"),
    },
    "evolve": {
        "id": (str, "kdv_pos", "catalogue entry giving the initial field and a(u)"),
        "param": (_params, {}, "parameter binding name=value (repeatable)"),
        "c": (float, 1.0, "wave speed of the initial soliton"),
        "C1": (float, 0.0, "initial position offset"),
        "N": (int, 1024, "grid points (power of two)"),
        "L": (float, 80.0, "period"),
        "dt": (_opt_float, None, "time step (default: 0.25 dx / max(1, max|a(u0)|))"),
        "T": (float, 10.0, "final time"),
        "snapshot_every": (_opt_float, None, "snapshot interval in time units"),
        "out_dir": (str, "evolve_out", "directory for snapshots and summary.json"),
    },
}


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def dump(self) -> str:
        lines = [f"# {self.command}"]
        for k in sorted(self.values):
            v = self.values[k]
            if isinstance(v, dict):
                v = ",".join(f"{p}={gio._fmt(float(x))}" for p, x in sorted(v.items()))
            elif v is None:
                v = "none"
            elif isinstance(v, float):
                v = gio._fmt(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def _read_config(path, keys):
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_string("[run]\n" + fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    out = {}
    for k, v in cp["run"].items():
        if k not in keys:
            raise UsageError(f"unknown config key {k!r}")
        try:
            out[k] = keys[k][0](v)
        except ValueError as exc:
            raise UsageError(f"config key {k!r}: {exc}") from None
    return out


def _build_parser():
    ap = argparse.ArgumentParser(prog="gkdvwaves", description="Travelling waves of u_t + u_xxx + a(u) u_x = 0.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, keys, help_text, parent=sub):
        p = parent.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--show-config", action="store_true", help="print merged settings and exit")
        for k, (typ, default, hlp) in keys.items():
            flag = "--" + k.replace("_", "-")
            if k == "param":
                p.add_argument(flag, action="append", metavar="NAME=VALUE", help=hlp)
            else:
                aliases = ["--a"] if k == "nonlinearity" else []
                p.add_argument(flag, *aliases, dest=k, type=str, help=f"{hlp} [default: {default}]")
        return p

    add("profile", _KEYS["profile"], "sample a travelling-wave profile y(z) as CSV")
    add("cascade-table", _KEYS["cascade-table"], "tabulate H1, H2, R, H3 as CSV")
    cat = sub.add_parser("catalog", help="closed-form solution catalogue")
    cs = cat.add_subparsers(dest="action", required=True)
    add("list", _KEYS["catalog-list"], "list entries and their residual screen", cs)
    add("eval", _KEYS["catalog-eval"], "sample an entry on an x grid", cs)
    add("verify", _KEYS["verify"], "run every check for one nonlinearity")
    add("evolve", _KEYS["evolve"], "evolve a catalogue soliton with the spectral solver")
    return ap


def parse_config(argv) -> tuple[RunConfig, bool]:
    ns = vars(_build_parser().parse_args(argv))
    command = ns.pop("command")
    if command == "catalog":
        command = f"catalog-{ns.pop('action')}"
    keys = _KEYS[command]
    values = {k: spec[1] for k, spec in keys.items()}
    path = ns.pop("config", None)
    show = ns.pop("show_config", False)
    if path:
        values.update(_read_config(path, keys))
    for k, v in ns.items():
        try:
            values[k] = keys[k][0](v)
        except ValueError as exc:
            raise UsageError(f"--{k.replace('_', '-')}: {exc}") from None
    return RunConfig(command, values), bool(show)


# -- subcommands ----------------------------------------------------------------------


def _cascade(cfg: RunConfig):
    from .cascade import CascadeConfig, build_cascade

    domain = None
    if cfg.ymin is not None or cfg.ymax is not None:
        if cfg.ymin is None or cfg.ymax is None:
            raise UsageError("--ymin and --ymax go together")
        domain = (cfg.ymin, cfg.ymax)
    ccfg = CascadeConfig(cfg.nonlinearity, cfg.c, cfg.param, cfg.C2, cfg.C3, y_base=cfg.y_base, domain=domain)
    return build_cascade(ccfg)


def _top_turning_point(fns):
    from .profile import find_turning_points

    simple = [p.y for p in find_turning_points(fns) if p.multiplicity == "simple"]
    if not simple:
        raise UsageError("R has no simple turning point in the domain; pass --y0/--y-ref explicitly")
    return max(simple)


def _write_csv(cols, rows, out):
    if out in ("", "-"):
        sys.stdout.write(gio.format_csv(cols, rows))
    else:
        gio.emit_csv(cols, rows, out)


def cmd_profile(cfg):
    from .profile import integrate_profile

    fns = _cascade(cfg)
    y0 = cfg.y0 if cfg.y0 is not None else _top_turning_point(fns)
    p = integrate_profile(fns, (cfg.zmin, cfg.zmax), y0, cfg.sign, dz=cfg.dz)
    _write_csv(["z", "y", "y1", "y2", "branch"], zip(p.z, p.y, p.y1, p.y2, p.branch), cfg.out)
    return EXIT_OK


def cascade_table(fns, ys, y_ref):
    """Rows (y, H1, H2, R, H3); H3 is NaN where it is undefined from ``y_ref``."""
    ys = np.asarray(ys, dtype=float)
    h1 = np.asarray(fns.h1(ys))
    h2 = np.full(ys.shape, np.nan)
    ok = ys != 0 if fns.cfg.y_base != 0 else np.ones(ys.shape, bool)
    h2[ok] = fns.h2(ys[ok])
    r = np.asarray(fns.radicand(ys))
    h3 = np.full(ys.shape, np.nan)
    for i, y in enumerate(ys):
        try:
            h3[i] = fns.h3(y_ref, y)
        except GKdVError:
            pass
    return list(zip(ys, h1, h2, r, h3))


def cmd_cascade_table(cfg):
    fns = _cascade(cfg)
    lo, hi = fns.domain
    if cfg.n < 1:
        raise UsageError("--n must be positive")
    ys = np.linspace(lo, hi, cfg.n)
    y_ref = cfg.y_ref
    if y_ref is None:
        try:
            y_ref = _top_turning_point(fns)
        except UsageError:
            y_ref = float(ys[np.argmax(fns.radicand(ys))])
    rows = cascade_table(fns, ys, y_ref)
    _write_csv(["y", "H1", "H2", "R", "H3"], rows, cfg.out)
    return EXIT_OK


def catalog_listing():
    from .catalog import list_catalog

    return [
        {"id": e.id, "a": e.a_source, "params": list(e.param_names),
         "constraints": [c.text for c in e.constraints], "formula": e.formula_text,
         "validated": e.validated,
         "screen": [{"case": lbl, "max_residual": res, "note": note} for lbl, res, note in e.screen_detail]}
        for e in list_catalog()
    ]


def cmd_catalog_list(cfg):
    listing = catalog_listing()
    for e in listing:
        worst = max((s["max_residual"] for s in e["screen"]), default=float("nan"))
        print(f"{e['id']:<16} a={e['a']:<22} validated={str(e['validated']).lower():<5} "
              f"max_residual={worst:.3g}")
    if cfg.out:
        gio.emit_json({"entries": listing}, cfg.out)
    return EXIT_OK


def cmd_catalog_eval(cfg):
    from .catalog import get_entry, sample_field

    try:
        e = get_entry(cfg.id, screened=False)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    if cfg.n < 1:
        raise UsageError("--n must be positive")
    x = np.linspace(cfg.xmin, cfg.xmax, cfg.n)
    u = sample_field(e, x, cfg.t, cfg.c, cfg.C1, cfg.param)
    _write_csv(["x", "u"], zip(x, u), cfg.out)
    return EXIT_OK


def cmd_verify(cfg):
    from .expr import parse
    from .verify import VerifyConfig, full_report

    parse(cfg.nonlinearity)  # syntax errors are usage errors, not failed checks
    domain = None
    if cfg.ymin is not None and cfg.ymax is not None:
        domain = (cfg.ymin, cfg.ymax)
    vc = VerifyConfig(cfg.nonlinearity, cfg.c, cfg.param, cfg.C2, cfg.C3, domain=domain, seed=cfg.seed,
                      n_points=cfg.n_points)
    reports = full_report(vc)
    rows = [r.as_dict() for r in reports]
    all_pass = all(r.passed for r in reports)
    print(f"{'check':<34} {'max_residual':>12} {'tolerance':>10}  result")
    for r in reports:
        print(f"{r.check_id:<34} {r.max_residual:12.3e} {r.tolerance:10.1e}  {'pass' if r.passed else 'FAIL'}")
    doc = {"nonlinearity": cfg.nonlinearity, "params": cfg.param, "c": cfg.c, "C2": cfg.C2, "C3": cfg.C3,
           "seed": cfg.seed, "checks": rows, "pass": all_pass}
    if cfg.out:
        gio.emit_json(doc, cfg.out)
    return EXIT_OK if all_pass else EXIT_FAIL


def cmd_evolve(cfg):
    from .catalog import get_entry
    from .evolve import SpectralGrid, evolve_gkdv, shape_error, soliton_state

    try:
        e = get_entry(cfg.id, screened=False)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    e.check(cfg.c, cfg.param)
    grid = SpectralGrid(cfg.N, cfg.L)
    u0 = soliton_state(e, grid, cfg.c, cfg.C1, cfg.param)
    res = evolve_gkdv(u0, e.a_source, e.a_params(cfg.param), grid, dt=cfg.dt, T=cfg.T,
                      snapshot_every=cfg.snapshot_every)
    os.makedirs(cfg.out_dir, exist_ok=True)
    names = []
    for i, s in enumerate(res.snapshots):
        name = f"snapshot_{i:04d}.csv"
        gio.emit_csv(["x", "u"], zip(grid.x, s.u), os.path.join(cfg.out_dir, name))
        names.append({"file": name, "t": s.t})
    err = shape_error(res.state, e, cfg.c, cfg.C1, grid, cfg.param)
    m0 = res.mass[0][1]
    summary = {
        "entry": e.id, "a": e.a_source, "params": cfg.param, "c": cfg.c, "C1": cfg.C1,
        "N": cfg.N, "L": cfg.L, "T": cfg.T, "dt": res.dt, "steps": res.steps,
        "snapshots": names,
        "peaks": [{"t": t, "x": x} for t, x in res.peaks],
        "mass": [{"t": t, "mass": m} for t, m in res.mass],
        "mass_drift_rel": max(abs(m - m0) for _, m in res.mass) / max(abs(m0), 1e-300),
        "peak_displacement": float(grid.wrap(res.peaks[-1][1] - res.peaks[0][1])),
        "expected_displacement": cfg.c * cfg.T,
        "shape_error_aligned": err.aligned, "shape_error_raw": err.raw, "phase_shift": err.phase,
    }
    gio.emit_json(summary, os.path.join(cfg.out_dir, "summary.json"))
    print(f"{res.steps} steps of dt={res.dt:.6g}; peak moved {summary['peak_displacement']:.6f} "
          f"(c T = {cfg.c * cfg.T:g}); aligned shape error {err.aligned:.3e}; "
          f"mass drift {summary['mass_drift_rel']:.3e}")
    return EXIT_OK


_COMMANDS = {
    "profile": cmd_profile,
    "cascade-table": cmd_cascade_table,
    "catalog-list": cmd_catalog_list,
    "catalog-eval": cmd_catalog_eval,
    "verify": cmd_verify,
    "evolve": cmd_evolve,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg, show = parse_config(argv)
    except SystemExit as exc:  # argparse: --help (0) or a usage error (2)
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"gkdvwaves: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if show:
        sys.stdout.write(cfg.dump())
        return EXIT_OK
    try:
        with np.errstate(all="ignore"):
            return _COMMANDS[cfg.command](cfg)
    except _RUN_FAILURES as exc:
        print(f"gkdvwaves: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, GKdVError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"gkdvwaves: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())
