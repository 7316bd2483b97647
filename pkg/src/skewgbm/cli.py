"""Command-line front end.

Subcommands: classify, price, boundary, sweep, verify, oracle.  Parameters
come from flags, a flat JSON file (``--config``), or a figure preset
(``--figure N``); flags override the file, which overrides the preset.

Exit codes: 0 ok, 1 internal or input error, 2 value function infinite
(r <= b), 3 degenerate beta, 4 verification failure, 5 oracle disagreement.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import AssumptionViolated, DegenerateBeta, SkewGbmError
from .model import PARAM_NAMES, SkewGbmParams, classify
from .value import Regime, solve

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_ASSUMPTION = 2
EXIT_DEGENERATE = 3
EXIT_VERIFY = 4
EXIT_ORACLE = 5

THREADS_ENV = "SKEWGBM_THREADS"

_REFERENCE = {"r": 0.1, "b": 0.05, "sigma": 0.3, "K": 1.0}

# one parameter set per qualitative picture; 10 and 12 share a set
FIGURES = {
    4: dict(_REFERENCE, beta=-0.1, z=1.0),
    5: dict(_REFERENCE, beta=-0.1, z=2.8),
    6: dict(_REFERENCE, beta=-0.1, z=4.5),
    7: dict(_REFERENCE, beta=-0.5, z=0.9),
    8: dict(_REFERENCE, beta=-0.5, z=2.5),
    9: dict(_REFERENCE, beta=-0.5, z=4.5),
    10: dict(_REFERENCE, beta=0.3, z=2.0),
    11: dict(_REFERENCE, beta=-0.5, z=1.6),
    12: dict(_REFERENCE, beta=0.3, z=2.0),
    13: dict(_REFERENCE, beta=0.3, z=7.25),
}

FIGURE_REGIMES = {
    4: Regime.ONE_SIDED_ALPHA,
    5: Regime.ONE_SIDED_AT_Z,
    6: Regime.ONE_SIDED_Z0,
    7: Regime.ONE_SIDED_ALPHA,
    8: Regime.ONE_SIDED_AT_Z,
    9: Regime.ONE_SIDED_Z0,
    10: Regime.ONE_SIDED_ALPHA,
    11: Regime.POINT_PLUS_RAY,
    12: Regime.ONE_SIDED_ALPHA,
    13: Regime.TWO_INTERVALS,
}

# default sweeps for --figure with the boundary and sweep commands
FIGURE_SWEEPS = {
    4: ("z", 0.2, 2.3), 5: ("z", 2.4, 3.2), 6: ("z", 3.4, 6.0),
    7: ("z", 0.2, 1.3), 8: ("z", 2.0, 3.2), 9: ("z", 3.4, 6.0),
    10: ("z", 0.5, 5.5), 11: ("z", 1.34, 1.99), 12: ("z", 0.5, 5.5),
    13: ("z", 5.6, 9.0),
}

SWEEPABLE = ("z", "beta", "b", "sigma")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INTERNAL, f"{self.prog}: error: {message}\n")


def _csv_header(kind, **fields):
    items = " ".join(f"{k}={_fmt(v)}" for k, v in fields.items())
    return f"# skewgbm-{kind}/1 version={__version__} {items}".rstrip() + "\n"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _num(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------


def _add_param_flags(p):
    g = p.add_argument_group("model parameters")
    for name in PARAM_NAMES:
        g.add_argument(f"--{name}", type=float, default=None)
    g.add_argument("--config", help="flat JSON file with the six parameters")
    g.add_argument("--figure", type=int, choices=sorted(FIGURES), help="parameter preset")
    p.add_argument("--out", help="write to this file instead of stdout")


def params_from_args(args) -> SkewGbmParams:
    values = {}
    if args.figure is not None:
        values.update(FIGURES[args.figure])
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        unknown = sorted(set(data) - set(PARAM_NAMES))
        if unknown:
            raise SkewGbmError(f"unknown parameters in config: {', '.join(unknown)}")
        values.update(data)
    for name in PARAM_NAMES:
        v = getattr(args, name)
        if v is not None:
            values[name] = v
    return SkewGbmParams.from_dict(values)


def _threads(args):
    if getattr(args, "threads", None):
        return args.threads
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_classify(args):
    prof = classify(params_from_args(args))
    return json.dumps(prof.to_dict(), indent=2) + "\n", EXIT_OK


def _parse_xs(text):
    xs = [float(t) for t in text.replace(" ", "").split(",") if t]
    if not xs:
        raise SkewGbmError("no x values given")
    return xs


def cmd_price(args):
    params = params_from_args(args)
    vf = solve(params)
    xs = np.array(_parse_xs(args.x))
    buf = io.StringIO()
    consts = {k: vf.constants[k] for k in sorted(vf.constants)}
    buf.write(_csv_header("price", regime=vf.regime.value, **consts))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "v", "dv_left", "dv_right", "region"])
    v, dl, dr = vf.evaluate(xs), vf.d_left(xs), vf.d_right(xs)
    stop = vf.is_stopping(xs)
    for row in zip(xs, v, dl, dr, stop):
        w.writerow([_num(float(c)) for c in row[:4]] + ["stop" if row[4] else "continue"])
    return buf.getvalue(), EXIT_OK


def _sweep_values(args, params):
    if args.figure is not None and args.vary is None:
        name, lo, hi = FIGURE_SWEEPS[args.figure]
    else:
        name, lo, hi = args.vary, args.lo, args.hi
    if name is None:
        return None, [None]
    if name not in SWEEPABLE:
        raise SkewGbmError(f"cannot sweep {name!r}; choose from {', '.join(SWEEPABLE)}")
    if lo is None or hi is None or not lo < hi:
        raise SkewGbmError("a sweep needs --lo < --hi")
    if args.count < 2:
        raise SkewGbmError("a sweep needs --count >= 2")
    return name, [float(v) for v in np.linspace(lo, hi, args.count)]


BOUNDARY_COLUMNS = ("alpha", "xi", "gamma", "zeta", "z_minus", "z_plus")


def _boundary_row(params, name, value):
    try:
        p = params if name is None else params.replace(**{name: float(value)})
        prof = classify(p)
        vf = solve(p)
        c = vf.constants
        row = {
            "case": prof.case.value,
            "regime": vf.regime.value,
            "alpha": c.get("a") if vf.regime is Regime.ONE_SIDED_ALPHA else None,
            "xi": c.get("xi"),
            "gamma": c.get("gamma"),
            "zeta": c.get("zeta"),
            "z_minus": c.get("z_minus"),
            "z_plus": c.get("z_plus"),
            "error": "",
        }
    except SkewGbmError as exc:
        row = {"case": "", "regime": "", "error": f"{type(exc).__name__}: {exc}"}
    return row


def cmd_boundary(args):
    params = params_from_args(args)
    name, values = _sweep_values(args, params)
    with ThreadPoolExecutor(_threads(args)) as pool:
        rows = list(pool.map(lambda v: _boundary_row(params, name, v), values))
    buf = io.StringIO()
    buf.write(_csv_header("boundary", vary=name or "none", **params.to_dict()))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", name or "param", "case", "regime", *BOUNDARY_COLUMNS, "error"])
    for i, (v, row) in enumerate(zip(values, rows)):
        w.writerow([i, _num(v), row["case"], row["regime"]]
                   + [_num(row.get(c)) for c in BOUNDARY_COLUMNS] + [row["error"]])
    return buf.getvalue(), EXIT_OK


def _x_grid(vf, args):
    right = max([vf.params.z, classify(vf.params).z0, *vf.breakpoints])
    lo = args.x_lo if args.x_lo is not None else 0.0
    hi = args.x_hi if args.x_hi is not None else 1.5 * right
    xs = np.linspace(lo, hi, args.x_count)
    xs = xs[xs > 0]
    return np.unique(np.concatenate([xs, [b for b in vf.breakpoints if lo < b <= hi]]))


def _sweep_rows(params, name, value, args):
    p = params if name is None else params.replace(**{name: float(value)})
    try:
        vf = solve(p)
    except SkewGbmError as exc:
        return None, f"{type(exc).__name__}: {exc}"
    xs = _x_grid(vf, args)
    return (vf.regime.value, xs, vf.evaluate(xs), np.maximum(xs - p.K, 0.0), vf.is_stopping(xs)), ""


def cmd_sweep(args):
    params = params_from_args(args)
    name, values = _sweep_values(args, params)
    if args.figure is not None and args.vary is None and args.samples_only_base:
        values = [None]
        name = None
    with ThreadPoolExecutor(_threads(args)) as pool:
        results = list(pool.map(lambda v: _sweep_rows(params, name, v, args), values))
    buf = io.StringIO()
    buf.write(_csv_header("sweep", figure=args.figure if args.figure else "none",
                          vary=name or "none", **params.to_dict()))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample", name or "param", "regime", "x", "v", "payoff", "stop", "error"])
    for i, (v, (res, err)) in enumerate(zip(values, results)):
        if res is None:
            w.writerow([i, _num(v), "", "", "", "", "", err])
            continue
        regime, xs, vs, pay, stop = res
        for x, val, g, s in zip(xs, vs, pay, stop):
            w.writerow([i, _num(v), regime, _num(float(x)), _num(float(val)), _num(float(g)), int(s), ""])
    return buf.getvalue(), EXIT_OK


def cmd_verify(args):
    from .verify import GridConfig, verify

    params = params_from_args(args)
    vf = solve(params)
    rep = verify(vf, params, GridConfig(nodes=args.nodes))
    out = rep.to_dict()
    out["regime"] = vf.regime.value
    return json.dumps(out, indent=2) + "\n", EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_oracle(args):
    params = params_from_args(args)
    vf = solve(params)
    if args.which == "fd":
        from .oracles.fd import FdConfig, fd_solve

        res = fd_solve(params, FdConfig(nodes=args.nodes, interface=args.interface, method=args.method))
        err = res.relative_error(vf)
        z_node = bool(res.active[res.interface_index])
        text = res.to_csv(vf)
        lines = text.splitlines(keepends=True)
        lines.insert(1, f"# max_rel_diff={err!r} tol={args.tol!r} z_node_active={int(z_node)} "
                        f"regime={vf.regime.value}\n")
        return "".join(lines), EXIT_OK if err <= args.tol else EXIT_ORACLE

    from .oracles.mc import McConfig, mc_estimate

    x0 = params.K if args.x0 is None else args.x0
    cfg = McConfig(paths=args.paths, dt=args.dt, horizon=args.horizon, seed=args.seed,
                   antithetic=not args.no_antithetic, scheme=args.scheme)
    res = mc_estimate(params, vf.region, cfg, x0=x0)
    v = float(vf.evaluate(x0))
    out = res.to_dict()
    out["v_analytic"] = v
    out["z_score"] = (out["mean"] - v) / res.se if res.se > 0 else 0.0
    ok = abs(out["mean"] - v) <= 3 * res.se + 1e-3 * v
    return json.dumps(out, indent=2) + "\n", EXIT_OK if ok else EXIT_ORACLE


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="skewgbm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="case tag and critical constants (JSON)")
    _add_param_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("price", help="value, one-sided derivatives and region flag (CSV)")
    _add_param_flags(p)
    p.add_argument("--x", required=True, help="comma-separated spot values")
    p.set_defaults(func=cmd_price)

    for name, func, helptext in (
        ("boundary", cmd_boundary, "free-boundary objects against a swept parameter (CSV)"),
        ("sweep", cmd_sweep, "value function curves against a swept parameter (CSV)"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_param_flags(p)
        p.add_argument("--vary", choices=SWEEPABLE)
        p.add_argument("--lo", type=float)
        p.add_argument("--hi", type=float)
        p.add_argument("--count", type=int, default=50)
        p.add_argument("--threads", type=int, default=None, help=f"default from ${THREADS_ENV}")
        if name == "sweep":
            p.add_argument("--x-lo", type=float, default=None)
            p.add_argument("--x-hi", type=float, default=None)
            p.add_argument("--x-count", type=int, default=200)
            p.add_argument("--single", dest="samples_only_base", action="store_true",
                           help="with --figure: only the preset itself, no sweep")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="variational-inequality residuals (JSON)")
    _add_param_flags(p)
    p.add_argument("--nodes", type=int, default=4096)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="finite-difference or Monte Carlo comparison")
    _add_param_flags(p)
    p.add_argument("--which", choices=("fd", "mc"), required=True)
    p.add_argument("--nodes", type=int, default=4000)
    p.add_argument("--interface", choices=("simple", "flux"), default="simple")
    p.add_argument("--method", choices=("policy", "psor"), default="policy")
    p.add_argument("--tol", type=float, default=5e-3)
    p.add_argument("--x0", type=float, default=None)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--scheme", choices=("bridge", "euler"), default="bridge")
    p.add_argument("--no-antithetic", action="store_true")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, code = args.func(args)
    except AssumptionViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except DegenerateBeta as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: beta = 0 is the GBM reference case; "
              "skewgbm.model.classical_perpetual_call gives its value", file=sys.stderr)
        return EXIT_DEGENERATE
    except (SkewGbmError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the exit flush
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return code


def main_entry():
    sys.exit(main())


def load_schema(name: str) -> dict:
    """One of the shipped JSON schemas, e.g. ``"case_profile"``."""
    from importlib.resources import files

    return json.loads((files("skewgbm") / "schemas" / f"{name}.schema.json").read_text())


if __name__ == "__main__":
    main_entry()
