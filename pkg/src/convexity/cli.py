"""Command-line front end.

    convexity pointwise --builtin h_cos --at 0,0
    convexity global    --builtin h_cos --center 0,0 --a 3.14159
    convexity sweep     --builtin h_beta --beta 2 --center 0.25,0.75 --amax 0.24 --steps 24
    convexity map       --fn "x^2-y^2" --lo=-1,-1 --hi 1,1 --grid 21
    convexity increase  --fn "x^3" --interval=-1,1
    convexity psd       --matrix m.csv
    convexity verify    --trials 100 --seed 7 --dim 2
    convexity risk-demo --beta -1 --center 0.25,0.25 --amax 0.24 --steps 24

Numbers are written with 17 significant digits. CSV output starts with
'#' comment lines echoing the configuration. Exit status is 0 on success,
1 on usage errors and 2 on numeric or domain errors.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConvexityError, DomainError, InputError, UnsupportedError
from .field import builtin, from_expression, BUILTINS
from .hessian import FdConfig
from .indices import index_of_increase_1d, pointwise_indices
from .quadrature import HyperRect, Square, global_convexity_index, region_map, sweep_conv_a
from .risk import aggregate_field, two_line_spec
from .symcore import (
    OracleBudget,
    canonical_split,
    load_matrix_csv,
    nuclear_distance_to_psd_oracle,
    psd_indices,
    trace_bound_check,
)

log = logging.getLogger("convexity")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
VERIFY_TOL = 1e-3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str):
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def to_json(obj, indent: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        vals = [to_json(v, indent + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(vals) + "]"
        return "[\n" + ",\n".join(pad + v for v in vals) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        raise DomainError(f"non-finite number in output: {obj}")
    return _fmt(obj)


def write_csv(stream, config: dict, header: Sequence[str], rows):
    for k, v in config.items():
        stream.write(f"# {k}={_fmt(v) if not isinstance(v, (list, tuple)) else ','.join(_fmt(x) for x in v)}\n")
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(v) for v in row) + "\n")


# --------------------------------------------------------------------------
# argument grammar


def _add_output(p, default_format):
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for lattice evaluation (output is identical)")


def _add_field(p, grid_default):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fn", metavar="EXPR", help="expression in x,y,z or x1..xd")
    src.add_argument("--builtin", choices=sorted(BUILTINS))
    p.add_argument("--dim", type=int, help="dimension of --fn (default: inferred)")
    p.add_argument("--beta", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--weights", type=_floats)
    p.add_argument("--delta", type=float)
    p.add_argument("--grid", type=int, default=grid_default, metavar="N")
    p.add_argument("--fd-step", type=float, default=1e-4, metavar="H")
    p.add_argument("--fd-absolute", action="store_true", help="disable relative step scaling")


def _add_region(p, required_center=False):
    p.add_argument("--center", type=_floats, required=required_center)
    p.add_argument("--a", type=float, help="half width of the square around --center")
    p.add_argument("--lo", type=_floats)
    p.add_argument("--hi", type=_floats)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="convexity", description="Convexity indices of scalar functions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pointwise", help="LOC, NLOC, CONV at a point")
    _add_field(p, 0)
    p.add_argument("--at", type=_floats, required=True)
    _add_output(p, "json")

    p = sub.add_parser("increase", help="1-D index of convexity on an interval")
    _add_field(p, 2001)
    p.add_argument("--interval", type=_floats, required=True)
    _add_output(p, "csv")

    p = sub.add_parser("global", help="global L1 convexity index over a box")
    _add_field(p, 201)
    _add_region(p)
    _add_output(p, "csv")

    p = sub.add_parser("sweep", help="global index over expanding squares")
    _add_field(p, 201)
    p.add_argument("--center", type=_floats, required=True)
    p.add_argument("--amax", type=float, required=True)
    p.add_argument("--steps", type=int, default=20)
    _add_output(p, "csv")

    p = sub.add_parser("map", help="pointwise indices on a lattice")
    _add_field(p, 41)
    _add_region(p)
    _add_output(p, "csv")

    p = sub.add_parser("psd", help="LOPS, NLOPS, PS of a matrix read from CSV")
    p.add_argument("--matrix", required=True, metavar="PATH")
    p.add_argument("--zero-threshold", type=float, default=0.0)
    _add_output(p, "json")

    p = sub.add_parser("verify", help="randomized checks of the distance and trace-bound results")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--dim", type=int, default=2)
    _add_output(p, "csv")

    p = sub.add_parser("risk-demo", help="sweep the aggregate capital-allocation loss")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.99)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--weights", type=_floats, default=[0.5, 0.5])
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--center", type=_floats, default=[0.25, 0.75])
    p.add_argument("--amax", type=float, default=0.24)
    p.add_argument("--steps", type=int, default=24)
    p.add_argument("--grid", type=int, default=201, metavar="N")
    p.add_argument("--fd-step", type=float, default=1e-4, metavar="H")
    p.add_argument("--fd-absolute", action="store_true")
    _add_output(p, "csv")
    return parser


# --------------------------------------------------------------------------
# helpers


def _fd(args) -> FdConfig:
    return FdConfig(base_step=args.fd_step, relative=not args.fd_absolute)


def _field(args):
    if args.fn is not None:
        return from_expression(args.fn, args.dim)
    params = {}
    for key in ("beta", "p", "alpha", "weights", "delta"):
        val = getattr(args, key)
        if val is not None:
            params[key] = tuple(val) if key == "weights" else val
    return builtin(args.builtin, params)


def _field_config(args) -> dict:
    cfg = {"command": args.command}
    if args.fn is not None:
        cfg["fn"] = args.fn
    else:
        cfg["builtin"] = args.builtin
        for key in ("beta", "p", "alpha", "weights", "delta"):
            if getattr(args, key) is not None:
                cfg[key] = getattr(args, key)
    cfg["grid"] = args.grid
    cfg["fd_step"] = args.fd_step
    cfg["fd_relative"] = not args.fd_absolute
    cfg["seed"] = args.seed
    return cfg


def _region(args, dim) -> HyperRect:
    if args.lo is not None or args.hi is not None:
        if args.lo is None or args.hi is None:
            raise UsageError("--lo and --hi must be given together")
        if args.center is not None or args.a is not None:
            raise UsageError("use either --lo/--hi or --center/--a, not both")
        return HyperRect(tuple(args.lo), tuple(args.hi))
    if args.center is None or args.a is None:
        raise UsageError("a region needs --lo/--hi or --center with --a")
    if len(args.center) != dim:
        raise UsageError(f"--center needs {dim} coordinates")
    return Square(tuple(args.center), args.a).rect()


def _coord_names(d):
    return ["x", "y", "z"][:d] if d <= 3 else [f"x{i + 1}" for i in range(d)]


# --------------------------------------------------------------------------
# subcommands; each returns (config, header, rows, json_payload)


def _cmd_pointwise(args):
    f = _field(args)
    if len(args.at) != f.dimension:
        raise UsageError(f"--at needs {f.dimension} coordinates")
    rep = pointwise_indices(f, args.at, _fd(args))
    cfg = _field_config(args)
    cfg.pop("grid")
    d = f.dimension
    header = _coord_names(d) + [f"lambda{i + 1}" for i in range(d)] + ["loc", "nloc", "conv", "degenerate"]
    row = list(rep.point) + list(rep.eigenvalues) + [rep.loc, rep.nloc, rep.conv, rep.degenerate]
    return cfg, header, [row], rep.to_dict()


def _cmd_increase(args):
    f = _field(args)
    if len(args.interval) != 2:
        raise UsageError("--interval needs two numbers a,b")
    res = index_of_increase_1d(f, args.interval, args.grid, _fd(args))
    header = ["conv", "degenerate", "positive_integral", "absolute_integral", "lo", "hi"]
    row = [res.value, res.degenerate, res.positive_integral, res.absolute_integral, *res.interval]
    return _field_config(args), header, [row], dict(zip(header, row))


def _cmd_global(args):
    f = _field(args)
    region = _region(args, f.dimension)
    g = global_convexity_index(f, region, args.grid, _fd(args), args.threads)
    cfg = _field_config(args)
    cfg["lo"] = list(region.lo)
    cfg["hi"] = list(region.hi)
    header = ["conv", "degenerate", "degenerate_fraction", "positive_integral", "absolute_integral"]
    row = [g.value, g.degenerate, g.degenerate_fraction, g.positive_integral, g.absolute_integral]
    return cfg, header, [row], dict(zip(header, row))


def _sweep_output(cfg, res):
    header = ["a", "conv", "degenerate_fraction"]
    rows = [[r.a, r.conv, r.degenerate_fraction] for r in res.records]
    payload = {"center": list(res.center), "grid": res.nodes,
               "rows": [dict(zip(header, row)) for row in rows]}
    return cfg, header, rows, payload


def _cmd_sweep(args):
    f = _field(args)
    if len(args.center) != f.dimension:
        raise UsageError(f"--center needs {f.dimension} coordinates")
    res = sweep_conv_a(f, args.center, args.amax, args.steps, args.grid, _fd(args), args.threads)
    cfg = _field_config(args)
    cfg.update(center=args.center, amax=args.amax, steps=args.steps)
    return _sweep_output(cfg, res)


def _cmd_map(args):
    f = _field(args)
    region = _region(args, f.dimension)
    m = region_map(f, region, args.grid, _fd(args), args.threads)
    d = f.dimension
    header = _coord_names(d) + [f"lambda{i + 1}" for i in range(d)] + ["loc", "nloc", "conv"]
    v = m.values
    rows = [list(v.points[k]) + list(v.eigenvalues[k]) + [v.loc[k], v.nloc[k], v.conv[k]]
            for k in range(len(v))]
    cfg = _field_config(args)
    cfg["lo"] = list(region.lo)
    cfg["hi"] = list(region.hi)
    return cfg, header, rows, {"rows": [dict(zip(header, r)) for r in rows]}


def _cmd_psd(args):
    m = load_matrix_csv(args.matrix)
    rep = psd_indices(m, args.zero_threshold)
    split = canonical_split(m, args.zero_threshold)
    payload = {
        "dim": m.dim,
        "eigenvalues": list(rep.eigenvalues),
        "lops": rep.lops,
        "nlops": rep.nlops,
        "ps": rep.ps,
        "degenerate": rep.degenerate,
        "nuclear_norm": split.nuclear_total,
        "plus": split.plus.entries.tolist(),
        "minus": split.minus.entries.tolist(),
    }
    header = ["lops", "nlops", "ps", "degenerate", "nuclear_norm"]
    row = [rep.lops, rep.nlops, rep.ps, rep.degenerate, split.nuclear_total]
    cfg = {"command": "psd", "matrix": args.matrix, "zero_threshold": args.zero_threshold}
    return cfg, header, [row], payload


def _cmd_verify(args):
    if args.dim not in (2, 3):
        raise UsageError(f"--dim must be 2 or 3, got {args.dim}")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    rng = np.random.default_rng(args.seed)
    oracle_pass = 0
    trace_pass = 0
    worst_gap = 0.0
    for k in range(args.trials):
        h = rng.uniform(-1.0, 1.0, (args.dim, args.dim))
        h = np.triu(h) + np.triu(h, 1).T
        lops = canonical_split(h).nuclear_minus
        dist = nuclear_distance_to_psd_oracle(h, OracleBudget(seed=args.seed + k))
        worst_gap = max(worst_gap, lops - dist)
        if lops - VERIFY_TOL <= dist <= lops + 1e-12:
            oracle_pass += 1
        a = rng.standard_normal((args.dim, args.dim))
        b = rng.standard_normal((args.dim, args.dim))
        if trace_bound_check(a.T @ a, b.T @ b):
            trace_pass += 1
    header = ["check", "passed", "trials"]
    rows = [["nuclear_distance_oracle", oracle_pass, args.trials],
            ["trace_bound", trace_pass, args.trials]]
    cfg = {"command": "verify", "trials": args.trials, "dim": args.dim, "seed": args.seed,
           "oracle_tolerance": VERIFY_TOL}
    payload = {"checks": [dict(zip(header, r)) for r in rows], "max_oracle_gap": worst_gap}
    ok = oracle_pass == args.trials and trace_pass == args.trials
    return cfg, header, rows, payload, ok


def _cmd_risk_demo(args):
    if args.weights is None or len(args.center) != len(args.weights):
        raise UsageError("--center needs one coordinate per weight")
    spec = two_line_spec(args.beta, args.p, args.alpha, tuple(args.weights))
    f = aggregate_field(spec, delta=args.delta)
    res = sweep_conv_a(f, args.center, args.amax, args.steps, args.grid, _fd(args), args.threads)
    cfg = {"command": "risk-demo", "beta": args.beta, "p": args.p, "alpha": args.alpha,
           "weights": args.weights, "delta": args.delta, "center": args.center,
           "amax": args.amax, "steps": args.steps, "grid": args.grid, "fd_step": args.fd_step,
           "fd_relative": not args.fd_absolute, "seed": args.seed}
    return _sweep_output(cfg, res)


COMMANDS = {
    "pointwise": _cmd_pointwise,
    "increase": _cmd_increase,
    "global": _cmd_global,
    "sweep": _cmd_sweep,
    "map": _cmd_map,
    "psd": _cmd_psd,
    "verify": _cmd_verify,
    "risk-demo": _cmd_risk_demo,
}


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        out = COMMANDS[args.command](args)
        ok = True
        if len(out) == 5:
            *out, ok = out
        cfg, header, rows, payload = out
        buf = io.StringIO()
        if args.format == "json":
            buf.write(to_json({"config": cfg, "result": payload}) + "\n")
        else:
            write_csv(buf, cfg, header, rows)
        text = buf.getvalue()
        if args.out:
            with open(args.out, "w", newline="\n") as fh:
                fh.write(text)
        else:
            stdout.write(text)
        return EXIT_OK if ok else EXIT_NUMERIC
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, UnsupportedError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    return run()


if __name__ == "__main__":
    sys.exit(main())
