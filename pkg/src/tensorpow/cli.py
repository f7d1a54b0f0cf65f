"""Command-line interface: ``tensorpow <subcommand> ...``.

Every run writes a header with the library version and the full configuration,
then a CSV table (log values with 17 significant digits plus a linear column)
or a JSON document.  Output depends only on the configuration, never on the
thread count.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

from . import __version__, logscale
from .bounds import DEFAULT_DELTAS, verify_bounds
from .checks import run_suite
from .errors import (
    BoxTooSmall,
    BracketingError,
    BudgetExceeded,
    CountCeilingExceeded,
    DomainError,
    InvariantViolation,
)
from .hypercount import (
    CountQuery,
    a2_coarse_bounds,
    a2_sandwich,
    a_count,
    tensor_count,
    tensor_count_pair,
)
from .parallel import default_threads
from .rearrange import tau_at, tau_topk
from .spectra import (
    TorusNorm,
    cube_h1_spectrum,
    cube_h2_spectrum,
    custom_spectrum,
    dyadic_spectrum,
    jacobi_spectrum,
    torus_spectrum,
)
from .tractability import FitPolicy, classify, family_from_spec

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_INVARIANT = 3
EXIT_USAGE = 64

FAMILIES = (
    "torus", "torus-circ", "torus-star", "torus-plus", "torus-hash",
    "jacobi", "cube-h1", "cube-h2", "dyadic", "custom",
)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _interval(text):
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("interval must be 'a,b'")
    return tuple(vals)


def _n_range(text):
    parts = text.split("..")
    try:
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
        n = int(text)
        return n, n
    except ValueError:
        raise argparse.ArgumentTypeError(f"n-range must be 'A..B', got {text!r}")


def _add_family(p):
    g = p.add_argument_group("spectrum family")
    g.add_argument("--family", required=True, choices=FAMILIES)
    g.add_argument("--norm", choices=("circ", "star", "plus", "hash"), help="torus norm (with --family torus)")
    g.add_argument("--s", type=float, default=1.0, help="smoothness (torus, jacobi)")
    g.add_argument("--gamma", type=float, default=1.0, help="torus weight")
    g.add_argument("--interval", type=_interval, help="a,b (torus default 0,2pi; cube default 0,1)")
    g.add_argument("--alpha", type=float, default=0.0)
    g.add_argument("--beta", type=float, default=0.0)
    g.add_argument("--values", type=_floats, help="custom prefix sigma(1),sigma(2),...")
    g.add_argument("--tail-C", dest="tail_C", type=float, help="custom tail sigma(n) = C n^-s")
    g.add_argument("--tail-s", dest="tail_s", type=float)
    g.add_argument("--finite-rank", action="store_true", help="custom: zero beyond the prefix")


def _add_output(p):
    p.add_argument("--out", choices=("csv", "json"), default="csv", help="output format")
    p.add_argument("--output", metavar="PATH", help="write to PATH instead of stdout")


def build_parser():
    parser = Parser(prog="tensorpow", description="Rearrangements of tensor powers of singular-value sequences.")
    parser.add_argument("--version", action="version", version=f"tensorpow {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("spectrum", help="tabulate a univariate spectrum")
    _add_family(p)
    p.add_argument("--n-max", type=int, required=True)
    _add_output(p)

    p = sub.add_parser("count", help="exact lattice counts")
    p.add_argument("--mode", choices=("aN", "tensor"), required=True)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--r", type=float)
    p.add_argument("--l", type=int)
    p.add_argument("--delta", type=float, default=1.0, help="delta of the coarse bounds")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--d", type=int)
    p.add_argument("--threshold", type=float, help="t (linear scale)")
    p.add_argument("--threshold-log", type=float, help="log t")
    p.add_argument("--comparison", choices=("ge", "gt"), default="ge")
    g = p.add_argument_group("spectrum family (mode tensor)")
    for flag, kw in (
        ("--norm", {"choices": ("circ", "star", "plus", "hash")}),
        ("--s", {"type": float, "default": 1.0}),
        ("--gamma", {"type": float, "default": 1.0}),
        ("--interval", {"type": _interval}),
        ("--alpha", {"type": float, "default": 0.0}),
        ("--beta", {"type": float, "default": 0.0}),
        ("--values", {"type": _floats}),
        ("--tail-C", {"type": float, "dest": "tail_C"}),
        ("--tail-s", {"type": float, "dest": "tail_s"}),
    ):
        g.add_argument(flag, **kw)
    g.add_argument("--finite-rank", action="store_true")
    _add_output(p)

    p = sub.add_parser("tau", help="values of the rearrangement tau")
    _add_family(p)
    p.add_argument("--d", type=int, required=True)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--n", type=int)
    which.add_argument("--top", type=int)
    _add_output(p)

    p = sub.add_parser("bounds", help="check the preasymptotic bounds against exact tau")
    _add_family(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n-range", type=_n_range, required=True, help="A..B")
    p.add_argument("--delta", type=_floats, default=list(DEFAULT_DELTAS))
    p.add_argument("--method", choices=("auto", "topk", "at"), default="auto")
    _add_output(p)

    p = sub.add_parser("tract", help="classify polynomial tractability of a family")
    p.add_argument("--family-spec", required=True, help="JSON object, or @path to a JSON file")
    p.add_argument("--d-range", type=_ints, default=[4, 8, 16, 32, 64, 128, 256])
    p.add_argument("--eps-grid", type=_floats, default=[0.5, 0.25, 0.1])
    _add_output(p)

    p = sub.add_parser("verify", help="run the cross-oracle self checks")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    _add_output(p)
    return parser


def make_spectrum(args):
    fam = args.family
    if fam is None:
        raise DomainError("--family is required")
    if fam.startswith("torus"):
        kind = args.norm if fam == "torus" else fam.split("-", 1)[1]
        if kind is None:
            raise DomainError("--family torus needs --norm")
        interval = args.interval or (0.0, 2 * math.pi)
        s = args.s
        if kind == "circ" and float(s).is_integer():
            s = int(s)
        return torus_spectrum(TorusNorm(kind, s, args.gamma, interval))
    if fam == "jacobi":
        return jacobi_spectrum(args.alpha, args.beta, args.s)
    if fam == "cube-h1":
        return cube_h1_spectrum(args.interval or (0.0, 1.0))
    if fam == "cube-h2":
        return cube_h2_spectrum(args.interval or (0.0, 1.0))
    if fam == "dyadic":
        return dyadic_spectrum()
    if not args.values:
        raise DomainError("--family custom needs --values")
    tail = None
    if args.tail_C is not None or args.tail_s is not None:
        if args.tail_C is None or args.tail_s is None:
            raise DomainError("a tail needs both --tail-C and --tail-s")
        tail = (args.tail_C, args.tail_s)
    return custom_spectrum(args.values, tail=tail, finite_rank=args.finite_rank)


def _g(x):
    """17 significant digits, round-trip safe."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, str)):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return "%.17g" % x


def _lin(log_value):
    if log_value is None:
        return None
    if log_value == -math.inf:
        return 0.0
    return math.exp(log_value) if log_value > -745.2 else 0.0


def _config(args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("output", "threads")}
    cfg["precision"] = logscale.precision_mode()
    return cfg


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("-inf" if x < 0 else "inf")
    return x


def render(args, columns, rows, extra=None):
    cfg = _config(args)
    if args.out == "json":
        doc = {
            "tensorpow": __version__,
            "config": cfg,
            "columns": columns,
            "rows": [dict(zip(columns, r)) for r in rows],
        }
        if extra:
            doc.update(extra)
        return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# tensorpow {__version__}\n")
    buf.write("# config: " + json.dumps(_jsonable(cfg), sort_keys=True) + "\n")
    for key, val in sorted((extra or {}).items()):
        buf.write(f"# {key}: " + json.dumps(_jsonable(val), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_g(x) for x in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands; each returns (columns, rows, extra, exit code)


def cmd_spectrum(args):
    if args.n_max < 1:
        raise DomainError("--n-max must be positive")
    spec = make_spectrum(args)
    rows = []
    for n in range(1, args.n_max + 1):
        lv = logscale.to_float(spec.log_sigma(n))
        rows.append((n, _lin(lv), lv))
    extra = {"spectrum": {"label": spec.label, "envelope": spec.envelope,
                          "tie_multiplicity_v": spec.tie_multiplicity_v}}
    return ["n", "sigma", "log_sigma"], rows, extra, EXIT_OK


def cmd_count(args):
    if args.mode == "aN":
        if args.r is None or args.l is None:
            raise DomainError("--mode aN needs --r and --l")
        count = a_count(args.N, args.r, args.l)
        sand = (None, None)
        coarse = (None, None)
        if args.N == 2 and args.l >= 2 and args.r >= 4**args.l:
            sand = a2_sandwich(args.r, args.l)
        if args.N == 2:
            coarse = a2_coarse_bounds(args.r, args.l, args.delta)
        cols = ["N", "r", "l", "count", "sandwich_lower", "sandwich_upper", "coarse_lower", "coarse_upper"]
        return cols, [(args.N, args.r, args.l, count) + tuple(sand) + tuple(coarse)], None, EXIT_OK
    if args.d is None or args.d < 1:
        raise DomainError("--mode tensor needs --d >= 1")
    spec = make_spectrum(args)
    spectra = [spec] * args.d
    if (args.threshold is None) == (args.threshold_log is None):
        raise DomainError("give exactly one of --threshold and --threshold-log")
    cmp_ = ">=" if args.comparison == "ge" else ">"
    if args.threshold is not None:
        if not args.threshold > 0:
            raise DomainError("--threshold must be positive")
        q = CountQuery.from_value(spectra, args.threshold, cmp_)
    else:
        q = CountQuery.from_log(spectra, args.threshold_log, cmp_)
    count = tensor_count(q)
    cols = ["d", "threshold_log", "comparison", "count"]
    return cols, [(args.d, q.threshold_log, args.comparison, count)], None, EXIT_OK


def cmd_tau(args):
    if args.d < 1:
        raise DomainError("--d must be positive")
    spec = make_spectrum(args)
    spectra = [spec] * args.d
    cols = ["n", "tau_log", "tau", "tie_class_size", "count_ge", "count_gt"]
    if args.n is not None:
        r = tau_at(spectra, args.n)
        return cols, [(r.n, r.tau_log, r.tau, r.tie_class_size, r.count_ge, r.count_gt)], None, EXIT_OK
    if args.top < 1:
        raise DomainError("--top must be positive")
    values = tau_topk(spectra, args.top)
    rows = []
    cache = {}
    for n, v in enumerate(values, 1):
        if v not in cache:
            cache[v] = tensor_count_pair(spectra, v, ceiling=None)
        ge, gt = cache[v]
        lv = logscale.to_float(v)
        rows.append((n, lv, _lin(lv), ge - gt, ge, gt))
    return cols, rows, None, EXIT_OK


def cmd_bounds(args):
    spec = make_spectrum(args)
    a, b = args.n_range
    rep = verify_bounds(spec, args.d, (a, b), args.delta, method=args.method, threads=args.threads)
    cols = ["n", "tau_log", "tau", "lower_log", "lower", "upper_log", "upper", "delta_best",
            "asym_envelope_log", "pass"]
    rows = []
    for r in rep.rows:
        d = r.as_dict()
        rows.append((d["n"], d["tau_log"], d["tau"], d["lower_log"], _lin(d["lower_log"]),
                     d["upper_log"], _lin(d["upper_log"]), d["delta_best"], d["asym_log"], d["pass"]))
    extra = {"summary": {"label": rep.label, "passed": rep.passed, "max_violation": rep.max_violation,
                         "params": rep.params, "note": rep.note}}
    return cols, rows, extra, EXIT_OK if rep.passed else EXIT_INVARIANT


def cmd_tract(args):
    text = args.family_spec
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as e:
        raise DomainError(f"--family-spec is not valid JSON: {e}")
    family = family_from_spec(spec)
    policy = FitPolicy(eps_grid=tuple(args.eps_grid))
    verdict = classify(family, args.d_range, policy, threads=args.threads)
    doc = verdict.as_dict()
    rows = [(e["d"], e["eps"], e["n"]) for e in doc.pop("evidence")]
    return ["d", "eps", "n_eps_d"], rows, {"verdict": doc}, EXIT_OK


def cmd_verify(args):
    rows = []
    ok = True
    for name, problems in run_suite(seed=args.seed):
        rows.append((name, not problems, "; ".join(problems[:5])))
        ok = ok and not problems
    return ["check", "passed", "detail"], rows, None, EXIT_OK if ok else EXIT_INVARIANT


COMMANDS = {
    "spectrum": cmd_spectrum,
    "count": cmd_count,
    "tau": cmd_tau,
    "bounds": cmd_bounds,
    "tract": cmd_tract,
    "verify": cmd_verify,
}


def run(argv=None):
    """Run the CLI; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    if args.threads is None:
        args.threads = default_threads()
    try:
        columns, rows, extra, code = COMMANDS[args.command](args)
    except (DomainError, BudgetExceeded, CountCeilingExceeded, BoxTooSmall, BracketingError) as e:
        print(f"tensorpow: error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except InvariantViolation as e:
        print(f"tensorpow: invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    text = render(args, columns, rows, extra)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
