"""Command-line front end.

Subcommands: ``density``, ``sample``, ``verify``, ``asymptotic``, ``cache``
and ``selfcheck``.  Data goes to ``--out`` or standard output; diagnostics
go to standard error.

Exit codes: 0 success, 1 goodness-of-fit failure, 2 bad arguments or
distribution literal, 3 no closed form for the request, 4 numerical failure.

Distribution literals follow ``name(real, ...)`` with names ``uniform(a,b)``,
``normal(mean,variance)``, ``exp(rate)``, ``rayleigh(sigma)`` (density
``(2x/sigma) exp(-x^2/sigma)``) and ``gamma(shape,scale)``; names are
case-insensitive.  ``ORDSTAT_SEED`` sets the default seed.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .asymptotics import (DegenerateDensityError, SingularPointError, asymptotic_density,
                          asymptotic_vs_exact_report, beta_of_eta)
from .cache_sizing import (CatalogModel, cache_ratio, cumulative_expected_size,
                           mc_cache_ratio)
from .closed_forms import UnsupportedClosedForm, closed_form_density
from .distributions import Gamma, ParseError, Uniform, parse_distribution
from .monte_carlo import (McConfig, export_samples, goodness_of_fit, ks_critical,
                          sample_latent)
from .order_engine import (DensityCurve, LatentSpec, central_grid, latent_density,
                           map_ordered, order_statistic_density)
from .quadrature import NumericError
from .special import DomainError
from .streams import default_seed

SCHEMA = "ordstat/1"
EXIT_GOF, EXIT_USAGE, EXIT_UNSUPPORTED, EXIT_NUMERIC = 1, 2, 3, 4


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{float(v):.12g}"


def _num(v):
    return None if v is None or not math.isfinite(v) else float(f"{float(v):.12g}")


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _info(msg: str):
    print(msg, file=sys.stderr)


# ------------------------------------------------------------ arguments
def _parents(args):
    if getattr(args, "hetero", None):
        parts = _split_literals(args.hetero)
        return tuple(parse_distribution(p) for p in parts)
    if not args.parent:
        raise UsageError("one of --parent or --hetero is required")
    return parse_distribution(args.parent)


def _split_literals(text):
    """Split ``"gamma(2,1),uniform(0,1)"`` at top-level commas."""
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return [p.strip() for p in parts if p.strip()]


def _grid(text):
    try:
        lo, hi, pts = text.split(":")
        lo, hi, pts = float(lo), float(hi), int(pts)
    except ValueError as exc:
        raise UsageError(f"bad --grid {text!r}; expected min:max:points") from exc
    if not (hi > lo and pts >= 2):
        raise UsageError("--grid needs max > min and points >= 2")
    return np.linspace(lo, hi, pts)


def _threads(args):
    t = getattr(args, "threads", None)
    return t if t else (os.cpu_count() or 1)


def _seed(args):
    return args.seed if args.seed is not None else default_seed()


def _spec(args, role=None):
    role = role or args.role
    if role == "orderstat":
        return None
    return LatentSpec(args.n, args.k, args.m, role)


def _check_counts(args, parent):
    if isinstance(parent, tuple):
        args.m = len(parent)
    if args.n < 1 or args.m < 1 or not 1 <= args.k <= args.n:
        raise UsageError("require n >= 1, m >= 1 and 1 <= k <= n")
    if args.m > 4:
        _info(f"warning: m = {args.m} uses iterated numeric convolution; this may be slow")


# ------------------------------------------------------------ density
def _density_fn(args, parent):
    role, method = args.role, args.method
    if role == "orderstat":
        if isinstance(parent, tuple):
            raise UsageError("--hetero is not valid with role orderstat")
        return (lambda x: order_statistic_density(parent, args.n, args.k, x)), "analytic", 0.0
    if isinstance(parent, tuple) and role != "factor":
        raise UsageError("--hetero requires role factor")
    if method == "closed":
        if isinstance(parent, tuple) or (args.n, args.k, args.m) != (2, 2, 2):
            raise UnsupportedClosedForm("closed forms exist only for n = k = m = 2 with one parent")
        return closed_form_density(parent, role, args.variant), "analytic", 0.0
    if method == "asymptotic":
        return _limit_fn(parent, args.m, role, args.k / args.n), "asymptotic", 1e-10
    spec = _spec(args)
    return (lambda x: latent_density(parent, spec, x, tol=args.tol)), "quadrature", args.tol


def _limit_fn(parent, m, role, eta):
    """Vectorised limit density; the undefined factor value at x = 0 is NaN."""
    def f(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.full(x.shape, np.nan)
        ok = x != 0
        y[ok] = asymptotic_density(parent, m, role, eta, x[ok])
        if role == "addend":
            y[~ok] = asymptotic_density(parent, m, role, eta, x[~ok])
        return y
    return f


def _note_undefined(f):
    if np.any(np.isnan(f)):
        _info("note: the factor limit is undefined at x = 0; value left empty")


def _curve(args, parent):
    fn, provenance, tol = _density_fn(args, parent)
    if args.grid:
        x = _grid(args.grid)
    else:
        base = parent[0] if isinstance(parent, tuple) else parent
        lo, hi = base.effective_range(1e-9)
        x = central_grid(fn, lo, hi, 401, probe=201)
    if provenance == "quadrature":
        f = map_ordered(fn, x, _threads(args))
    else:
        f = np.asarray(fn(x), dtype=float)
    f = np.asarray(f, dtype=float)
    if provenance != "asymptotic":
        f = np.nan_to_num(f, posinf=0.0)
    _note_undefined(f)
    return x, f, provenance, tol


def _describe(parent):
    if isinstance(parent, tuple):
        return [repr(p) for p in parent]
    return repr(parent)


def cmd_density(args):
    parent = _parents(args)
    _check_counts(args, parent)
    x, f, provenance, tol = _curve(args, parent)
    if args.format == "json":
        doc = {"schema": SCHEMA, "kind": "density", "parent": _describe(parent),
               "role": args.role, "n": args.n, "k": args.k, "m": args.m,
               "method": args.method, "provenance": provenance, "tolerance": tol,
               "x": [_num(v) for v in x], "density": [_num(v) for v in f]}
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
    else:
        buf = io.StringIO()
        buf.write("x,density\n")
        for a, b in zip(x, f):
            buf.write(f"{_fmt(a)},{_fmt(b)}\n")
        _emit(buf.getvalue(), args.out)
    return 0


# ------------------------------------------------------------ sampling
def _mc_config(args, parent):
    if args.role == "orderstat":
        args.m = 1
        spec = LatentSpec(args.n, args.k, 1, "addend")
    else:
        spec = _spec(args)
    return McConfig(spec, parent, args.trials, _seed(args), args.bins, args.column)


def cmd_sample(args):
    parent = _parents(args)
    _check_counts(args, parent)
    samples = sample_latent(_mc_config(args, parent), workers=_threads(args))
    if args.format == "binary":
        if not args.out:
            sys.stdout.buffer.write(samples.astype("<f8").tobytes())
        else:
            export_samples(samples, args.out, "binary")
    elif args.out:
        export_samples(samples, args.out, "text")
    else:
        sys.stdout.write("".join(f"{v!r}\n" for v in samples.tolist()))
    return 0


def _reference(args, parent):
    """Best available analytic reference for the simulated latent law."""
    if args.expect:
        law = parse_distribution(args.expect)
        return law, f"expect:{args.expect}"
    role = args.role
    if role == "orderstat" or args.m == 1:
        base = parent[0] if isinstance(parent, tuple) else parent
        r = "orderstat"
        return (lambda x: order_statistic_density(base, args.n, args.k, x)), r
    if not isinstance(parent, tuple) and (args.n, args.k, args.m) == (2, 2, 2):
        try:
            return closed_form_density(parent, role, args.variant), "closed"
        except UnsupportedClosedForm:
            pass
    spec = _spec(args)
    base = parent[0] if isinstance(parent, tuple) else parent
    lo, hi = base.effective_range(1e-10)
    x = np.linspace(lo, hi, 4001)
    f = map_ordered(lambda v: latent_density(parent, spec, v), x, _threads(args))
    return DensityCurve(x, f, "quadrature", 1e-8, spec), "quadrature"


def cmd_verify(args):
    parent = _parents(args)
    _check_counts(args, parent)
    cfg = _mc_config(args, parent)
    samples = sample_latent(cfg, workers=_threads(args))
    ref, kind = _reference(args, parent)
    rep = goodness_of_fit(samples, ref, bins=args.bins)
    threshold = args.ks_threshold if args.ks_threshold else ks_critical(samples.size)
    passed = rep.ks_distance < threshold
    doc = {"schema": SCHEMA, "kind": "verify", "parent": _describe(parent),
           "role": args.role, "n": args.n, "k": args.k, "m": args.m,
           "trials": args.trials, "seed": cfg.seed, "reference": kind,
           "ks_threshold": _num(threshold), "passed": bool(passed),
           "gof": {k: (_num(v) if isinstance(v, float) else v) for k, v in rep.as_dict().items()}}
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.report:
        _emit(text, args.report)
    else:
        sys.stdout.write(text)
    _info(f"KS {rep.ks_distance:.6g} vs threshold {threshold:.6g}: {'PASS' if passed else 'FAIL'}")
    return 0 if passed else EXIT_GOF


# ------------------------------------------------------------ asymptotic
def cmd_asymptotic(args):
    parent = _parents(args)
    if isinstance(parent, tuple):
        args.m = len(parent)
    if args.eta is None:
        if args.n is None or args.k is None:
            raise UsageError("give --eta or both --n and --k")
        eta = args.k / args.n
    else:
        eta = args.eta
    beta = beta_of_eta(parent, args.m, args.role, eta)
    if args.compare:
        if args.n is None or args.k is None:
            raise UsageError("--compare needs --n and --k")
        rep = asymptotic_vs_exact_report(parent, args.n, args.k, args.m, args.role,
                                         method=args.compare, trials=args.trials,
                                         seed=_seed(args), workers=_threads(args))
        doc = {"schema": SCHEMA, "kind": "asymptotic_report", "parent": _describe(parent),
               "role": args.role, "n": args.n, "k": args.k, "m": args.m, "eta": _num(eta),
               "beta": _num(beta), "method": rep.method, "l1": _num(rep.l1)}
        _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", args.out)
        return 0
    f = _limit_fn(parent, args.m, args.role, eta)
    if args.grid:
        x = _grid(args.grid)
    else:
        base = parent[0] if isinstance(parent, tuple) else parent
        lo, hi = base.effective_range(1e-9)
        x = central_grid(f, lo, hi, 401)
    y = np.asarray(f(x), dtype=float)
    _note_undefined(y)
    if args.format == "json":
        doc = {"schema": SCHEMA, "kind": "asymptotic", "parent": _describe(parent),
               "role": args.role, "m": args.m, "eta": _num(eta), "beta": _num(beta),
               "provenance": "asymptotic", "x": [_num(v) for v in x],
               "density": [_num(v) for v in y]}
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
    else:
        _emit("x,density\n" + "".join(f"{_fmt(a)},{_fmt(b)}\n" for a, b in zip(x, y)), args.out)
    return 0


# ------------------------------------------------------------ cache
def _q_values(args, n):
    if args.q is not None and args.q_range:
        raise UsageError("use --q or --q-range, not both")
    if args.q is not None:
        qs = [args.q]
    elif args.q_range:
        parts = args.q_range.split(":")
        try:
            nums = [int(p) for p in parts]
        except ValueError as exc:
            raise UsageError("bad --q-range; expected a:b or a:b:step") from exc
        if len(nums) not in (2, 3):
            raise UsageError("bad --q-range; expected a:b or a:b:step")
        step = nums[2] if len(nums) == 3 else 1
        qs = list(range(nums[0], nums[1] + 1, step))
    else:
        qs = list(range(1, n + 1))
    if not qs or min(qs) < 1 or max(qs) > n:
        raise UsageError("q values must lie in [1, n]")
    return qs


def cmd_cache(args):
    sizes = parse_distribution(args.sizes)
    pops = parse_distribution(args.popularity)
    model = CatalogModel(args.n, sizes, pops)
    qs = _q_values(args, args.n)
    reference = sizes == Gamma(2.0, 1.0) and pops == Uniform(0.0, 1.0)
    if not reference and not args.mc_replications:
        raise UnsupportedClosedForm("analytic sizing holds only for gamma(2,1) sizes with "
                                    "uniform(0,1) popularity; add --mc-replications")
    rows = []
    mc = se = None
    if args.mc_replications:
        mc, se = mc_cache_ratio(model, qs, args.mc_replications, _seed(args),
                                workers=_threads(args))
    for i, q in enumerate(qs):
        s = cumulative_expected_size(q, args.n) if reference else None
        r = cache_ratio(q, args.n) if reference else None
        rows.append((q, s, r, None if mc is None else float(mc[i]),
                     None if se is None else float(se[i])))
    if args.format == "json":
        doc = {"schema": SCHEMA, "kind": "cache", "n": args.n, "sizes": repr(sizes),
               "popularity": repr(pops),
               "method": "asymptotic" if reference else "monte_carlo",
               "mc_replications": args.mc_replications or 0,
               "rows": [{"q": q, "expected_bits": _num(s) if s is not None else None,
                         "ratio": _num(r) if r is not None else None,
                         "mc_ratio": _num(m) if m is not None else None,
                         "mc_se": _num(e) if e is not None else None}
                        for q, s, r, m, e in rows]}
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
    else:
        buf = io.StringIO()
        buf.write("q,expected_bits,ratio,mc_ratio,mc_se\n")
        for q, s, r, m, e in rows:
            buf.write(f"{q},{_fmt(s)},{_fmt(r)},{_fmt(m)},{_fmt(e)}\n")
        _emit(buf.getvalue(), args.out)
    return 0


# ------------------------------------------------------------ selfcheck
def cmd_selfcheck(args):
    from .selfcheck import run_selfcheck

    start = time.time()
    results = run_selfcheck(trials=args.trials, seed=_seed(args), workers=_threads(args))
    ok = True
    for name, passed, detail in results:
        ok &= passed
        _info(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    _info(f"selfcheck finished in {time.time() - start:.1f} s")
    return 0 if ok else EXIT_GOF


# ------------------------------------------------------------ parser
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model(p, require_counts=True):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--parent", help="parent law, e.g. 'normal(0,1)'")
    src.add_argument("--hetero", help="comma-separated laws of the m factors, latent first")
    p.add_argument("--role", choices=["addend", "factor", "orderstat"], default="addend")
    p.add_argument("--n", type=int, default=2 if require_counts else None)
    p.add_argument("--k", type=int, default=2 if require_counts else None)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap (default: all cores); output does not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ordstat", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("density", help="latent density on a grid")
    _add_model(p)
    p.add_argument("--grid", help="min:max:points (default: 401 points over the central 99.9%%)")
    p.add_argument("--method", choices=["closed", "quadrature", "asymptotic"], default="quadrature")
    p.add_argument("--variant", choices=["derived", "table"], default=None,
                   help="Rayleigh factor closed form")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("sample", help="simulate latent variates")
    _add_model(p)
    p.add_argument("--trials", type=int, default=10 ** 5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bins", type=int, default=100, help=argparse.SUPPRESS)
    p.add_argument("--column", type=int, default=0, help="entry of the selected row to record")
    p.add_argument("--out")
    p.add_argument("--format", choices=["text", "binary"], default="text")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="simulate and test against the analytic density")
    _add_model(p)
    p.add_argument("--trials", type=int, default=10 ** 5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--column", type=int, default=0)
    p.add_argument("--variant", choices=["derived", "table"], default=None)
    p.add_argument("--ks-threshold", type=float, default=None)
    p.add_argument("--report")
    p.add_argument("--expect", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("asymptotic", help="double-scaling limit density")
    _add_model(p, require_counts=False)
    p.add_argument("--eta", type=float)
    p.add_argument("--grid")
    p.add_argument("--compare", choices=["quadrature", "monte_carlo"],
                   help="report L1 distance to the finite (n, k) density")
    p.add_argument("--trials", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_asymptotic)

    p = sub.add_parser("cache", help="expected cache size for the q most important files")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int)
    p.add_argument("--q-range")
    p.add_argument("--sizes", default="gamma(2,1)")
    p.add_argument("--popularity", default="uniform(0,1)")
    p.add_argument("--mc-replications", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_cache)

    p = sub.add_parser("selfcheck", help="reduced-size invariant suite")
    p.add_argument("--trials", type=int, default=10 ** 4)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, DomainError, ValueError) as exc:
        _info(f"error: {exc}")
        return EXIT_USAGE
    except UnsupportedClosedForm as exc:
        _info(f"error: {exc}")
        return EXIT_UNSUPPORTED
    except (NumericError, ArithmeticError, DegenerateDensityError, SingularPointError) as exc:
        _info(f"numeric failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
