"""Command-line front end: ``python -m dualbaxter <command> ...``.

Exit codes: 0 success, 1 computational failure (diagnostic JSON on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ContractError, DualBaxterError

__all__ = ["main", "canonical_json", "load_config", "Cache", "RunConfig"]

# default starting traces per genus (inside the classical admissible region)
DEFAULT_TRACES = {1: ((-5.0,), (-6.0,)), 2: ((-9.0, 9.0), (-10.0, 8.0))}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------
def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return format(x, ".17g")


def canonical_json(obj, indent=None) -> str:
    """Sorted keys, 17 significant digits, complex as [re, im]."""
    def enc(o, lvl):
        pad = "" if indent is None else "\n" + " " * (indent * (lvl + 1))
        end = "" if indent is None else "\n" + " " * (indent * lvl)
        sep = "," if indent is None else ","
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}:{'' if indent is None else ' '}{enc(o[k], lvl + 1)}"
                     for k in sorted(o, key=str)]
            return "{" + sep.join(items) + end + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            seq = list(o)
            if not seq:
                return "[]"
            return "[" + sep.join(pad + enc(v, lvl + 1) for v in seq) + end + "]"
        if isinstance(o, (bool, np.bool_)):
            return "true" if o else "false"
        if o is None:
            return "null"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt_float(float(o))
        if isinstance(o, (complex, np.complexfloating)):
            return enc([float(o.real), float(o.imag)], lvl)
        if isinstance(o, str):
            return json.dumps(o)
        if hasattr(o, "to_json"):
            return enc(o.to_json(), lvl)
        if hasattr(o, "as_dict"):
            return enc(o.as_dict(), lvl)
        raise TypeError(f"cannot serialize {type(o).__name__}")
    return enc(obj, 0)


def _emit(obj, out=None, path=None):
    text = canonical_json(obj, indent=1) + "\n"
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    (out or sys.stdout).write(text)


def _csv(rows, header):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_fmt_float(float(v)) if isinstance(v, (float, int, np.floating)) else str(v) for v in r) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# configuration and cache
# ---------------------------------------------------------------------------
class RunConfig(dict):
    """Flat key=value settings; command-line flags win."""

    def need_positive(self, *keys):
        for k in keys:
            if k in self and self[k] is not None and float(self[k]) <= 0:
                raise _Usage(f"{k} must be positive")


def load_config(path) -> RunConfig:
    cfg = RunConfig()
    if not path:
        return cfg
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _Usage(f"bad config line: {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        cfg[k.replace("-", "_")] = v
    return cfg


class Cache:
    """One JSON file per (g, gamma, state, version); guarded by an advisory lock."""

    def __init__(self, root):
        self.root = Path(root)

    def key(self, g, gamma, state):
        return f"g{g}_gamma{float(gamma)!r}_{state}_v{__version__}"

    def path(self, key):
        return self.root / f"{key}.json"

    def _lock(self, key):
        from filelock import FileLock
        self.root.mkdir(parents=True, exist_ok=True)
        return FileLock(str(self.root / f"{key}.lock"))

    def load(self, key, tolerance=1e-12):
        """Payload if present, version-matched and its residuals reproduce; else None."""
        from .spectrum import SpectralPoint, default_grid, residual_report

        p = self.path(key)
        if not p.exists():
            return None
        with self._lock(key):
            try:
                entry = json.loads(p.read_text())
                if entry.get("version") != __version__ or entry.get("key") != key:
                    return None
                pt = SpectralPoint.from_json(entry["payload"])
                rep = residual_report(pt.Q, default_grid(pt.Q))
            except (ValueError, KeyError, TypeError, DualBaxterError):
                return None
        stored = entry["payload"]["residuals"]
        for name, v in rep.as_dict().items():
            if abs(v - stored[name]) > tolerance * max(1.0, abs(stored[name])):
                return None
        return entry["payload"]

    def store(self, key, payload):
        entry = {"key": key, "version": __version__, "created": time.time(), "payload": payload}
        with self._lock(key):
            tmp = self.path(key).with_suffix(".tmp")
            tmp.write_text(canonical_json(entry))
            os.replace(tmp, self.path(key))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------
class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _complex(text):
    v = _floats(text)
    if len(v) == 1:
        return complex(v[0])
    if len(v) == 2:
        return complex(v[0], v[1])
    raise argparse.ArgumentTypeError("expected RE or RE,IM")


def _build_parser():
    p = _Parser(prog="dualbaxter", description="Dual Baxter equations: numerics and identity checks.")
    p.add_argument("--config", help="flat key=value file; flags override")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ph = sub.add_parser("phi").add_subparsers(dest="action", required=True, parser_class=_Parser)
    e = ph.add_parser("eval", help="quantum dilogarithm value")
    e.add_argument("--gamma", type=float)
    e.add_argument("--phi", type=_complex, required=True)
    e.add_argument("--json", action="store_true")

    cv = sub.add_parser("curve").add_subparsers(dest="action", required=True, parser_class=_Parser)
    c = cv.add_parser("periods", help="branch points, period matrix, mu-period table")
    c.add_argument("--t", required=True, help="monic-first coefficients '1,t_1,...,t_(g+1)', e.g. '1,-5,2'")
    c.add_argument("--json", action="store_true")

    sp = sub.add_parser("spectrum").add_subparsers(dest="action", required=True, parser_class=_Parser)
    s = sp.add_parser("solve", help="solve the dual Baxter equations for a state")
    s.add_argument("--g", type=int, default=1)
    s.add_argument("--gamma", type=float)
    s.add_argument("--state", default="ground")
    s.add_argument("--init-t", type=_floats)
    s.add_argument("--init-T", type=_floats)
    s.add_argument("--max-iterations", type=int, default=None)
    s.add_argument("--out", default="cache")
    s.add_argument("--no-cache", action="store_true")
    s.add_argument("--profile", help="write (zeta, Re Q, Im Q) CSV here")
    s.add_argument("--grid", type=_floats, default=(-6.0, 4.0, 201.0), help="lo,hi,count for --profile")

    df = sub.add_parser("deform").add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("pair", "riemann", "circ"):
        d = df.add_parser(name)
        d.add_argument("--left", required=True)
        d.add_argument("--right", required=True)
        d.add_argument("--lam1", type=float, default=1.5)
        d.add_argument("--lam2", type=float, default=2.0)
        if name != "riemann":
            d.add_argument("--k", type=int, required=True)
            d.add_argument("--l", type=int, required=True)
        if name == "pair":
            d.add_argument("--scheme", choices=("reg", "reg-alt"), default="reg")
        if name == "circ":
            d.add_argument("--variant", choices=("z", "Z"), default="z")
        if name == "riemann":
            d.add_argument("--csv", help="write the period matrix as CSV here")

    me = sub.add_parser("melem").add_subparsers(dest="action", required=True, parser_class=_Parser)
    m = me.add_parser("eval")
    m.add_argument("--obs", required=True)
    m.add_argument("--left", required=True)
    m.add_argument("--right", required=True)

    v = sub.add_parser("verify")
    v.add_argument("--suite", required=True)
    v.add_argument("--gamma", type=float)
    return p


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def _gamma(args, cfg):
    g = args.gamma if getattr(args, "gamma", None) is not None else cfg.get("gamma")
    if g is None:
        raise _Usage("--gamma is required")
    g = float(g)
    if g <= 0:
        raise _Usage("--gamma must be positive")
    return g


def _context(gamma, genus=1):
    from .dilog import GammaContext
    ctx = GammaContext(gamma)
    ctx.check_resonance(max(genus, 1))
    return ctx


def _cmd_phi(args, cfg):
    from .dilog import QuantumDilog
    ctx = _context(_gamma(args, cfg))
    val, err = QuantumDilog(ctx).evaluate(args.phi)
    _emit({"gamma": ctx.gamma, "phi": args.phi, "value": val, "error_estimate": err})
    return 0


def _cmd_curve(args, cfg):
    from .curve import (HyperellipticCurve, a_cycle, b_cycle, cycle_period, mu_differential,
                        normalized_periods)
    from .polyalg import TraceData

    try:
        t = TraceData.parse(args.t)
    except (ContractError, ValueError) as exc:
        raise _Usage(f"--t: {exc}") from exc
    g = t.genus
    desc = [1.0] + [float(c.real) for c in t.coefficients]
    curve = HyperellipticCurve(t)
    curve.require_periods()
    C, B = normalized_periods(curve)
    table = {}
    for k in range(-g, g + 1):
        mu = mu_differential(k, curve)
        row = {}
        for j in range(1, g + 1):
            row[f"a{j}"] = cycle_period(mu, a_cycle(j, curve), curve)
            row[f"b{j}"] = cycle_period(mu, b_cycle(j, curve), curve)
        table[str(k)] = row
    _emit({"t": list(desc), "genus": g, "branch_points": list(curve.branch_points),
           "B": B, "a_period_matrix": C, "mu_periods": table})
    return 0


def _traces_from(args, g):
    from .polyalg import TraceData
    t0, T0 = DEFAULT_TRACES.get(g, (tuple([-5.0] * g), tuple([-6.0] * g)))
    t = args.init_t or t0
    T = args.init_T or T0
    if len(t) != g or len(T) != g:
        raise _Usage(f"initial traces need {g} free coefficients each")
    return t, T


def _cmd_spectrum(args, cfg):
    from .spectrum import SolverOptions, SpectralPoint, solve_spectrum

    gamma = _gamma(args, cfg)
    ctx = _context(gamma, args.g)
    cache = Cache(args.out)
    key = cache.key(args.g, gamma, args.state)
    payload = None if args.no_cache else cache.load(key)
    if payload is not None:
        sys.stderr.write(f"cache hit: {cache.path(key)}\n")
    else:
        opts = SolverOptions()
        if args.max_iterations is not None:
            opts.max_iterations = args.max_iterations
        tf, Tf = _traces_from(args, args.g)
        pt = solve_spectrum(args.g, ctx, (tf, Tf), opts)
        pt.label = args.state
        # round-trip through JSON so that fresh and cached output agree byte for byte
        payload = json.loads(canonical_json(pt.to_json()))
        if not args.no_cache:
            cache.store(key, payload)
    if args.profile:
        pt = SpectralPoint.from_json(payload)
        lo, hi, n = args.grid
        xs = np.linspace(lo, hi, int(n))
        q = pt.Q(xs + 0j)
        Path(args.profile).write_text(_csv(zip(xs, q.real, q.imag), ["zeta", "re_Q", "im_Q"]))
    _emit(payload)
    if payload["status"] != "accepted":
        sys.stderr.write(canonical_json({"error": "DivergedError", "status": payload["status"],
                                         "residuals": payload["residuals"]}) + "\n")
        return 1
    return 0


def _load_point(path):
    from .spectrum import SpectralPoint
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc}") from exc
    if "payload" in d:
        d = d["payload"]
    return SpectralPoint.from_json(d)


def _dctx(args):
    from .deform import DeformContext
    return DeformContext.from_points(_load_point(args.left), _load_point(args.right))


def _cmd_deform(args, cfg):
    from .deform import circ_pairing, pairing_reg, pairing_reg_alt, period_matrix

    d = _dctx(args)
    if args.action == "pair":
        f = pairing_reg if args.scheme == "reg" else pairing_reg_alt
        v = f(args.k, args.l, d, args.lam1, args.lam2)
        _emit({"k": args.k, "l": args.l, "scheme": args.scheme, "lambda": [args.lam1, args.lam2], "value": v})
    elif args.action == "circ":
        v = circ_pairing(args.k, args.l, d, variant=args.variant)
        _emit({"k": args.k, "l": args.l, "variant": args.variant, "value": v})
    else:
        P = period_matrix(d, args.lam1, args.lam2)
        if args.csv:
            Path(args.csv).write_text(P.to_csv())
        _emit(P.to_json())
    return 0


def _cmd_melem(args, cfg):
    from .melem import ObservableSpec, matrix_element
    try:
        obs = ObservableSpec.from_json(json.loads(Path(args.obs).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise _Usage(f"bad observable file: {exc}") from exc
    d = _dctx(args)
    _emit({"value": matrix_element(obs, d)})
    return 0


def _cmd_verify(args, cfg):
    from .verify import SUITES, run_suite
    if args.suite not in SUITES:
        raise _Usage(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
    params = {}
    if args.gamma is not None and args.suite in ("dilog", "lattice", "sk"):
        params["gamma"] = args.gamma
    rep = run_suite(args.suite, **params)
    out = rep.as_dict()
    out.pop("seconds")          # keep the report byte-stable
    _emit(out)
    return 0 if rep.passed else 1


_COMMANDS = {"phi": _cmd_phi, "curve": _cmd_curve, "spectrum": _cmd_spectrum,
             "deform": _cmd_deform, "melem": _cmd_melem, "verify": _cmd_verify}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config)
        cfg.need_positive("gamma")
        return _COMMANDS[args.command](args, cfg)
    except _Usage as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    except DualBaxterError as exc:
        sys.stderr.write(canonical_json({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(canonical_json({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
