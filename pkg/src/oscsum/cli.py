"""Command line entry point: one subcommand per module operation.

Exit codes: 0 ok, 2 usage/parse, 3 budget, 4 precondition, 5 internal.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import calibration
from .config import VERSION, load_config, provenance
from .errors import BudgetError, DomainError, OscsumError
from .polycore import Poly

CSV_SCHEMA = "oscsum-csv/1"


# parsing helpers --------------------------------------------------------------------

def _literal(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _literal(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Div):
        a, b = _literal(node.left), _literal(node.right)
        if isinstance(a, int) and isinstance(b, int):
            if b == 0:
                raise DomainError("zero denominator")
            return Fraction(a, b)
        return a / b
    if isinstance(node, ast.Tuple):
        return tuple(_literal(e) for e in node.elts)
    raise DomainError(f"unsupported expression: {ast.dump(node)[:60]}")


def parse_poly(text: str, D: int | None = None) -> Poly:
    """'{(2): 0.5, (1,1): 1/3}' (inline), a JSON polynomial object, or '@path' to either."""
    if text.startswith("@"):
        try:
            with open(text[1:], encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DomainError(f"cannot read polynomial file: {exc}") from exc
    text = text.strip()
    if text.startswith("{") and '"' in text:
        return Poly.from_json(text)
    try:
        tree = ast.parse(text, mode="eval").body
    except SyntaxError as exc:
        raise DomainError(f"cannot parse polynomial: {text!r}") from exc
    if not isinstance(tree, ast.Dict):
        raise DomainError("polynomial must be a {multi-index: coefficient} mapping")
    coeffs = {}
    for k, v in zip(tree.keys, tree.values):
        key = _literal(k)
        key = (key,) if isinstance(key, int) else key
        if not isinstance(key, tuple) or not all(isinstance(a, int) for a in key):
            raise DomainError(f"bad multi-index {key!r}")
        coeffs[key] = _literal(v)
    if not coeffs:
        if D is None:
            D = 1
        return Poly.zero(D)
    dims = {len(k) for k in coeffs}
    if len(dims) != 1:
        raise DomainError("multi-indices have different lengths")
    return Poly(dims.pop(), coeffs)


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError as exc:
        raise DomainError(f"expected comma-separated integers: {text!r}") from exc


def _floats(text: str) -> list[float]:
    out = []
    for v in str(text).split(","):
        v = v.strip()
        if not v:
            continue
        try:
            out.append(float(Fraction(v)) if "/" in v else float(v))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"bad number {v!r}") from exc
    return out


def _scalar_or_vec(text: str):
    vals = _floats(text)
    return vals[0] if len(vals) == 1 else vals


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise DomainError(f"{self.prog}: {message}")


# output --------------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(float(obj.real)), "im": _clean(float(obj.imag))}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    return obj


def _flatten(prefix: str, obj, out: list):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, json.dumps(obj, sort_keys=True) if isinstance(obj, list) else obj))


def render(command: str, result: dict, cfg, table: list | None = None) -> str:
    prov = provenance(cfg)
    if cfg.format == "json":
        doc = {"command": command, "result": _clean(result), "provenance": _clean(prov)}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# {CSV_SCHEMA} command={command} version={VERSION} seed={cfg.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    if table:
        cols = list(table[0].keys())
        w.writerow(cols)
        for row in table:
            w.writerow([_clean(row[c]) for c in cols])
    else:
        rows: list = []
        _flatten("", _clean(result), rows)
        w.writerow(["key", "value"])
        w.writerows(rows)
    return buf.getvalue()


# commands --------------------------------------------------------------------------------

def cmd_coeffnorm(a, cfg):
    from .coeffnorm import coeff_norm
    P = parse_poly(a.poly)
    r = coeff_norm(P, _scalar_or_vec(a.R), max_Q=cfg.max_Q)
    return r.to_dict(), None


def cmd_expsum(a, cfg):
    from .expsum import Progression, exp_sum
    P = parse_poly(a.poly)
    if a.start is not None or a.gap is not None or a.count is not None:
        N = _ints(a.N)
        D = len(N)
        starts = _ints(a.start) if a.start else [1] * D
        gaps = _ints(a.gap) if a.gap else [1] * D
        counts = _ints(a.count) if a.count else [(n - s) // g + 1 for n, s, g in zip(N, starts, gaps)]
        prog = Progression(tuple(starts), tuple(gaps), tuple(counts), tuple(N))
    else:
        prog = Progression.full_box(_ints(a.N), P.D) if "," in a.N else Progression.full_box(int(a.N), P.D)
    r = exp_sum(P, a.k, prog, partitions=cfg.partitions, max_points=cfg.max_points)
    return r.to_dict(), None


def cmd_sublevel(a, cfg):
    from .expsum import sublevel_large_norm, sublevel_small_norm
    P = parse_poly(a.poly)
    if a.mode == "small":
        r = sublevel_small_norm(P, a.R, a.A, a.B, a.theta, max_points=cfg.max_points)
    else:
        r = sublevel_large_norm(P, a.R, a.kappa, a.eta, max_points=cfg.max_points)
    bound = cfg.calibration.get(f"sublevel_{a.mode}")
    return {"count": r.count, "rhs": r.rhs, "ratio": r.ratio, "N_R": r.N, "extra": r.extra,
            "frozen_constant": bound, "within_frozen": r.ratio <= bound}, None


def cmd_gauss(a, cfg):
    from .circle import RationalPoint, gauss_sum, gauss_table
    from .polycore import index_set
    A = _ints(a.A)
    if a.table:
        vals = gauss_table(A, a.Q, a.d, a.D, exact=True)
        rows = []
        for B in np.ndindex(*vals.shape):
            v = complex(vals[B])
            rows.append({"Q": a.Q, "A": " ".join(map(str, A)), "B": " ".join(map(str, B)),
                         "re": v.real, "im": v.imag})
        return {"table": rows}, rows
    rp = RationalPoint(tuple(A), tuple(_ints(a.B)), a.Q, a.d, a.D)
    S = gauss_sum(rp)
    return {"Q": rp.Q, "A": list(rp.A), "B": list(rp.B), "alphas": [list(x) for x in index_set(a.d, a.D)],
            "value": S.value, "abs": abs(S.value), "exact_zero": S.exact_zero,
            "gcd_A": rp.gcd_A, "gcd_AB": rp.gcd_AB}, None


def cmd_recovery(a, cfg):
    from .circle import RationalPoint, recovery_identity
    rp = RationalPoint(tuple(_ints(a.A)), None, a.Q, a.d, a.D)
    r = recovery_identity(rp, _ints(a.n))
    return {"lhs": r.lhs, "rhs": r.rhs, "diff": r.diff, "exact": r.exact}, None


def cmd_multiplier(a, cfg):
    from .carleson import build_psi
    from .circle import assemble_L, multiplier_m, multiplier_phi
    P = parse_poly(a.poly)
    beta = _floats(a.beta)
    fam = build_psi(P.D, a.j)
    out = {"j": a.j}
    if a.kind in ("m", "all"):
        out["m"] = multiplier_m(a.j, P, beta, fam)
    if a.kind in ("phi", "all"):
        out["phi"] = multiplier_phi(a.j, P, beta, fam, None, max_nodes=cfg.quad_nodes)
        out["phi_star"] = multiplier_phi(a.j, P, beta, fam, cfg.A0, max_nodes=cfg.quad_nodes)
    if a.kind in ("L", "all"):
        out["L"] = assemble_L(a.j, P, beta, fam, cfg.A0, cfg.rho).to_dict()
    return out, None


def cmd_carleson(a, cfg):
    from .carleson import LambdaGrid, build_psi, carleson_apply, read_grid
    rng = np.random.default_rng(cfg.seed)
    fam = build_psi(a.D, a.j_max)
    if a.input:
        f = read_grid(a.input)
    else:
        f = rng.standard_normal((a.box,) * a.D)
    if f.size * (a.grid ** 1) > cfg.max_points:
        raise BudgetError("box x grid exceeds the point budget")
    grid = LambdaGrid.uniform(a.d, a.D, a.grid)
    r = carleson_apply(f, fam, grid, method=a.method)
    out = {"label": r.label, "grid": r.grid, "j_max": r.j_max, "l2_ratio": r.l2_ratio(f),
           "max": float(r.values.max()), "box": list(f.shape)}
    if a.dump:
        out["values"] = r.values
    return out, None


def cmd_schur(a, cfg):
    from .carleson import ttstar_sweep
    r = ttstar_sweep(a.k, _ints(a.s), d=a.d, n_rows=a.rows, seed=cfg.seed, pool=a.pool,
                     max_draws=a.max_draws)
    return {"rows": r.rows, "c0": r.c0, "col_sup_max": r.col_sup_max, "k": a.k}, r.rows


def cmd_invtest(a, cfg):
    from .expsum import Progression
    from .invthm import inverse_verify
    P = parse_poly(a.poly)
    N = _ints(a.N)
    prog = Progression.full_box(N if len(N) > 1 else N[0], P.D)
    r = inverse_verify(P, prog, a.delta, a.Cmax if a.Cmax is not None else cfg.C_max,
                       budget=cfg.search_budget)
    return r.to_dict(), None


def cmd_vdc(a, cfg):
    from .invthm import vdc_difference
    P = parse_poly(a.poly)
    n = np.arange(a.start, a.start + a.L, dtype=np.int64)[:, None]
    F = P.phases(n) if not P.is_zero() else np.zeros(a.L)
    r = vdc_difference(F, a.H)
    out = r.to_dict()
    out["C_vdc"] = cfg.calibration["vdc"]
    out["within_frozen"] = r.ratio <= cfg.calibration["vdc"]
    return out, None


def cmd_condense(a, cfg):
    from .invthm import condense
    alpha0 = Fraction(a.alpha0) if "/" in a.alpha0 else float(a.alpha0)
    if a.H.startswith("multiples:"):
        q0 = int(a.H.split(":", 1)[1])
        H = list(range(q0, a.N + 1, q0))
    else:
        H = _ints(a.H)
    eps = float(a.eps) if a.eps is not None else None
    r = condense(alpha0, H, a.N, a.delta, eps, C=cfg.calibration["condense"])
    return r.to_dict(), None


def cmd_rescale(a, cfg):
    from .expsum import Progression
    from .invthm import rescale
    N = _ints(a.N)
    D = len(N)
    starts = _ints(a.start) if a.start else [1] * D
    gaps = _ints(a.gap) if a.gap else [1] * D
    counts = [(n - s) // g + 1 for n, s, g in zip(N, starts, gaps)]
    prog = Progression(tuple(starts), tuple(gaps), tuple(counts), tuple(N))
    r = rescale(prog, a.K, a.target)
    parts = [{"starts": list(p.starts), "gaps": list(p.gaps), "counts": list(p.counts)} for p in r.parts]
    return {"parts": parts, "n_parts": len(parts), "remainder": r.remainder,
            "remainder_fraction": r.remainder_fraction, "run_lengths": list(r.run_lengths)}, None


def cmd_calibrate(a, cfg):
    names = a.suite.split(",") if a.suite else None
    res = calibration.run_calibration(cfg.seed if a.seed_override else calibration.CALIBRATION_SEED, names)
    for k, v in res.items():
        v["frozen"] = calibration.FROZEN.get(k)
        v["recorded"] = calibration.RECORDED.get(k)
    return res, None


COMMANDS = {
    "coeffnorm": cmd_coeffnorm, "expsum": cmd_expsum, "sublevel": cmd_sublevel,
    "gauss": cmd_gauss, "recovery": cmd_recovery, "multiplier": cmd_multiplier,
    "carleson": cmd_carleson, "schur": cmd_schur, "invtest": cmd_invtest, "vdc": cmd_vdc,
    "condense": cmd_condense, "rescale": cmd_rescale, "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--config", default=None, help="flat key = value file")
    common.add_argument("--format", choices=["json", "csv"], default=None)
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: OSCSUM_THREADS or cpu count); never changes output")

    p = _Parser(prog="oscsum", description="Exponential sums, coefficient norms and discrete Carleson numerics.",
                parents=[common])
    p.add_argument("--version", action="version", version=f"oscsum {VERSION}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    s = add("coeffnorm", "coefficient norm N_R(P)")
    s.add_argument("--poly", required=True)
    s.add_argument("--R", required=True, help="scale, or comma list per axis")

    s = add("expsum", "normalized exponential sum over a progression")
    s.add_argument("--poly", required=True)
    s.add_argument("--N", required=True, help="box size, or comma list per axis")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--start")
    s.add_argument("--gap")
    s.add_argument("--count")

    s = add("sublevel", "sublevel counts for small or large coefficient norms")
    s.add_argument("--poly", required=True)
    s.add_argument("--R", type=int, required=True)
    s.add_argument("--mode", choices=["small", "large"], default="small")
    s.add_argument("--A", type=int, default=1)
    s.add_argument("--B", type=float, default=100.0)
    s.add_argument("--theta", type=float, default=None)
    s.add_argument("--kappa", type=float, default=0.05)
    s.add_argument("--eta", type=float, default=0.5)

    s = add("gauss", "complete Gauss sum S(A/Q, B/Q)")
    s.add_argument("--Q", type=int, required=True)
    s.add_argument("--A", required=True)
    s.add_argument("--B", default="0")
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--D", type=int, default=1)
    s.add_argument("--table", action="store_true", help="all B in (Q)^D")

    s = add("recovery", "sum_B S(A/Q,B/Q) e(B.n/Q) against e(-P_{A/Q}(n))")
    s.add_argument("--Q", type=int, required=True)
    s.add_argument("--A", required=True)
    s.add_argument("--n", required=True)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--D", type=int, default=1)

    s = add("multiplier", "m_{j,lambda}, Phi_{j,nu} and L_{j,lambda} at one frequency")
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--poly", required=True)
    s.add_argument("--beta", required=True)
    s.add_argument("--kind", choices=["m", "phi", "L", "all"], default="all")

    s = add("carleson", "grid lower bound of the maximally modulated operator")
    s.add_argument("--D", type=int, default=1)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--j-max", dest="j_max", type=int, default=6)
    s.add_argument("--box", type=int, default=256)
    s.add_argument("--grid", type=int, default=8, help="points per coefficient")
    s.add_argument("--method", choices=["fft", "direct"], default="fft")
    s.add_argument("--input", default=None, help="binary or JSON grid file for f")
    s.add_argument("--dump", action="store_true", help="include output values")

    s = add("schur", "Schur row/column sums of TT* kernels on level sets")
    s.add_argument("--k", type=int, default=6)
    s.add_argument("--s", default="2,3,4,5")
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--rows", type=int, default=32)
    s.add_argument("--pool", type=int, default=32)
    s.add_argument("--max-draws", dest="max_draws", type=int, default=20000)

    s = add("invtest", "inverse theorem verifier")
    s.add_argument("--poly", required=True)
    s.add_argument("--N", required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--Cmax", type=float, default=None)

    s = add("vdc", "van der Corput differencing, both sides")
    s.add_argument("--poly", required=True)
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--H", type=int, required=True)
    s.add_argument("--start", type=int, default=0)

    s = add("condense", "condensation of singularities")
    s.add_argument("--alpha0", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--H", required=True, help="comma list or multiples:q")
    s.add_argument("--eps", default=None)
    s.add_argument("--delta", type=float, default=None)

    s = add("rescale", "split a progression into rescaled sub-progressions")
    s.add_argument("--N", required=True)
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--target", type=float, required=True)
    s.add_argument("--start")
    s.add_argument("--gap")

    s = add("calibrate", "rerun the calibration suites")
    s.add_argument("--suite", default=None, help="comma list of suite names")
    s.add_argument("--seed-override", dest="seed_override", action="store_true",
                   help="use --seed instead of the fixed calibration seed")
    return p


def main(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not args.command:
        parser.print_help(stdout)
        return 2
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        os.environ["OSCSUM_THREADS"] = str(args.threads)
    try:
        cfg = load_config(args.config, seed=args.seed, format=args.format)
        result, table = COMMANDS[args.command](args, cfg)
        text = render(args.command, result, cfg, table)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            stdout.write(text)
        return 0
    except OscsumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
