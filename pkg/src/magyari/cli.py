"""Command-line front end.

All commands print JSON with sorted keys. Floats use Python's shortest
round-trip repr, so identical inputs give byte-identical output.

Exit codes: 0 success, 1 solver or verification failure, 2 usage error
(bad flags or malformed input JSON).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .direct import newton_roots, solve_harmonic, solve_n0, solve_newton, solve_sextic
from .large_ell import SIGMA_EXPONENT, recover_physical, rescale_decadic, split_linear_p
from .model import ParityChannel, PotentialSpec, QuasiExactModel, WkbTail, solve_wkb_tail
from .perturbation import DegenerateStateError, evaluate_series, run, solve_zero_order
from .system import build_system
from .verification import ode_residual, recurrence_residual_norm


class UsageError(Exception):
    pass


class SolverError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma list of numbers, got {text!r}") from exc


def _plain(obj):
    """numpy containers and scalars to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(payload) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MAGYARI_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"MAGYARI_SEED must be an integer, got {env!r}") from exc


def _add_model_flags(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--q", type=int, help="number of plet components")
    parser.add_argument("--N", type=int, help="truncation degree", required=required)
    parser.add_argument("--parity", type=float, default=0.0, help="p: 0 or 1, or real > 0 with --large-ell")
    parser.add_argument("--large-ell", action="store_true", help="allow non-integer or large p")
    src = parser.add_mutually_exclusive_group()
    src.add_argument("--f", type=_floats, help="tail coefficients f_0..f_q")
    src.add_argument("--g", type=_floats, help="dominant couplings g_{q+1}..g_{2q+1}")


def _model(args) -> QuasiExactModel:
    if args.f is None and args.g is None:
        raise UsageError("one of --f or --g is required")
    if args.N is None or args.N < 0:
        raise UsageError("--N must be a non-negative integer")
    try:
        if args.f is not None:
            tail = WkbTail(tuple(args.f))
        else:
            if len(args.g) % 2 == 0:
                raise UsageError("--g takes q+1 dominant couplings, low to high")
            q = len(args.g) - 1
            # subdominant g_1..g_q do not enter the tail
            tail = solve_wkb_tail(PotentialSpec((0.0,) * q + tuple(args.g)))
        if args.q is not None and args.q != tail.q:
            raise UsageError(f"--q {args.q} conflicts with {tail.q + 1} tail coefficients")
        channel = ParityChannel(args.parity, large_ell=args.large_ell)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return QuasiExactModel(tail, args.N, channel)


def _meta(model: QuasiExactModel, **extra) -> dict:
    return {"q": model.q, "N": model.N, "p": model.p, "f": list(model.f), **extra}


def cmd_build_matrix(args) -> tuple[int, str]:
    model = _model(args)
    system = build_system(model)
    shifts = [
        {"xi": xi, "row_offset": xi - 1, "positions": [[m + xi - 1, m] for m in range(model.N + 1)]}
        for xi in range(1, model.q + 1)
    ]
    payload = {
        "meta": _meta(model),
        "shape": list(system.shape),
        "matrix": system.H,
        "shift_basis": shifts,
        "g_q": model.g_q,
    }
    return 0, dumps(payload)


def _pick_method(model: QuasiExactModel, method: str) -> str:
    if method != "auto":
        return method
    if model.N == 0:
        return "n0"
    if model.q == 0:
        return "harmonic"
    if model.q == 1 and model.f[1] == 1.0:
        return "sextic"
    return "newton"


def _solve(model: QuasiExactModel, method: str, starts: int, seed: int):
    if method == "harmonic":
        if model.q != 0:
            raise SolverError("harmonic method needs q = 0")
        return [solve_harmonic(model.f[0], model.p, model.N)]
    if method == "sextic":
        if model.q != 1 or model.f[1] != 1.0:
            raise SolverError("sextic method needs q = 1 and f_1 = 1")
        return solve_sextic(model.f[0], model.N, model.p)
    if method == "n0":
        if model.N != 0:
            raise SolverError("n0 method needs N = 0")
        return [solve_n0(model.tail, model.p)]
    return solve_newton(build_system(model), starts, seed)


def cmd_solve(args) -> tuple[int, str]:
    model = _model(args)
    method = _pick_method(model, args.method)
    solutions = _solve(model, method, args.starts, _seed(args))
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "energy", "plet", "wave", "residual_norm", "classification"])
        for i, s in enumerate(solutions):
            writer.writerow([
                i, repr(s.energy),
                ";".join(repr(v) for v in s.plet.g), ";".join(repr(v) for v in s.wave.h),
                repr(s.residual_norm), s.classification,
            ])
        return 0, buf.getvalue().rstrip("\n")
    rows = [s.as_dict() for s in solutions]
    return 0, dumps({"meta": _meta(model, method=method), "solutions": rows})


def _expansion(args):
    if args.scheme == "decadic":
        if args.p is None:
            raise UsageError("--p is required")
        try:
            return rescale_decadic(args.f0, args.f1, args.p)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if args.f is None and args.g is None:
        raise UsageError("linear scheme needs --f or --g and --N")
    if args.p is not None:
        args.parity = args.p
    args.large_ell = True
    return split_linear_p(build_system(_model(args)), args.shift_c)


def cmd_perturb(args) -> tuple[int, str]:
    if args.order < 0:
        raise UsageError("--order must be non-negative")
    expansion = _expansion(args)
    problem, lam, K = expansion.stack, expansion.lam, args.order
    seed = _seed(args)
    try:
        states = solve_zero_order(problem, args.starts, seed)
    except DegenerateStateError as exc:
        raise SolverError(str(exc)) from exc
    out = []
    for z in states:
        try:
            series = run(problem, z, K)
        except DegenerateStateError as exc:
            raise SolverError(str(exc)) from exc
        plet, wave = evaluate_series(series, z, lam)
        phys_plet, phys_wave = recover_physical(expansion, plet, wave)
        entry = {
            "zero_order": {"plet": list(z.plet0.g), "wave": list(z.wave0.h)},
            "corrections": [
                {"k": k, "plet": series.plets[k - 1], "wave": series.waves[k - 1]} for k in range(1, K + 1)
            ],
            "coupling_matrix": series.F,
            "evaluated_plet": list(plet.g),
            "evaluated_wave": list(wave.h),
            "physical": {"plet": list(phys_plet.g), "energy": phys_plet.energy, "wave": list(phys_wave.h)},
        }
        if args.compare:
            roots = newton_roots(problem.at(lam), problem.shifts, args.starts, seed)
            if roots:
                guess = np.asarray(plet)
                best = min(roots, key=lambda r: np.linalg.norm(r[0] - guess))
                error = float(np.max(np.abs(best[0] - guess)))
                entry["comparison"] = {
                    "newton_plet": best[0],
                    "error": error,
                    "lam_power": lam ** (K + 1),
                    "ratio": error / lam ** (K + 1),
                }
            else:
                entry["comparison"] = None
        out.append(entry)
    meta = {"scheme": expansion.scheme, "p": expansion.p, "lam": lam, "order": K}
    if expansion.scheme == "decadic_rescale":
        meta.update(sigma=expansion.sigma, sigma_exponent=SIGMA_EXPONENT, f0=args.f0, f1=args.f1)
    else:
        meta.update(shift_c=expansion.shift_c, **expansion.params)
    return 0, dumps({"meta": meta, "solutions": out})


def _read_solutions(path: str):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
        data = json.loads(text)
        sols = data["solutions"]
        meta = data.get("meta", {})
        parsed = [(list(map(float, s["plet"])), list(map(float, s["wave"]))) for s in sols]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed solution JSON: {exc}") from exc
    return meta, parsed


def cmd_verify(args) -> tuple[int, str]:
    meta, solutions = _read_solutions(args.input)
    # model flags default to the ones recorded by solve
    if args.f is None and args.g is None:
        if "f" not in meta:
            raise UsageError("no --f/--g given and the input carries no meta.f")
        args.f = meta["f"]
    if args.N is None:
        args.N = meta.get("N")
    if args.parity is None:
        args.parity = meta.get("p", 0.0)
    model = _model(args)
    report, ok = [], True
    for plet, wave in solutions:
        if len(plet) != model.q or len(wave) != model.N + 1:
            raise UsageError("solution shape does not match the model")
        rec = recurrence_residual_norm(model, plet, wave)
        ode = ode_residual(model, plet, wave)
        passed = rec <= args.tol and ode <= args.tol
        ok &= passed
        report.append({"plet": plet, "recurrence_residual": rec, "ode_residual": ode, "pass": passed})
    return (0 if ok else 1), dumps({"meta": _meta(model, tol=args.tol), "results": report})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magyari", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-matrix", help="print H, the shift basis and g_q")
    _add_model_flags(b)
    b.set_defaults(func=cmd_build_matrix)

    s = sub.add_parser("solve", help="direct solutions of the truncated system")
    _add_model_flags(s)
    s.add_argument("--method", choices=["auto", "harmonic", "sextic", "n0", "newton"], default="auto")
    s.add_argument("--starts", type=int, default=128)
    s.add_argument("--seed", type=int, default=None, help="falls back to $MAGYARI_SEED, then 0")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.set_defaults(func=cmd_solve)

    p = sub.add_parser("perturb", help="large-p perturbation series")
    _add_model_flags(p, required=False)
    p.add_argument("--scheme", choices=["linear", "decadic"], required=True)
    p.add_argument("--p", type=float, help="large parity parameter")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--shift-c", type=float, default=0.0)
    p.add_argument("--f0", type=float, default=0.0)
    p.add_argument("--f1", type=float, default=0.0)
    p.add_argument("--compare", action="store_true", help="cross-check against Newton at the same lam")
    p.add_argument("--starts", type=int, default=128)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_perturb)

    v = sub.add_parser("verify", help="check solutions from a solve JSON")
    _add_model_flags(v, required=False)
    v.set_defaults(parity=None)
    v.add_argument("input", help="solution JSON path, or - for stdin")
    v.add_argument("--tol", type=float, default=1e-9)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, text = args.func(args)
    except UsageError as exc:
        print(f"magyari: error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, DegenerateStateError, np.linalg.LinAlgError) as exc:
        print(f"magyari: {exc}", file=sys.stderr)
        return 1
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
