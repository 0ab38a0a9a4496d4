"""Command-line front end.

Exit codes: 0 positive / success, 1 not positive, 2 unknown, 3 input error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cones import (
    ConeDims,
    DimensionError,
    ParseError,
    PointPQ,
    Tolerances,
    format_float,
    in_L,
    in_M,
    in_M_quadratic,
    iter_csv_rows,
    points_from_csv,
    points_from_json,
    points_to_csv,
    quadratic_form,
)
from .generators import gap_csv, gap_study, make_positive_operator, sample_L_batch, sample_M_batch
from .linalg import ExpmOverflowError
from .posop import (
    AnalyzeConfig,
    Operator,
    Status,
    analyze,
    exp_automorphism_check,
    find_lyapunov_violation,
)
from .sampling import RngStream

EXIT_POSITIVE, EXIT_NOT_POSITIVE, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2, 3
_STATUS_EXIT = {Status.POSITIVE: EXIT_POSITIVE, Status.NOT_POSITIVE: EXIT_NOT_POSITIVE,
                Status.UNKNOWN: EXIT_UNKNOWN}
GEN_STREAM = 0x47454E


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _t_values(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad t-value list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty t-value list")
    return vals


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--p", type=int)
    common.add_argument("--q", type=int)
    common.add_argument("--tol-abs", type=float, default=1e-9)
    common.add_argument("--tol-rel", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=_positive_int)
    common.add_argument("--t-values", type=_t_values, default=[1.0])
    common.add_argument("--output", help="write the JSON report here instead of stdout")
    common.add_argument("--no-timestamp", action="store_true")

    parser = _Parser(prog="elcone", description="Extended Lorentz cone verification tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("membership", parents=[common], help="L/M membership of points")
    p.add_argument("input", help="CSV rows of length p+q, or point JSON; '-' for stdin")
    p = sub.add_parser("check-positive", parents=[common], help="is the matrix a positive operator of M(p,q)")
    p.add_argument("input")
    p = sub.add_parser("lyapunov", parents=[common], help="sampled Lyapunov-like test")
    p.add_argument("input")
    p = sub.add_parser("expmap", parents=[common], help="exp(tA) automorphism evidence")
    p.add_argument("input")
    p = sub.add_parser("gen", parents=[common], help="write sampled points or positive operators")
    p.add_argument("--kind", choices=("points-M", "points-L", "operators"), default="operators")
    p.add_argument("--count", type=_positive_int, default=1)
    p.add_argument("--mode", choices=("interior", "boundary", "mix"), default="mix")
    p.add_argument("--out-dir", required=True)
    p = sub.add_parser("gap", parents=[common], help="PSD-certificate vs oracle gap study")
    p.add_argument("--perturbation", type=float, default=0.1)
    p.add_argument("--csv", help="also write the summary table to this CSV file")
    return parser


# -- input ------------------------------------------------------------------

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _dims_from_args(args, required: bool = True) -> Optional[ConeDims]:
    if args.p is None and args.q is None and not required:
        return None
    if args.p is None or args.q is None:
        raise InputError("--p and --q are required")
    try:
        return ConeDims(args.p, args.q)
    except (DimensionError, TypeError) as exc:
        raise InputError(str(exc)) from None


def parse_matrix(text: str, dims: Optional[ConeDims]) -> Operator:
    """Matrix from CSV rows or JSON {"p", "q", "matrix"}; dims must agree."""
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
            fdims = ConeDims(obj["p"], obj["q"])
            M = np.array(obj["matrix"], dtype=float)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno) from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad matrix JSON: {exc}") from None
        if dims is not None and dims != fdims:
            raise InputError(f"--p/--q give {dims} but the file declares {fdims}")
        dims = fdims
    else:
        if dims is None:
            raise InputError("--p and --q are required for CSV input")
        rows = []
        for lineno, values in iter_csv_rows(text):
            if len(values) != dims.n:
                raise ParseError(f"expected {dims.n} values, got {len(values)}", lineno)
            rows.append(values)
        M = np.array(rows, dtype=float).reshape(-1, dims.n)
    if M.shape != (dims.n, dims.n):
        raise InputError(f"matrix of shape {M.shape} is not ({dims.n}, {dims.n}) for {dims}")
    if not np.all(np.isfinite(M)):
        raise ParseError("non-finite matrix entry")
    return Operator(dims, M)


def matrix_to_csv(A: np.ndarray) -> str:
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in np.asarray(A))


# -- commands ---------------------------------------------------------------

def _config(args, dims: Optional[ConeDims], **extra) -> dict:
    cfg = {"command": args.command,
           "p": None if dims is None else dims.p, "q": None if dims is None else dims.q,
           "tol_abs": args.tol_abs, "tol_rel": args.tol_rel, "seed": args.seed,
           "samples": args.samples}
    if hasattr(args, "input"):
        cfg["input"] = args.input
    cfg.update(extra)
    return cfg


def _tol(args) -> Tolerances:
    try:
        return Tolerances(args.tol_abs, args.tol_rel)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_membership(args) -> tuple[dict, int]:
    tol = _tol(args)
    text = _read(args.input)
    dims = _dims_from_args(args, required=False)
    results = []
    if text.lstrip().startswith(("{", "[")):
        points = points_from_json(text)
        numbered = list(enumerate(points, start=1))
        if dims is None and points:
            dims = points[0].dims
    else:
        if dims is None:
            raise InputError("--p and --q are required for CSV input")
        points = points_from_csv(text, dims)
        numbered = list(zip((ln for ln, _ in iter_csv_rows(text)), points))
    for ln, z in numbered:
        zd = z.dims
        if dims is not None and zd != dims:
            raise ParseError(f"point dims {zd} != {dims}", ln)
        results.append({"line": ln, "point": z.to_json(), "in_L": in_L(z, zd, tol),
                        "in_M": in_M(z, zd, tol), "in_M_quadratic": in_M_quadratic(z, zd, tol),
                        "quadratic_form": quadratic_form(z, zd)})
    return {"config": _config(args, dims), "results": results}, 0


def cmd_check_positive(args) -> tuple[dict, int]:
    tol = _tol(args)
    A = parse_matrix(_read(args.input), _dims_from_args(args, required=False))
    cfg = AnalyzeConfig(tol, args.samples or 10_000, args.seed)
    verdict = analyze(A, cfg)
    report = {"config": _config(args, A.dims, mc_samples=cfg.mc_samples), **verdict.to_json()}
    return report, _STATUS_EXIT[verdict.status]


def cmd_lyapunov(args) -> tuple[dict, int]:
    tol = _tol(args)
    A = parse_matrix(_read(args.input), _dims_from_args(args, required=False))
    n = args.samples or 1000
    pair = find_lyapunov_violation(A, n, args.seed, tol)
    report = {"config": _config(args, A.dims, pairs=n),
              "status": "Positive" if pair is None else "NotPositive",
              "lyapunov_like": pair is None,
              "violation": None if pair is None else {
                  "z": pair.z.to_json(), "s": pair.s.to_json(),
                  "pairing": float((A.matrix @ pair.z.flat()) @ pair.s.flat())}}
    return report, EXIT_POSITIVE if pair is None else EXIT_NOT_POSITIVE


def cmd_expmap(args) -> tuple[dict, int]:
    tol = _tol(args)
    A = parse_matrix(_read(args.input), _dims_from_args(args, required=False))
    try:
        verdicts = exp_automorphism_check(A, args.t_values, tol)
    except ExpmOverflowError as exc:
        raise InputError(f"matrix exponential overflow: {exc}") from None
    per_t = [{"t": t, "automorphism": v.positive, "verdict": v.to_json()}
             for t, v in zip(args.t_values, verdicts)]
    ok = all(v.positive for v in verdicts)
    report = {"config": _config(args, A.dims, t_values=args.t_values),
              "status": "Positive" if ok else "NotPositive", "automorphism": ok, "results": per_t}
    return report, EXIT_POSITIVE if ok else EXIT_NOT_POSITIVE


def cmd_gen(args) -> tuple[dict, int]:
    dims = _dims_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = RngStream(args.seed, GEN_STREAM).generator()
    files = []
    if args.kind == "operators":
        for k in range(args.count):
            A = make_positive_operator(dims, rng)
            path = out_dir / f"op_{k:04d}.csv"
            path.write_text(matrix_to_csv(A.matrix))
            files.append(str(path))
    else:
        sampler = sample_M_batch if args.kind == "points-M" else sample_L_batch
        Z = sampler(dims, args.count, rng, args.mode)
        path = out_dir / f"{args.kind}.csv"
        path.write_text(points_to_csv(PointPQ.from_flat(z, dims) for z in Z))
        files.append(str(path))
    report = {"config": _config(args, dims, kind=args.kind, count=args.count, mode=args.mode,
                                out_dir=args.out_dir),
              "files": files}
    return report, 0


def cmd_gap(args) -> tuple[dict, int]:
    dims = _dims_from_args(args)
    n = args.samples or 1000
    summary = gap_study(dims, n, RngStream(args.seed, GEN_STREAM), args.perturbation, _tol(args))
    table = gap_csv([summary])
    if args.csv:
        Path(args.csv).write_text(table)
    report = {"config": _config(args, dims, n_trials=n, perturbation=args.perturbation),
              "summary": summary.__dict__, "csv": table}
    return report, 0


COMMANDS = {"membership": cmd_membership, "check-positive": cmd_check_positive,
            "lyapunov": cmd_lyapunov, "expmap": cmd_expmap, "gen": cmd_gen, "gap": cmd_gap}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report, code = COMMANDS[args.command](args)
    except (InputError, ParseError, DimensionError) as exc:
        print(f"elcone {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not args.no_timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = json.dumps(report, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
