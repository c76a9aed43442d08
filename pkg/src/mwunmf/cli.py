"""Command-line interface.

Exit codes: 0 on success, 2 for invalid configuration or arguments and 3 for I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .experiments import (
    BENCH_COLUMNS,
    BENCH_EPSILON_SCALE,
    SOLVERS,
    benchmark,
    factorize_report,
    oscillation_demo,
)
from .matrix import CsvParseError, DimensionError, read_csv, write_csv
from .mwu import ConfigError, MwuConfig, StepTooLargeError, solve
from .objective import FactorPair
from .stationarity import check_sosp_nmf, check_sosp_snmf

EXIT_CONFIG = 2
EXIT_IO = 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _read(path):
    try:
        return read_csv(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}", EXIT_IO) from None
    except (OSError, CsvParseError) as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None


def _write_text(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        _write_text(out, text)
    else:
        sys.stdout.write(text)


def _int_list(text):
    try:
        vals = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def _c_value(text):
    return text if text == "auto" else float(text)


def cmd_factorize(args):
    v = _read(args.input)
    cfg = MwuConfig(
        c_constant=args.c,
        epsilon=args.epsilon,
        epsilon_scale=args.epsilon_scale,
        max_iters=args.max_iters,
        seed=args.seed,
        force=args.force,
        num_threads=args.threads,
    )
    try:
        tr = solve(v, args.rank, cfg)
    except (ConfigError, StepTooLargeError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    report = factorize_report(v, args.rank, tr, cfg, input_path=str(args.input))
    if args.out:
        outdir = Path(args.out).parent
        try:
            write_csv(tr.factors.w, outdir / "W.csv")
            write_csv(tr.factors.h, outdir / "H.csv")
        except OSError as exc:
            raise CliError(f"cannot write factors: {exc}", EXIT_IO) from None
    _emit_json(report, args.out)


def cmd_check(args):
    v = _read(args.input)
    w = _read(args.w)
    h = _read(args.h)
    try:
        p = FactorPair(w, h)
        nmf = check_sosp_nmf(v, p, n_samples=args.samples)
        snmf = None
        if args.c is not None:
            snmf = check_sosp_snmf(v, p, args.c, n_samples=args.samples)
    except DimensionError as exc:
        raise CliError(f"shape mismatch: {exc}", EXIT_CONFIG) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    report = {"schema": 1, "nmf": nmf.to_dict(), "snmf": snmf.to_dict() if snmf else None}
    _emit_json(report, args.out)


def _format_row(row, omit_timing):
    out = dict(row)
    out["wall_time_s"] = "" if omit_timing else f"{row['wall_time_s']:.6f}"
    out["relative_error"] = repr(row["relative_error"])
    out["reached_target"] = "true" if row["reached_target"] else "false"
    return out


def cmd_benchmark(args):
    def progress(row):
        if not args.quiet:
            print(
                f"n={row['n']} r={row['r']} seed={row['seed']} iters={row['iterations']} "
                f"rel={row['relative_error']:.3g} ({row['wall_time_s']:.2f}s)",
                file=sys.stderr,
            )

    rows = benchmark(
        args.n_list, args.r_list, range(args.seeds), target=args.target, solver=args.solver,
        max_iters=args.max_iters, epsilon_scale=args.epsilon_scale, workers=args.workers,
        progress=progress,
    )
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(_format_row(row, args.omit_timing))
    _write_text(args.out, buf.getvalue())


def cmd_oscillation(args):
    buf = io.StringIO()
    buf.write("step,concurrent,alternating\n")
    for step, conc, alt in oscillation_demo(args.steps):
        buf.write(f"{step},{conc!r},{alt!r}\n")
    _write_text(args.out, buf.getvalue())


def build_parser():
    parser = argparse.ArgumentParser(prog="mwunmf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("factorize", help="factor a CSV matrix with concurrent MWU")
    f.add_argument("--input", required=True)
    f.add_argument("--rank", type=int, required=True)
    f.add_argument("--c", type=_c_value, default="auto", help="mass constant C (default: auto)")
    f.add_argument("--force", action="store_true", help="accept C below the admissible threshold")
    f.add_argument("--epsilon", type=_c_value, default="auto")
    f.add_argument("--epsilon-scale", type=float, default=1.0)
    f.add_argument("--max-iters", type=int, default=200_000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--threads", type=int, default=1)
    f.add_argument("--out", help="report path; W.csv and H.csv go to the same directory")
    f.set_defaults(func=cmd_factorize)

    b = sub.add_parser("benchmark", help="iterations to reach a relative-error target")
    b.add_argument("--n-list", type=_int_list, default=[5, 10, 20])
    b.add_argument("--r-list", type=_int_list, default=[2, 3, 5])
    b.add_argument("--seeds", type=int, default=10)
    b.add_argument("--target", type=float, default=0.01)
    b.add_argument("--solver", choices=SOLVERS, default="mwu")
    b.add_argument("--max-iters", type=int, default=500_000)
    b.add_argument("--epsilon-scale", type=float, default=BENCH_EPSILON_SCALE)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--omit-timing", action="store_true",
                   help="leave wall_time_s blank so output is byte-identical across runs")
    b.add_argument("--quiet", action="store_true")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_benchmark)

    o = sub.add_parser("oscillation-demo", help="concurrent vs alternating Lee-Seung on V = I_2")
    o.add_argument("--steps", type=int, default=50)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_oscillation)

    c = sub.add_parser("check", help="classify a factor pair's stationarity")
    c.add_argument("--w", required=True)
    c.add_argument("--h", required=True)
    c.add_argument("--input", required=True)
    c.add_argument("--c", type=float, default=None, help="also check S-NMF with this C")
    c.add_argument("--samples", type=int, default=2000)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "benchmark" and args.seeds < 1:
        parser.error("--seeds must be positive")
    try:
        args.func(args)
    except CliError as exc:
        print(f"mwunmf: error: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
