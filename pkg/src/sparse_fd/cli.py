"""Command-line interface.

    sparse-fd generate --n 10000 --d 1000 --z 100 --seed 1 --output data.rows
    sparse-fd sketch --input data.rows --algo sfd --ell 50 --output B.csv
    sparse-fd eval --matrix data.rows --sketch B.csv --k 10
    sparse-fd bench --sweep nnz --scale 0.25 --out-csv nnz.csv
    sparse-fd replay B.csv.manifest.json

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time


from . import __version__
from .bench import (
    SWEEPS,
    MetricsRow,
    SyntheticSpec,
    cov_err,
    exact_tail,
    generate_synthetic,
    proj_err,
    run_sweep,
    write_metrics_csv,
)
from .errors import NumericalError
from .formats import (
    FormatError,
    open_stream,
    read_manifest,
    read_sketch,
    write_manifest,
    write_plain,
    write_sketch,
)
from .randsvd import PowerConfig
from .sketch import FrequentDirections, SketchConfig, SparseFrequentDirections
from .sparse_core import SparseBuffer

log = logging.getLogger("sparse_fd")

EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _power_config(args) -> PowerConfig:
    if args.fast_q:
        return PowerConfig.fast(epsilon=args.epsilon)
    return PowerConfig(epsilon=args.epsilon, q_constant=args.q_const, q_override=args.q)


def _add_power_flags(p):
    p.add_argument("--epsilon", type=float, default=0.25, help="simultaneous iteration accuracy")
    p.add_argument("--q-const", type=float, default=1.0, help="multiplier on the iteration count")
    p.add_argument("--q", type=int, default=None, help="explicit power-iteration count")
    p.add_argument("--fast-q", action="store_true", help="use 8 power iterations")
    p.add_argument("--delta", type=float, default=0.1, help="failure probability budget")


def _manifest(args, argv, **extra) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    out = {"command": args.command, "argv": list(argv), "config": cfg,
           "seed": getattr(args, "seed", None), "version": __version__}
    out.update(extra)
    return out


def cmd_sketch(args, argv) -> int:
    stream = open_stream(args.input, d=args.dim)
    if not 1 <= args.ell <= stream.d:
        raise UsageError(f"--ell must lie in [1, d={stream.d}]")
    if args.algo == "fd":
        sketcher = FrequentDirections(stream.d, args.ell)
    else:
        cfg = SketchConfig(ell=args.ell, d=stream.d, delta=args.delta,
                           power=_power_config(args), seed=args.seed)
        sketcher = SparseFrequentDirections(cfg)
    start = time.perf_counter()
    n = 0
    for row in stream.rows:
        sketcher.append(row)
        n += 1
    B = sketcher.finalize()
    wall = time.perf_counter() - start
    write_sketch(B, args.output)
    extra = {"rows": n, "d": stream.d, "wall_seconds": wall,
             "input": args.input, "output": args.output}
    if args.algo == "sfd":
        extra.update(flushes=sketcher.flush_count, attempts=sketcher.attempt_total,
                     verifier_calls=sketcher.verifier.i, delta_spent=sketcher.verifier.spent)
    write_manifest(args.output, _manifest(args, argv, **extra))
    log.info("sketched %d rows into %s (%.3fs)", n, args.output, wall)
    return 0


def cmd_generate(args, argv) -> int:
    spec = SyntheticSpec(n=args.n, d=args.d, z=args.z, seed=args.seed)
    write_plain(generate_synthetic(spec), spec.n, spec.d, args.output)
    write_manifest(args.output, _manifest(args, argv, output=args.output))
    return 0


def _load_matrix(path, dim=None) -> SparseBuffer:
    stream = open_stream(path, d=dim)
    return SparseBuffer(stream.d).extend(stream.rows)


def cmd_eval(args, argv) -> int:
    A = _load_matrix(args.matrix, args.dim)
    B = read_sketch(args.sketch)
    if B.shape[1] != A.d:
        raise UsageError(f"sketch has {B.shape[1]} columns, matrix has {A.d}")
    try:
        meta = read_manifest(f"{args.sketch}.manifest.json")
    except FileNotFoundError:
        meta = {}
    cfg = meta.get("config", {})
    n, d = A.shape
    ell = B.shape[0]
    pe = None
    if 1 <= args.k <= ell and n:
        tail, _ = exact_tail(A, args.k)
        pe = proj_err(A, B, args.k, tail=tail)
    row = MetricsRow(
        algo=cfg.get("algo", "unknown"), n=n, d=d, ell=ell,
        z=round(A.nnz / n) if n else 0, k=args.k, proj_err=pe,
        cov_err=cov_err(A, B), wall_seconds=meta.get("wall_seconds", float("nan")),
        seed=cfg.get("seed") if cfg.get("algo") == "sfd" else None,
    )
    if args.output:
        write_metrics_csv([row], args.output)
        write_manifest(args.output, _manifest(args, argv, output=args.output))
    else:
        write_metrics_csv([row], sys.stdout)
    return 0


def cmd_bench(args, argv) -> int:
    power = _power_config(args)

    def progress(row):
        log.info("%s %s=%s wall=%.3fs", row.algo, args.sweep,
                 {"n": row.n, "d": row.d, "ell": row.ell, "nnz": row.z}[args.sweep],
                 row.wall_seconds)

    rows = run_sweep(args.sweep, scale=args.scale, seed=args.seed, k=args.k, power=power,
                     delta=args.delta, metrics=not args.no_metrics, log=progress)
    write_metrics_csv(rows, args.out_csv)
    write_manifest(args.out_csv, _manifest(args, argv, output=args.out_csv))
    return 0


def cmd_replay(args, argv) -> int:
    meta = read_manifest(args.manifest)
    stored = meta.get("argv")
    if not stored:
        raise UsageError(f"{args.manifest} does not record a command line")
    return main(stored)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparse-fd", description="Streaming matrix sketches.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sketch", help="sketch a row stream in one pass")
    p.add_argument("--input", required=True)
    p.add_argument("--algo", choices=["fd", "sfd"], default="sfd")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=None, help="column count for headerless row files")
    p.add_argument("--output", required=True)
    _add_power_flags(p)
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser("generate", help="write a synthetic sparse stream")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="projection and covariance error of a sketch")
    p.add_argument("--matrix", required=True)
    p.add_argument("--sketch", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="FD vs SFD over one swept parameter")
    p.add_argument("--sweep", choices=sorted(SWEEPS), required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on the row count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--no-metrics", action="store_true", help="timing only")
    _add_power_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args, argv)
    except (UsageError, FormatError, ValueError, OSError) as exc:
        print(f"sparse-fd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"sparse-fd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
