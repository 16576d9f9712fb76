"""Command-line front end.

Three subcommands:

  gen      write a synthetic matrix file with a known spectrum, plus its
           ground-truth singular values as CSV
  pca      run one of the PCA algorithms over a matrix file with bounded
           memory and write U, S, V plus a run manifest
  compare  sweep algorithms x seeds against the exact oracle (or a
           supplied reference spectrum) and write a metrics CSV

Exit codes: 0 success, 1 runtime or data error, 2 usage or config error.
`--threads 1` (the default, overridable via STREAMPCA_THREADS) pins the
BLAS pool and fixes the accumulation order, making every numeric output
byte-reproducible; manifests additionally record timings and timestamps,
which naturally differ between runs.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
import time
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .algorithms import (
    PcaConfig,
    TruncatedSvd,
    basic_rand_svd,
    legacy_single_pass,
    power_refine,
    single_pass_pca,
)
from .errors import ConfigError, ScaleError, StreamPcaError
from .matfile import (
    read_sigma_csv,
    write_header,
    write_sigma_csv,
)
from .metrics import (
    CSV_HEADER,
    compare,
    compare_to_sigma,
    csv_row,
    format_report,
)
from .sketch import NormalizedRowStream
from .streams import FileRowStream, PassCounter
from .synthetic import (
    SpectrumSpec,
    exact_truncated_svd,
    synth_matrix,
    synth_stream,
)

ALGORITHMS = ("single-pass", "basic", "legacy")

_DTYPE_NAMES = {"float32": "float32", "f32": "float32",
                "float64": "float64", "f64": "float64"}


def _default_threads() -> int:
    raw = os.environ.get("STREAMPCA_THREADS", "1")
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"STREAMPCA_THREADS must be an integer, got {raw!r}")
    if val < 0:
        raise ConfigError(f"STREAMPCA_THREADS must be >= 0, got {val}")
    return val


def _dtype_arg(text: str) -> str:
    key = text.strip().lower()
    if key not in _DTYPE_NAMES:
        raise argparse.ArgumentTypeError(
            f"dtype must be float32/f32 or float64/f64, got {text!r}")
    return _DTYPE_NAMES[key]


def _write_manifest(path, entries: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries.items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = f"{value:.6f}"
            fh.write(f"{key}={value}\n")


def read_manifest(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            key, _, value = line.partition("=")
            out[key] = value
    return out


def _utc_stamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


# ---------------------------------------------------------------- gen


def _add_gen(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser(
        "gen", help="generate a synthetic matrix file with a known spectrum")
    p.add_argument("spectrum",
                   help="type1..type5 or custom:V1,V2,... (nonincreasing)")
    p.add_argument("rows", type=int)
    p.add_argument("cols", type=int)
    p.add_argument("--rank", type=int, default=None,
                   help="number of nonzero singular values (default min(rows, cols))")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the random orthonormal factors (default 0)")
    p.add_argument("--dtype", type=_dtype_arg, default="float32",
                   help="payload element type (default float32)")
    p.add_argument("--layout", choices=("raw", "spca"), default="raw",
                   help="raw = headerless row-major payload (default); "
                        "spca = 22-byte self-describing header + payload")
    p.add_argument("--out", default=None,
                   help="output path (default derived from the arguments)")
    p.add_argument("--sigma-out", default=None,
                   help="truth spectrum CSV path (default OUT.sigma.csv)")
    p.add_argument("--block-rows", type=int, default=512,
                   help="rows generated and written per block (default 512)")
    p.set_defaults(func=cmd_gen)


def cmd_gen(args) -> int:
    spec = SpectrumSpec.parse(args.spectrum)
    matrix = synth_matrix(args.rows, args.cols, spec, seed=args.seed,
                          rank=args.rank)
    short = "f32" if args.dtype == "float32" else "f64"
    out = args.out
    if out is None:
        kind = spec.kind if spec.kind != "custom" else "custom"
        out = f"{kind}_{args.rows}x{args.cols}_{short}.{args.layout}"
    sigma_out = args.sigma_out if args.sigma_out is not None else f"{out}.sigma.csv"
    if args.block_rows < 1:
        raise ConfigError(f"--block-rows must be >= 1, got {args.block_rows}")

    t0 = time.perf_counter()
    started = _utc_stamp()
    np_dtype = "<f4" if args.dtype == "float32" else "<f8"
    with open(out, "wb") as fh:
        if args.layout == "spca":
            write_header(fh, args.rows, args.cols, args.dtype)
        for block in synth_stream(matrix).blocks(args.block_rows):
            fh.write(np.ascontiguousarray(block.values.astype(np_dtype)).tobytes())
    write_sigma_csv(sigma_out, matrix.sigma)

    _write_manifest(f"{out}.manifest.txt", {
        "command": "gen",
        "version": __version__,
        "argv": " ".join(sys.argv[1:]),
        "spectrum": args.spectrum,
        "rows": args.rows,
        "cols": args.cols,
        "rank": matrix.rank,
        "seed": args.seed,
        "dtype": args.dtype,
        "layout": args.layout,
        "out": out,
        "sigma_out": sigma_out,
        "started_utc": started,
        "finished_utc": _utc_stamp(),
        "t_total_seconds": time.perf_counter() - t0,
    })
    print(f"wrote {out} ({args.rows} x {args.cols} {args.dtype} {args.layout}) "
          f"and {sigma_out}")
    return 0


# ---------------------------------------------------------------- pca


def _add_pca(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser(
        "pca", help="run streaming PCA / truncated SVD on a matrix file")
    p.add_argument("input", help="matrix file (raw payload or spca layout)")
    p.add_argument("-k", "--rank", dest="k", type=int, required=True,
                   help="number of components to compute")
    p.add_argument("--rows", type=int, default=None,
                   help="row count (required for raw layout)")
    p.add_argument("--cols", type=int, default=None,
                   help="column count (required for raw layout)")
    p.add_argument("--dtype", type=_dtype_arg, default=None,
                   help="element type of a raw file (default float32)")
    p.add_argument("--oversample", type=int, default=10,
                   help="extra sketch columns beyond k (default 10)")
    p.add_argument("--block-size", type=int, default=10,
                   help="columns factorized per iteration (default 10)")
    p.add_argument("--power", type=int, choices=(0, 1), default=0,
                   help="0 = one data pass, 1 = second pass that sharpens "
                        "slow-decaying spectra (default 0)")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="single-pass",
                   help="single-pass (default), basic two-pass reference, or "
                        "the legacy one-pass baseline")
    p.add_argument("--center", action="store_true",
                   help="subtract column means (PCA proper); costs no extra pass")
    p.add_argument("--normalize", action="store_true",
                   help="shift each row to zero mean and unit norm before the "
                        "analysis (cohort-style preprocessing)")
    p.add_argument("--block-rows", type=int, default=None,
                   help="rows read per block (default: the sketch width l)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS threads; 1 (default) is bit-reproducible, 0 "
                        "means leave the pool unlimited; env STREAMPCA_THREADS "
                        "overrides the default")
    p.add_argument("--out-prefix", default=None,
                   help="output file prefix (default INPUT.pca)")
    p.set_defaults(func=cmd_pca)


def _open_input(args) -> FileRowStream:
    # headered files ignore the hints; raw files default to float32
    return FileRowStream(args.input, rows=args.rows, cols=args.cols,
                         dtype=args.dtype or "float32")


def _run_algorithm(algorithm: str, stream, cfg: PcaConfig,
                   block_rows: Optional[int], fixed_order: bool) -> TruncatedSvd:
    if algorithm == "single-pass":
        if cfg.power == 1:
            return power_refine(stream, cfg, block_rows=block_rows,
                                fixed_order=fixed_order)
        return single_pass_pca(stream, cfg, block_rows=block_rows,
                               fixed_order=fixed_order)
    if cfg.power != 0:
        raise ConfigError(
            f"--power 1 applies to the single-pass algorithm, not {algorithm}")
    if algorithm == "basic":
        return basic_rand_svd(stream, cfg, block_rows=block_rows)
    return legacy_single_pass(stream, cfg, block_rows=block_rows)


def cmd_pca(args) -> int:
    threads = _default_threads() if args.threads is None else args.threads
    if threads < 0:
        raise ConfigError(f"--threads must be >= 0, got {threads}")
    cfg = PcaConfig(k=args.k, oversample=args.oversample,
                    block_size=args.block_size, power=args.power,
                    seed=args.seed, center=args.center)
    file_stream = _open_input(args)
    counter = PassCounter(file_stream)
    stream = NormalizedRowStream(counter) if args.normalize else counter
    prefix = args.out_prefix if args.out_prefix is not None else f"{args.input}.pca"

    started = _utc_stamp()
    t0 = time.perf_counter()
    fixed_order = threads == 1
    if threads >= 1:
        with threadpool_limits(limits=threads):
            res = _run_algorithm(args.algorithm, stream, cfg,
                                 args.block_rows, fixed_order)
    else:
        res = _run_algorithm(args.algorithm, stream, cfg,
                             args.block_rows, fixed_order)
    t_total = time.perf_counter() - t0
    t_read = file_stream.read_seconds

    outputs = {
        "out_u": f"{prefix}.u.spca",
        "out_s": f"{prefix}.s.spca",
        "out_v": f"{prefix}.v.spca",
        "out_s_csv": f"{prefix}.s.csv",
    }
    _write_factor(outputs["out_u"], res.u)
    _write_factor(outputs["out_s"], res.s.reshape(1, -1))
    _write_factor(outputs["out_v"], res.v)
    write_sigma_csv(outputs["out_s_csv"], res.s)
    if res.mean is not None:
        outputs["out_mean"] = f"{prefix}.mean.spca"
        _write_factor(outputs["out_mean"], res.mean.reshape(1, -1))

    manifest = {
        "command": "pca",
        "version": __version__,
        "argv": " ".join(sys.argv[1:]),
        "input": args.input,
        "rows": file_stream.n_rows,
        "cols": file_stream.n_cols,
        "dtype": str(file_stream.layout.dtype),
        "algorithm": args.algorithm,
        "k": cfg.k,
        "oversample": cfg.oversample,
        "block_size": cfg.block_size,
        "l": cfg.l,
        "power": cfg.power,
        "center": cfg.center,
        "normalize": args.normalize,
        "seed": cfg.seed,
        "threads": threads,
        "block_rows": cfg.l if args.block_rows is None else args.block_rows,
        "passes_completed": counter.passes_completed,
        "retained_floats": res.retained_floats,
        "sigma_first": f"{res.s[0]:.17g}",
        "sigma_last": f"{res.s[-1]:.17g}",
        "warnings": "; ".join(res.warnings),
        **outputs,
        "started_utc": started,
        "finished_utc": _utc_stamp(),
        "t_read_seconds": t_read,
        "t_pca_seconds": t_total - t_read,
        "t_total_seconds": t_total,
    }
    _write_manifest(f"{prefix}.manifest.txt", manifest)
    for note in res.warnings:
        print(f"warning: {note}", file=sys.stderr)
    print(f"k={cfg.k} passes={counter.passes_completed} "
          f"retained_floats={res.retained_floats} "
          f"sigma[0]={res.s[0]:.6g} sigma[k-1]={res.s[-1]:.6g}")
    print(f"outputs: {prefix}.{{u,s,v}}.spca, {prefix}.s.csv, "
          f"{prefix}.manifest.txt")
    return 0


def _write_factor(path, a: np.ndarray) -> None:
    """Factor outputs always carry the self-describing header and full
    precision; they are results, not bulk inputs."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    with open(path, "wb") as fh:
        write_header(fh, a.shape[0], a.shape[1], "float64")
        fh.write(np.ascontiguousarray(a.astype("<f8")).tobytes())


# ---------------------------------------------------------------- compare


def _add_compare(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser(
        "compare",
        help="sweep algorithms x seeds against the exact oracle or a "
             "reference spectrum")
    p.add_argument("input",
                   help="matrix file, or a spectrum spec (type1..type5 / "
                        "custom:...) for an in-process synthetic matrix")
    p.add_argument("-k", "--rank", dest="k", type=int, required=True)
    p.add_argument("--rows", type=int, default=None,
                   help="rows (raw file or synthetic input)")
    p.add_argument("--cols", type=int, default=None,
                   help="cols (raw file or synthetic input)")
    p.add_argument("--dtype", type=_dtype_arg, default=None,
                   help="element type of a raw file (default float32)")
    p.add_argument("--matrix-seed", type=int, default=100,
                   help="seed of the synthetic matrix itself (default 100)")
    p.add_argument("--seeds", type=int, default=5,
                   help="sweep algorithm seeds 1..N (default 5)")
    p.add_argument("--algorithms", default="single-pass,basic,legacy",
                   help="comma list from {single-pass, basic, legacy} "
                        "(default all three)")
    p.add_argument("--oversample", type=int, default=10)
    p.add_argument("--block-size", type=int, default=10)
    p.add_argument("--power", type=int, choices=(0, 1), default=0,
                   help="power for the single-pass entry (default 0)")
    p.add_argument("--center", action="store_true")
    p.add_argument("--block-rows", type=int, default=None)
    p.add_argument("--reference", default=None,
                   help="truth singular-value CSV; replaces the dense oracle "
                        "(required once the matrix exceeds the oracle's size "
                        "guard)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default="compare.csv",
                   help="metrics CSV path (default compare.csv)")
    p.set_defaults(func=cmd_compare)


def _looks_like_spec(text: str) -> bool:
    low = text.strip().lower()
    return low.startswith("custom:") or (
        low.startswith("type") and low[4:].isdigit())


def cmd_compare(args) -> int:
    threads = _default_threads() if args.threads is None else args.threads
    if threads < 0:
        raise ConfigError(f"--threads must be >= 0, got {threads}")
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError(
                f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
    if not algorithms:
        raise ConfigError("no algorithms selected")
    if args.seeds < 1:
        raise ConfigError(f"--seeds must be >= 1, got {args.seeds}")

    if _looks_like_spec(args.input):
        if args.rows is None or args.cols is None:
            raise ConfigError("synthetic input needs --rows and --cols")
        matrix = synth_matrix(args.rows, args.cols,
                              SpectrumSpec.parse(args.input),
                              seed=args.matrix_seed)
        make_stream = lambda: synth_stream(matrix)  # noqa: E731
        describe = f"synthetic {args.input} {args.rows}x{args.cols}"
        oracle_input = matrix
    else:
        make_stream = lambda: FileRowStream(  # noqa: E731
            args.input, rows=args.rows, cols=args.cols,
            dtype=args.dtype or "float32")
        describe = args.input
        oracle_input = make_stream()

    ref_sigma = None
    truth = None
    dense = None
    if args.reference is not None:
        ref_sigma = read_sigma_csv(args.reference)
    else:
        try:
            truth = exact_truncated_svd(oracle_input, k=args.k,
                                        center=args.center)
            from .synthetic import _materialize
            dense = _materialize(oracle_input)
        except ScaleError as exc:
            raise ScaleError(
                f"{exc}; pass --reference with a precomputed truth CSV"
            ) from exc

    started = _utc_stamp()
    t0 = time.perf_counter()
    rows = []
    times = {}
    for algorithm in algorithms:
        for seed in range(1, args.seeds + 1):
            cfg = PcaConfig(
                k=args.k, oversample=args.oversample,
                block_size=args.block_size,
                power=args.power if algorithm == "single-pass" else 0,
                seed=seed, center=args.center)
            stream = make_stream()
            t1 = time.perf_counter()
            fixed_order = threads == 1
            if threads >= 1:
                with threadpool_limits(limits=threads):
                    res = _run_algorithm(algorithm, stream, cfg,
                                         args.block_rows, fixed_order)
            else:
                res = _run_algorithm(algorithm, stream, cfg,
                                     args.block_rows, fixed_order)
            times[f"t_run_{algorithm}_{seed}"] = time.perf_counter() - t1
            if truth is not None:
                report = compare(res, truth, a=dense)
            else:
                report = compare_to_sigma(res, ref_sigma)
            rows.append((algorithm, seed, report))

    lines = [CSV_HEADER]
    lines += [csv_row(alg, seed, rep) for alg, seed, rep in rows]
    for algorithm in algorithms:
        errs = [r.max_singval_abs_err for a, _, r in rows if a == algorithm]
        med = statistics.median(errs)
        summary = [algorithm, "median", str(args.k), f"{med:.17g}",
                   "", "", "", "", ""]
        lines.append(",".join(summary))
        print(f"{algorithm:<12} median max singular-value error {med:.6e}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    _write_manifest(f"{args.out}.manifest.txt", {
        "command": "compare",
        "version": __version__,
        "argv": " ".join(sys.argv[1:]),
        "input": describe,
        "k": args.k,
        "seeds": args.seeds,
        "algorithms": ",".join(algorithms),
        "oversample": args.oversample,
        "block_size": args.block_size,
        "power": args.power,
        "center": args.center,
        "threads": threads,
        "reference": args.reference or "",
        "out": args.out,
        "started_utc": started,
        "finished_utc": _utc_stamp(),
        **times,
        "t_total_seconds": time.perf_counter() - t0,
    })
    print(f"wrote {args.out} ({len(rows)} runs)")
    return 0


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streampca",
        description="Out-of-core randomized PCA / truncated SVD for large "
                    "row-major matrix files.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)
    _add_pca(sub)
    _add_compare(sub)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (StreamPcaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
