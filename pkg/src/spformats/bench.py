"""Timed SpMV benchmark across storage formats, with CSV/JSON reports.

Usage::

    bench --matrix path.mtx --formats csr,argcsr --output out.csv
    bench --matrix-dir corpus/ --style json --output out.json

Next to ``out.csv`` the speed-up distribution is written to ``out.speedup.csv``:
for each threshold, how many matrices reach at least that speed-up over CSR.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import statistics
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import FormatStats, padding_stats
from .argcsr import DEFAULT_DESIRED_CHUNK_SIZE, DEFAULT_THREADS_PER_GROUP, argcsr_from_csr, spmv_argcsr
from .core import CsrMatrix, spmv_csr
from .ellpack import DEFAULT_SLICE_SIZE, ellpack_from_csr, sliced_from_csr, spmv_ellpack, spmv_sliced
from .errors import CorrectnessError, IoError, ParameterError
from .io import read_matrix_market

log = logging.getLogger(__name__)

FORMATS = ("csr", "ellpack", "sliced", "argcsr")
CSV_COLUMNS = ("matrix", "format", "threadsPerGroup", "desiredChunkSize", "sliceSize", "time_s",
               "gflops", "speedup_vs_csr", "nnz", "padded_slots", "total_slots")
SPEEDUP_THRESHOLDS = tuple(2.0 ** k for k in range(-8, 9))
TOLERANCE = 1e-10
MIN_TIME = 1e-9


@dataclass(frozen=True)
class BenchRecord:
    matrix_name: str
    format: str
    threads_per_group: int | None
    desired_chunk_size: int | None
    slice_size: int | None
    wall_time_per_iteration: float
    gflops: float
    speedup_vs_csr: float
    nnz: int
    stats: FormatStats
    conversion_time: float = 0.0

    def row(self) -> dict:
        return {
            "matrix": self.matrix_name,
            "format": self.format,
            "threadsPerGroup": self.threads_per_group,
            "desiredChunkSize": self.desired_chunk_size,
            "sliceSize": self.slice_size,
            "time_s": self.wall_time_per_iteration,
            "gflops": self.gflops,
            "speedup_vs_csr": self.speedup_vs_csr,
            "nnz": self.nnz,
            "padded_slots": self.stats.assigned_padded_slots,
            "total_slots": self.stats.total_allocated_slots,
        }


def bundled_matrix(name: str) -> Path:
    """Path of one of the small .mtx files shipped with the package."""
    return Path(str(resources.files("spformats") / "data" / name))


def _converter(fmt, threads_per_group, desired_chunk_size, slice_size):
    if fmt == "csr":
        return (lambda A: A), spmv_csr, (None, None, None)
    if fmt == "ellpack":
        return ellpack_from_csr, spmv_ellpack, (None, None, None)
    if fmt == "sliced":
        return (lambda A: sliced_from_csr(A, slice_size)), spmv_sliced, (None, None, slice_size)
    if fmt == "argcsr":
        return ((lambda A: argcsr_from_csr(A, threads_per_group, desired_chunk_size)), spmv_argcsr,
                (threads_per_group, desired_chunk_size, None))
    raise ParameterError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")


def _median_time(kernel, M, x, iterations, warmup, workers):
    for _ in range(warmup):
        kernel(M, x, workers=workers)
    samples = []
    for _ in range(iterations):
        t0 = time.perf_counter()
        kernel(M, x, workers=workers)
        samples.append(time.perf_counter() - t0)
    return max(statistics.median(samples), MIN_TIME)


def run_benchmark(source, formats=FORMATS, threads_per_group=DEFAULT_THREADS_PER_GROUP,
                  desired_chunk_size=DEFAULT_DESIRED_CHUNK_SIZE, slice_size=DEFAULT_SLICE_SIZE,
                  iterations=20, warmup=3, workers=1, name=None, seed=0) -> list[BenchRecord]:
    """Benchmark SpMV of one matrix in each requested format.

    ``source`` is a path to a .mtx file or a ``CsrMatrix``. Every format is
    checked against the CSR reference before it is timed; a relative
    deviation above 1e-10 raises ``CorrectnessError``.
    """
    if iterations < 1 or warmup < 0:
        raise ParameterError("iterations must be >= 1 and warmup >= 0")
    if isinstance(source, CsrMatrix):
        A, name = source, name or "matrix"
    else:
        A, name = read_matrix_market(source), name or Path(source).stem
    order = [f for f in FORMATS if f in set(formats)]
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ParameterError(f"unknown formats: {', '.join(sorted(unknown))}")

    x = np.random.default_rng(seed).uniform(-1.0, 1.0, A.num_cols)
    reference = spmv_csr(A, x)
    scale = max(np.abs(reference).max(initial=0.0), np.finfo(float).tiny)
    csr_time = _median_time(spmv_csr, A, x, iterations, warmup, workers)

    records = []
    for fmt in order:
        convert, kernel, params = _converter(fmt, threads_per_group, desired_chunk_size, slice_size)
        t0 = time.perf_counter()
        M = convert(A)
        conversion_time = time.perf_counter() - t0
        err = np.abs(kernel(M, x, workers=workers) - reference).max(initial=0.0) / scale
        if err > TOLERANCE:
            raise CorrectnessError(f"{name}/{fmt}: relative error {err:.3e} exceeds {TOLERANCE:g}")
        if fmt == "csr":
            t, speedup = csr_time, 1.0
        else:
            t = _median_time(kernel, M, x, iterations, warmup, workers)
            speedup = csr_time / t
        log.info("%s %s: %.3e s/iter", name, fmt, t)
        records.append(BenchRecord(name, fmt, *params, wall_time_per_iteration=t,
                                   gflops=2 * A.nnz / t / 1e9, speedup_vs_csr=speedup, nnz=A.nnz,
                                   stats=padding_stats(M), conversion_time=conversion_time))
    return records


def speedup_distribution(records, thresholds=SPEEDUP_THRESHOLDS) -> list[dict]:
    """Number of matrices per format whose speed-up over CSR is at least each threshold."""
    formats = [f for f in FORMATS if any(r.format == f for r in records)]
    table = []
    for threshold in thresholds:
        row = {"threshold": threshold}
        for fmt in formats:
            row[fmt] = len({r.matrix_name for r in records if r.format == fmt and r.speedup_vs_csr >= threshold})
        table.append(row)
    return table


def _write_table(rows, columns, style, fh):
    if style == "csv":
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    elif style == "json":
        json.dump(rows, fh, indent=2)
        fh.write("\n")
    else:
        raise ParameterError(f"unknown report style {style!r}")


def _sibling(path: Path, tag: str) -> Path:
    return path.with_name(f"{path.stem}.{tag}{path.suffix}")


def emit_report(records, style="csv", destination=sys.stdout, distribution_destination=None) -> list[dict]:
    """Write one row per record to ``destination`` and return the speed-up distribution.

    When ``destination`` is a path the distribution is also written next to it
    (``<stem>.speedup<suffix>``) unless ``distribution_destination`` says otherwise.
    """
    if not records:
        raise ParameterError("no records to report")
    rows = [r.row() for r in records]
    table = speedup_distribution(records)
    dist_columns = list(table[0])
    if distribution_destination is None and isinstance(destination, (str, os.PathLike)):
        distribution_destination = _sibling(Path(destination), "speedup")
    try:
        for target, data, cols in ((destination, rows, CSV_COLUMNS),
                                   (distribution_destination, table, dist_columns)):
            if target is None:
                continue
            if isinstance(target, (str, os.PathLike)):
                with open(target, "w", newline="") as fh:
                    _write_table(data, cols, style, fh)
            else:
                _write_table(data, cols, style, target)
    except OSError as exc:
        raise IoError(f"cannot write report: {exc}") from exc
    return table


def _parse_args(argv):
    p = argparse.ArgumentParser(prog="bench", description="Benchmark SpMV across sparse storage formats.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", type=Path, help="Matrix Market coordinate file")
    src.add_argument("--matrix-dir", type=Path, help="benchmark every .mtx file in this directory")
    p.add_argument("--formats", default=",".join(FORMATS))
    p.add_argument("--threads-per-group", type=int, default=DEFAULT_THREADS_PER_GROUP)
    p.add_argument("--desired-chunk-size", type=int, default=DEFAULT_DESIRED_CHUNK_SIZE)
    p.add_argument("--slice-size", type=int, default=DEFAULT_SLICE_SIZE)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--workers", type=int, default=1, help="threads used inside the timed region")
    p.add_argument("--output", type=Path, help="report file (default: stdout)")
    p.add_argument("--style", choices=("csv", "json"), default="csv")
    p.add_argument("-v", "--verbose", action="store_true")
    return p.parse_args(argv)


def main(argv=None) -> int:
    args = _parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    if args.matrix is not None:
        paths = [args.matrix]
    else:
        paths = sorted(args.matrix_dir.glob("*.mtx"))
        if not paths:
            print(f"bench: no .mtx files in {args.matrix_dir}", file=sys.stderr)
            return 1

    records, failures = [], 0
    for path in paths:
        try:
            records += run_benchmark(path, formats, args.threads_per_group, args.desired_chunk_size,
                                     args.slice_size, args.iterations, args.warmup, args.workers)
        except CorrectnessError as exc:
            print(f"bench: {exc}", file=sys.stderr)
            failures += 1
        except (OSError, ValueError) as exc:
            print(f"bench: {path}: {exc}", file=sys.stderr)
            failures += 1
    if records:
        if args.output is not None:
            emit_report(records, args.style, args.output)
        else:
            emit_report(records, args.style, sys.stdout, distribution_destination=sys.stderr)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
