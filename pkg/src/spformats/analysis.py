"""Padding, load-balance and memory-transaction diagnostics for every storage format.

All numbers are read off the storage arrays of the format instance itself, never
recomputed from the source CSR matrix.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import singledispatch

import numpy as np

from .argcsr import ArgCsrMatrix
from .core import INDEX, SENTINEL, CsrMatrix, row_nnz
from .ellpack import EllpackMatrix, SlicedEllpackMatrix
from .errors import ParameterError

ELEMENT_BYTES = 8
INDEX_BYTES = 4


@dataclass(frozen=True)
class FormatStats:
    explicit_nnz: int
    assigned_padded_slots: int
    total_allocated_slots: int
    padding_ratio: float
    estimated_bytes: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class BalanceStats:
    per_group_nnz: tuple[int, ...]
    max_over_mean: float
    coefficient_of_variation: float


@dataclass(frozen=True)
class TrafficModel:
    warp_width: int = 32
    segment_bytes: int = 128
    element_bytes: int = ELEMENT_BYTES

    def __post_init__(self):
        if min(self.warp_width, self.segment_bytes, self.element_bytes) < 1:
            raise ParameterError("traffic model parameters must be positive")
        if self.segment_bytes % self.element_bytes:
            raise ParameterError("segment_bytes must be a multiple of element_bytes")


@dataclass(frozen=True)
class Traffic:
    """Modeled transactions, split by the array being read.

    ``gather`` counts segments of the input vector touched through ``x[column]``;
    it is kept out of ``total`` because its coalescing depends on the sparsity
    pattern rather than on the storage format.
    """

    values: int
    columns: int
    gather: int

    @property
    def total(self):
        return self.values + self.columns


def _stats(explicit, assigned_slots, total, metadata_bytes):
    ratio = total / explicit if explicit else (1.0 if total == 0 else math.inf)
    return FormatStats(
        explicit_nnz=int(explicit),
        assigned_padded_slots=int(assigned_slots - explicit),
        total_allocated_slots=int(total),
        padding_ratio=float(ratio),
        estimated_bytes=int(total * (ELEMENT_BYTES + INDEX_BYTES) + metadata_bytes),
    )


@singledispatch
def padding_stats(fmt) -> FormatStats:
    raise TypeError(f"no padding statistics for {type(fmt).__name__}")


@padding_stats.register
def _(fmt: CsrMatrix):
    return _stats(fmt.nnz, fmt.nnz, fmt.nnz, (fmt.num_rows + 1) * INDEX_BYTES)


@padding_stats.register
def _(fmt: EllpackMatrix):
    explicit = int(np.count_nonzero(fmt.columns != SENTINEL))
    return _stats(explicit, len(fmt.columns), len(fmt.columns), 0)


@padding_stats.register
def _(fmt: SlicedEllpackMatrix):
    explicit = int(np.count_nonzero(fmt.columns != SENTINEL))
    return _stats(explicit, len(fmt.columns), len(fmt.columns), 2 * fmt.num_slices * INDEX_BYTES)


@padding_stats.register
def _(fmt: ArgCsrMatrix):
    # Slots of free threads' chunks are allocated but not counted as assigned padding.
    explicit = int(np.count_nonzero(fmt.columns != SENTINEL))
    assigned = int((fmt.group_info[:, 3] * fmt.assigned_threads()).sum())
    metadata = (4 * fmt.num_groups + fmt.num_rows) * INDEX_BYTES
    return _stats(explicit, assigned, len(fmt.columns), metadata)


def _balance(per_group):
    counts = np.asarray(per_group, dtype=np.float64)
    mean = counts.mean()
    if mean == 0:
        return BalanceStats(tuple(int(c) for c in counts), 1.0, 0.0)
    return BalanceStats(tuple(int(c) for c in counts), float(counts.max() / mean), float(counts.std() / mean))


@singledispatch
def balance_stats(fmt) -> BalanceStats:
    raise TypeError(f"no group structure in {type(fmt).__name__}")


@balance_stats.register
def _(fmt: ArgCsrMatrix):
    group = np.repeat(np.arange(fmt.num_groups), fmt.group_info[:, 3] * fmt.threads_per_group)
    real = fmt.columns != SENTINEL
    return _balance(np.bincount(group[real], minlength=fmt.num_groups))


@balance_stats.register
def _(fmt: SlicedEllpackMatrix):
    sizes = fmt.slice_widths * fmt.rows_per_slice()
    sl = np.repeat(np.arange(fmt.num_slices), sizes)
    real = fmt.columns != SENTINEL
    return _balance(np.bincount(sl[real], minlength=fmt.num_slices))


@dataclass
class _Lanes:
    """One entry per logical thread: where it starts, its stride, and how far it reads."""

    base: np.ndarray
    stride: np.ndarray
    column_reads: np.ndarray
    value_reads: np.ndarray
    warp: np.ndarray


def _lane_fill(columns, lane_of_slot, num_lanes):
    real = columns != SENTINEL
    return np.bincount(lane_of_slot[real], minlength=num_lanes).astype(INDEX)


@singledispatch
def _lanes(fmt, warp_width) -> _Lanes:
    raise TypeError(f"no traffic model for {type(fmt).__name__}")


@_lanes.register
def _(fmt: CsrMatrix, warp_width):
    counts = row_nnz(fmt)
    rows = np.arange(fmt.num_rows)
    return _Lanes(fmt.row_pointers[:-1], np.ones_like(rows), counts, counts, rows // warp_width)


@_lanes.register
def _(fmt: EllpackMatrix, warp_width):
    n = fmt.num_rows
    rows = np.arange(n)
    fill = _lane_fill(fmt.columns, np.arange(len(fmt.columns)) % n, n)
    # A lane also reads the sentinel that stops it.
    reads = np.minimum(fill + 1, fmt.width)
    return _Lanes(rows, np.full(n, n), reads, fill, rows // warp_width)


@_lanes.register
def _(fmt: SlicedEllpackMatrix, warp_width):
    h = fmt.rows_per_slice()
    sl = np.repeat(np.arange(fmt.num_slices), h)
    local = np.arange(fmt.num_rows) - sl * fmt.slice_size
    sizes = fmt.slice_widths * h
    slot_slice = np.repeat(np.arange(fmt.num_slices), sizes)
    slot_local = np.arange(len(fmt.columns)) - fmt.slice_offsets[slot_slice]
    slot_row = slot_slice * fmt.slice_size + slot_local % h[slot_slice]
    fill = _lane_fill(fmt.columns, slot_row, fmt.num_rows)
    reads = np.minimum(fill + 1, fmt.slice_widths[sl])
    warps_per_slice = -(-fmt.slice_size // warp_width)
    return _Lanes(fmt.slice_offsets[sl] + local, h[sl], reads, fill,
                  sl * warps_per_slice + local // warp_width)


@_lanes.register
def _(fmt: ArgCsrMatrix, warp_width):
    T = fmt.threads_per_group
    G = fmt.num_groups
    group, chunk, _ = fmt._slot_coordinates()
    fill = _lane_fill(fmt.columns, group * T + chunk, G * T)
    lane_group = np.repeat(np.arange(G), T)
    lane_chunk = np.tile(np.arange(T), G)
    reads = np.minimum(fill + 1, fmt.group_info[lane_group, 3])
    warps_per_group = -(-T // warp_width)
    return _Lanes(fmt.group_info[lane_group, 2] + lane_chunk, np.full(G * T, T), reads, fill,
                  lane_group * warps_per_group + lane_chunk // warp_width)


def _expand(lanes, reads):
    """Flat position, warp id and step of every individual read."""
    lane = np.repeat(np.arange(len(reads)), reads)
    step = np.arange(len(lane)) - np.repeat(np.cumsum(reads) - reads, reads)
    pos = lanes.base[lane] + step * lanes.stride[lane]
    return pos, lanes.warp[lane], step


def _distinct(warp, step, segment):
    if len(warp) == 0:
        return 0
    return len(np.unique(np.stack([warp, step, segment]), axis=1)[0])


def traffic_breakdown(fmt, model: TrafficModel = TrafficModel()) -> Traffic:
    """Count aligned segments each warp touches per lockstep iteration.

    Lanes of one warp run in lockstep; in step ``j`` every lane still active
    reads its ``j``-th column index and, unless it is the ``-1`` sentinel, the
    matching value and ``x`` entry. Each distinct ``segment_bytes``-aligned
    segment touched by a warp in a step costs one transaction.
    """
    lanes = _lanes(fmt, model.warp_width)
    seg = model.segment_bytes
    pos, warp, step = _expand(lanes, lanes.column_reads)
    columns = _distinct(warp, step, pos * INDEX_BYTES // seg)
    pos, warp, step = _expand(lanes, lanes.value_reads)
    values = _distinct(warp, step, pos * model.element_bytes // seg)
    gather = _distinct(warp, step, fmt.columns[pos] * model.element_bytes // seg)
    return Traffic(values=values, columns=columns, gather=gather)


def modeled_transactions(fmt, model: TrafficModel = TrafficModel()) -> int:
    """Matrix-side transactions (values plus column indexes)."""
    return traffic_breakdown(fmt, model).total
