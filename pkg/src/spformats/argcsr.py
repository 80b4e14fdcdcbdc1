"""Adaptive row-grouped CSR (ARG-CSR).

Rows are packed into groups of at most ``threads_per_group`` rows. Every group
owns exactly ``threads_per_group`` chunks of equal length ``chunk_size``; long
rows are spread over several chunks so that one heavy row does not force the
whole group to be padded to its length. Chunks are stored columnwise: element
``j`` of chunk ``t`` in group ``g`` lives at ``offset_g + j * threads_per_group + t``.

SpMV runs in two phases per group. Each chunk first produces a partial sum,
then every row adds up the partial sums of its contiguous chunk range, read off
the per-group inclusive scan ``threads_mapping``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import NamedTuple

import numba as nb
import numpy as np

from ._parallel import run_blocks
from .core import (
    INDEX,
    REAL,
    SENTINEL,
    CsrMatrix,
    StorageRecord,
    as_vector,
    check_trailing_padding,
    csr_from_arrays,
    frozen_array,
    row_nnz,
)
from .errors import BoundsError, DimensionError, InternalError, ParameterError

DEFAULT_THREADS_PER_GROUP = 128
DEFAULT_DESIRED_CHUNK_SIZE = 1


class GroupInfo(NamedTuple):
    first_row: int
    size: int
    offset: int
    chunk_size: int


@dataclass(frozen=True)
class ThreadAssignment:
    threads_per_row: tuple[int, ...]
    chunk_size: int
    assigned_threads: int
    free_threads: int


def _filling(nnz, threads):
    return -(-nnz // threads)


def partition_groups(row_nnz, threads_per_group: int, desired_chunk_size: int) -> list[tuple[int, int]]:
    """Split rows into consecutive ``(first_row, size)`` groups.

    A group is closed when adding the next row would push its nonzero count
    above ``desired_chunk_size * threads_per_group`` or its row count above
    ``threads_per_group``; that row then opens the next group. A single row
    heavier than the whole budget ends up alone in its group.
    """
    if threads_per_group < 1 or desired_chunk_size < 1:
        raise ParameterError("threads_per_group and desired_chunk_size must be at least 1")
    counts = [int(n) for n in row_nnz]
    if not counts:
        raise ParameterError("cannot partition an empty row set")
    budget = desired_chunk_size * threads_per_group
    groups = []
    first, rows, nnz = 0, 0, 0
    for i, n in enumerate(counts):
        if rows and (nnz + n > budget or rows + 1 > threads_per_group):
            groups.append((first, rows))
            first, rows, nnz = i, 0, 0
        rows += 1
        nnz += n
    groups.append((first, rows))
    return groups


def assign_threads(row_nnz, threads_per_group: int) -> ThreadAssignment:
    """Spread a group's threads over its rows so the chunk size is as small as possible.

    Every row starts with one thread. Each spare thread then goes to the row
    with the greatest chunk filling ``ceil(nnz / threads)`` (lowest row index
    on ties) until no spare threads remain or every filling is already 1.
    With the final chunk size fixed, each row keeps only the
    ``ceil(nnz / chunk_size)`` threads it needs; the surplus becomes free
    threads whose chunks hold only padding. For one full row of 8 next to
    seven unit rows and 12 threads this gives 4 threads on the long row,
    chunk size 2 and one free thread.
    """
    counts = [int(n) for n in row_nnz]
    if threads_per_group < 1:
        raise ParameterError("threads_per_group must be at least 1")
    if len(counts) > threads_per_group:
        raise ParameterError(f"{len(counts)} rows do not fit into {threads_per_group} threads")
    threads = [1] * len(counts)
    spare = threads_per_group - len(counts)
    heap = [(-n, i) for i, n in enumerate(counts)]
    heapq.heapify(heap)
    while spare and heap and -heap[0][0] > 1:
        i = heap[0][1]
        threads[i] += 1
        spare -= 1
        heapq.heapreplace(heap, (-_filling(counts[i], threads[i]), i))
    chunk_size = max((_filling(n, t) for n, t in zip(counts, threads)), default=0)
    if chunk_size:
        # a thread that cannot lower the chunk size only adds padding
        threads = [max(1, _filling(n, chunk_size)) for n in counts]
    assigned = sum(threads)
    return ThreadAssignment(tuple(threads), chunk_size, assigned, threads_per_group - assigned)


def layout_group(A: CsrMatrix, first_row: int, size: int, assignment: ThreadAssignment,
                 threads_per_group: int) -> tuple[np.ndarray, np.ndarray]:
    """Values and columns segment (``chunk_size * threads_per_group`` slots) of one group.

    A row with ``n`` nonzeros and ``t`` threads fills its ``t`` consecutive
    chunks left to right, the first ``n mod t`` chunks taking ``ceil(n/t)``
    elements and the rest ``floor(n/t)``.
    """
    T = threads_per_group
    cs = assignment.chunk_size
    values = np.zeros(cs * T, dtype=REAL)
    columns = np.full(cs * T, SENTINEL, dtype=INDEX)

    threads = np.asarray(assignment.threads_per_row, dtype=INDEX)
    if len(threads) != size:
        raise InternalError("thread assignment does not match group size")
    chunk_start = np.concatenate(([0], np.cumsum(threads)[:-1]))
    lo, hi = A.row_pointers[first_row], A.row_pointers[first_row + size]
    if hi == lo:
        return values, columns

    rp = A.row_pointers[first_row: first_row + size + 1]
    local_row = np.repeat(np.arange(size), np.diff(rp))
    elem = np.arange(lo, hi) - rp[local_row]
    t = threads[local_row]
    q, rem = np.divmod(np.diff(rp)[local_row], t)
    big = rem * (q + 1)
    in_big = elem < big
    chunk = np.where(in_big, elem // (q + 1), rem + (elem - big) // np.maximum(q, 1))
    step = np.where(in_big, elem % (q + 1), (elem - big) % np.maximum(q, 1))
    if np.any(step >= cs) or np.any(chunk >= t):
        raise InternalError("row elements overflow their chunks")
    pos = step * T + chunk_start[local_row] + chunk
    values[pos] = A.values[lo:hi]
    columns[pos] = A.columns[lo:hi]
    return values, columns


@dataclass(frozen=True, eq=False)
class ArgCsrMatrix(StorageRecord):
    num_rows: int
    num_cols: int
    threads_per_group: int
    group_info: np.ndarray  # (num_groups, 4): first_row, size, offset, chunk_size
    values: np.ndarray
    columns: np.ndarray
    threads_mapping: np.ndarray

    def __post_init__(self):
        for name in ("num_rows", "num_cols", "threads_per_group"):
            object.__setattr__(self, name, int(getattr(self, name)))
        info = np.array(self.group_info, dtype=INDEX).reshape(-1, 4)
        info.setflags(write=False)
        object.__setattr__(self, "group_info", info)
        object.__setattr__(self, "values", frozen_array(self.values, REAL))
        object.__setattr__(self, "columns", frozen_array(self.columns, INDEX))
        object.__setattr__(self, "threads_mapping", frozen_array(self.threads_mapping, INDEX))
        self._validate()

    def _validate(self):
        T = self.threads_per_group
        if self.num_rows < 1 or self.num_cols < 1:
            raise DimensionError("invalid matrix dimensions")
        if T < 1:
            raise ParameterError("threads_per_group must be at least 1")
        first, size, offset, cs = self.group_info.T
        if len(first) == 0 or first[0] != 0 or np.any(first[1:] != (first + size)[:-1]) \
                or first[-1] + size[-1] != self.num_rows:
            raise ParameterError("groups must tile the row range")
        if np.any(size < 1) or np.any(size > T) or np.any(cs < 0):
            raise ParameterError("group size must lie in [1, threads_per_group]")
        if np.any(offset != np.concatenate(([0], np.cumsum(cs * T)[:-1]))):
            raise ParameterError("group offsets must be the prefix sum of chunk_size * threads_per_group")
        if len(self.values) != int((cs * T).sum()) or len(self.columns) != len(self.values):
            raise DimensionError("value/column arrays do not match group sizes")
        if len(self.threads_mapping) != self.num_rows:
            raise DimensionError("threads_mapping must have one entry per row")
        per_row = self.threads_per_row()
        if np.any(per_row < 1) or np.any(self.threads_mapping[first + size - 1] > T):
            raise ParameterError("threads_mapping must be a strictly increasing scan bounded by threads_per_group")
        group, chunk, step = self._slot_coordinates()
        if len(group):
            check_trailing_padding(self.columns, group * T + chunk, step)
        chunk_row = self._chunk_rows()
        real = self.columns != SENTINEL
        if np.any(chunk_row[group[real] * T + chunk[real]] < 0):
            raise ParameterError("free-thread chunks must hold only padding")

    @property
    def shape(self):
        return (self.num_rows, self.num_cols)

    @property
    def num_groups(self):
        return len(self.group_info)

    @property
    def groups(self) -> list[GroupInfo]:
        return [GroupInfo(*map(int, g)) for g in self.group_info]

    def threads_per_row(self) -> np.ndarray:
        """Undo the per-group inclusive scan."""
        per_row = np.diff(self.threads_mapping, prepend=0)
        first = self.group_info[:, 0]
        per_row[first] = self.threads_mapping[first]
        return per_row

    def assigned_threads(self) -> np.ndarray:
        first, size = self.group_info[:, 0], self.group_info[:, 1]
        return self.threads_mapping[first + size - 1]

    def _slot_coordinates(self):
        """Group, chunk and within-chunk step of every storage slot."""
        T = self.threads_per_group
        group = np.repeat(np.arange(self.num_groups), self.group_info[:, 3] * T)
        local = np.arange(len(self.values)) - self.group_info[group, 2]
        return group, local % T, local // T

    def _chunk_rows(self):
        """Owning row of chunk ``g * T + t``, or -1 for a free thread's chunk."""
        T = self.threads_per_group
        out = np.full(self.num_groups * T, -1, dtype=INDEX)
        per_row = self.threads_per_row()
        group_of_row = np.repeat(np.arange(self.num_groups), self.group_info[:, 1])
        local_chunk = self.threads_mapping - per_row
        owners = np.repeat(np.arange(self.num_rows), per_row)
        starts = np.repeat(group_of_row * T + local_chunk, per_row)
        within = np.arange(len(owners)) - np.repeat(np.cumsum(per_row) - per_row, per_row)
        out[starts + within] = owners
        return out

    def to_csr(self) -> CsrMatrix:
        group, chunk, _ = self._slot_coordinates()
        real = self.columns != SENTINEL
        rows = self._chunk_rows()[group[real] * self.threads_per_group + chunk[real]]
        return csr_from_arrays(self.num_rows, self.num_cols, rows, self.columns[real], self.values[real])


def argcsr_from_csr(A: CsrMatrix, threads_per_group: int = DEFAULT_THREADS_PER_GROUP,
                    desired_chunk_size: int = DEFAULT_DESIRED_CHUNK_SIZE) -> ArgCsrMatrix:
    counts = row_nnz(A)
    T = threads_per_group
    groups = partition_groups(counts, T, desired_chunk_size)
    info = np.zeros((len(groups), 4), dtype=INDEX)
    mapping = np.zeros(A.num_rows, dtype=INDEX)
    value_parts, column_parts = [], []
    offset = 0
    for g, (first, size) in enumerate(groups):
        ta = assign_threads(counts[first: first + size], T)
        mapping[first: first + size] = np.cumsum(ta.threads_per_row)
        vals, cols = layout_group(A, first, size, ta, T)
        info[g] = (first, size, offset, ta.chunk_size)
        offset += ta.chunk_size * T
        value_parts.append(vals)
        column_parts.append(cols)
    return ArgCsrMatrix(A.num_rows, A.num_cols, T, info,
                        np.concatenate(value_parts), np.concatenate(column_parts), mapping)


def chunk_entries(M: ArgCsrMatrix, group_index: int, chunk_index: int) -> list[tuple[float, int]]:
    """Stored ``(value, column)`` pairs of one chunk, padding excluded."""
    if not 0 <= group_index < M.num_groups:
        raise BoundsError(f"group {group_index} out of range [0, {M.num_groups})")
    if not 0 <= chunk_index < M.threads_per_group:
        raise BoundsError(f"chunk {chunk_index} out of range [0, {M.threads_per_group})")
    _, _, offset, cs = M.group_info[group_index]
    out = []
    for j in range(cs):
        p = offset + j * M.threads_per_group + chunk_index
        if M.columns[p] == SENTINEL:
            break
        out.append((float(M.values[p]), int(M.columns[p])))
    return out


@nb.njit(nogil=True, cache=True)
def _argcsr_groups(start, stop, T, group_info, threads_mapping, columns, values, x, y):
    partial = np.empty(T, dtype=np.float64)
    for g in range(start, stop):
        first = group_info[g, 0]
        size = group_info[g, 1]
        offset = group_info[g, 2]
        chunk_size = group_info[g, 3]
        # phase 1: one partial sum per chunk
        for t in range(T):
            s = 0.0
            p = offset + t
            for _ in range(chunk_size):
                c = columns[p]
                if c == -1:
                    break
                s += values[p] * x[c]
                p += T
            partial[t] = s
        # phase 2: every row reduces its chunk range
        for r in range(size):
            begin = 0 if r == 0 else threads_mapping[first + r - 1]
            end = threads_mapping[first + r]
            s = 0.0
            for i in range(begin, end):
                s += partial[i]
            y[first + r] = s


def spmv_argcsr(M: ArgCsrMatrix, x, workers: int = 1) -> np.ndarray:
    x = as_vector(x, M.num_cols)
    y = np.zeros(M.num_rows, dtype=REAL)
    run_blocks(_argcsr_groups, M.num_groups, workers, M.threads_per_group, M.group_info,
               M.threads_mapping, M.columns, M.values, x, y)
    return y
