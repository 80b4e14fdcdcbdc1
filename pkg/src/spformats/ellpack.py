"""ELLPACK and Sliced ELLPACK (row-grouped CSR) storage, both laid out columnwise.

Padding slots carry value ``0.0`` and column ``-1``; padding is always trailing
within a row, so the kernels stop at the first sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass

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
from .errors import DimensionError, ParameterError

DEFAULT_SLICE_SIZE = 32


@dataclass(frozen=True, eq=False)
class EllpackMatrix(StorageRecord):
    num_rows: int
    num_cols: int
    width: int
    values: np.ndarray
    columns: np.ndarray

    def __post_init__(self):
        for name in ("num_rows", "num_cols", "width"):
            object.__setattr__(self, name, int(getattr(self, name)))
        object.__setattr__(self, "values", frozen_array(self.values, REAL))
        object.__setattr__(self, "columns", frozen_array(self.columns, INDEX))
        if self.num_rows < 1 or self.num_cols < 1 or self.width < 0:
            raise DimensionError("invalid ELLPACK dimensions")
        if len(self.values) != self.num_rows * self.width or len(self.columns) != len(self.values):
            raise DimensionError("ELLPACK arrays must hold num_rows * width slots")
        slots = np.arange(len(self.columns))
        check_trailing_padding(self.columns, slots % self.num_rows, slots // self.num_rows)

    @property
    def shape(self):
        return (self.num_rows, self.num_cols)

    def to_csr(self) -> CsrMatrix:
        slots = np.flatnonzero(self.columns != SENTINEL)
        return csr_from_arrays(self.num_rows, self.num_cols, slots % self.num_rows,
                               self.columns[slots], self.values[slots])


@dataclass(frozen=True, eq=False)
class SlicedEllpackMatrix(StorageRecord):
    num_rows: int
    num_cols: int
    slice_size: int
    slice_widths: np.ndarray
    slice_offsets: np.ndarray
    values: np.ndarray
    columns: np.ndarray

    def __post_init__(self):
        for name in ("num_rows", "num_cols", "slice_size"):
            object.__setattr__(self, name, int(getattr(self, name)))
        for name in ("slice_widths", "slice_offsets", "columns"):
            object.__setattr__(self, name, frozen_array(getattr(self, name), INDEX))
        object.__setattr__(self, "values", frozen_array(self.values, REAL))
        if self.num_rows < 1 or self.num_cols < 1:
            raise DimensionError("invalid matrix dimensions")
        if self.slice_size < 1:
            raise ParameterError("slice_size must be at least 1")
        if len(self.slice_widths) != self.num_slices or len(self.slice_offsets) != self.num_slices:
            raise DimensionError("one width and one offset per slice expected")
        sizes = self.slice_widths * self.rows_per_slice()
        if np.any(self.slice_offsets != np.concatenate(([0], np.cumsum(sizes)[:-1]))):
            raise ParameterError("slice_offsets must be the exclusive prefix sum of slice sizes")
        if len(self.values) != sizes.sum() or len(self.columns) != len(self.values):
            raise DimensionError("value/column arrays do not match slice sizes")
        lane, step = self._slot_coordinates()
        if len(lane):
            check_trailing_padding(self.columns, lane, step)

    @property
    def shape(self):
        return (self.num_rows, self.num_cols)

    @property
    def num_slices(self):
        return -(-self.num_rows // self.slice_size)

    def rows_per_slice(self):
        """Row count of every slice; the last one may be ragged."""
        h = np.full(self.num_slices, self.slice_size, dtype=INDEX)
        h[-1] = self.num_rows - self.slice_size * (self.num_slices - 1)
        return h

    def _slot_coordinates(self):
        """Global row and within-row step of every slot."""
        h = self.rows_per_slice()
        sizes = self.slice_widths * h
        slice_of_slot = np.repeat(np.arange(self.num_slices), sizes)
        local = np.arange(len(self.values)) - self.slice_offsets[slice_of_slot]
        hs = h[slice_of_slot]
        row = slice_of_slot * self.slice_size + local % hs
        return row, local // hs

    def to_csr(self) -> CsrMatrix:
        row, _ = self._slot_coordinates()
        real = self.columns != SENTINEL
        return csr_from_arrays(self.num_rows, self.num_cols, row[real], self.columns[real], self.values[real])


def ellpack_from_csr(A: CsrMatrix) -> EllpackMatrix:
    counts = row_nnz(A)
    width = int(counts.max()) if len(counts) else 0
    rows = A.row_indices()
    step = np.arange(A.nnz) - A.row_pointers[rows]
    pos = step * A.num_rows + rows
    values = np.zeros(A.num_rows * width, dtype=REAL)
    columns = np.full(A.num_rows * width, SENTINEL, dtype=INDEX)
    values[pos] = A.values
    columns[pos] = A.columns
    return EllpackMatrix(A.num_rows, A.num_cols, width, values, columns)


def sliced_from_csr(A: CsrMatrix, slice_size: int = DEFAULT_SLICE_SIZE) -> SlicedEllpackMatrix:
    if slice_size < 1:
        raise ParameterError(f"slice_size must be at least 1, got {slice_size}")
    counts = row_nnz(A)
    num_slices = -(-A.num_rows // slice_size)
    padded = np.zeros(num_slices * slice_size, dtype=INDEX)
    padded[: A.num_rows] = counts
    widths = padded.reshape(num_slices, slice_size).max(axis=1)
    h = np.full(num_slices, slice_size, dtype=INDEX)
    h[-1] = A.num_rows - slice_size * (num_slices - 1)
    sizes = widths * h
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(INDEX)

    rows = A.row_indices()
    sl = rows // slice_size
    step = np.arange(A.nnz) - A.row_pointers[rows]
    pos = offsets[sl] + step * h[sl] + rows % slice_size
    total = int(sizes.sum())
    values = np.zeros(total, dtype=REAL)
    columns = np.full(total, SENTINEL, dtype=INDEX)
    values[pos] = A.values
    columns[pos] = A.columns
    return SlicedEllpackMatrix(A.num_rows, A.num_cols, slice_size, widths, offsets, values, columns)


@nb.njit(nogil=True, cache=True)
def _ellpack_rows(start, stop, n, width, columns, values, x, y):
    for r in range(start, stop):
        s = 0.0
        for j in range(width):
            c = columns[j * n + r]
            if c == -1:
                break
            s += values[j * n + r] * x[c]
        y[r] = s


@nb.njit(nogil=True, cache=True)
def _sliced_slices(start, stop, n, slice_size, widths, offsets, columns, values, x, y):
    for sl in range(start, stop):
        first = sl * slice_size
        h = min(slice_size, n - first)
        off = offsets[sl]
        for r in range(h):
            s = 0.0
            for j in range(widths[sl]):
                p = off + j * h + r
                c = columns[p]
                if c == -1:
                    break
                s += values[p] * x[c]
            y[first + r] = s


def spmv_ellpack(M: EllpackMatrix, x, workers: int = 1) -> np.ndarray:
    x = as_vector(x, M.num_cols)
    y = np.zeros(M.num_rows, dtype=REAL)
    run_blocks(_ellpack_rows, M.num_rows, workers, M.num_rows, M.width, M.columns, M.values, x, y)
    return y


def spmv_sliced(M: SlicedEllpackMatrix, x, workers: int = 1) -> np.ndarray:
    x = as_vector(x, M.num_cols)
    y = np.zeros(M.num_rows, dtype=REAL)
    run_blocks(_sliced_slices, M.num_slices, workers, M.num_rows, M.slice_size,
               M.slice_widths, M.slice_offsets, M.columns, M.values, x, y)
    return y
