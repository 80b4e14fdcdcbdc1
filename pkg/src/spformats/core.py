"""Compressed sparse row storage and the reference SpMV every other format is checked against."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numba as nb
import numpy as np

from ._parallel import run_blocks
from .errors import BoundsError, DimensionError, ParameterError

REAL = np.float64
INDEX = np.int64
SENTINEL = -1


class Triplet(NamedTuple):
    row: int
    col: int
    value: float


def frozen_array(data, dtype):
    arr = np.array(data, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


def check_trailing_padding(columns, lane_of_slot, step_of_slot):
    # A real entry must never follow a sentinel in the same lane.
    pad = columns == SENTINEL
    if not pad.any():
        return
    first_pad = np.full(int(lane_of_slot.max()) + 1, np.iinfo(INDEX).max, dtype=INDEX)
    np.minimum.at(first_pad, lane_of_slot[pad], step_of_slot[pad])
    real = ~pad
    if np.any(step_of_slot[real] > first_pad[lane_of_slot[real]]):
        raise ParameterError("padding must be trailing within each row")


class StorageRecord:
    """Field-wise equality for dataclasses holding numpy arrays.

    Arrays compare by dtype, shape and raw bytes, so ``-0.0``/``0.0`` and NaN
    payloads are distinguished and a round-trip check is truly bit-exact.
    """

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if a.dtype != b.dtype or a.shape != b.shape or a.tobytes() != b.tobytes():
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CsrMatrix(StorageRecord):
    num_rows: int
    num_cols: int
    values: np.ndarray
    columns: np.ndarray
    row_pointers: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "num_rows", int(self.num_rows))
        object.__setattr__(self, "num_cols", int(self.num_cols))
        object.__setattr__(self, "values", frozen_array(self.values, REAL))
        object.__setattr__(self, "columns", frozen_array(self.columns, INDEX))
        object.__setattr__(self, "row_pointers", frozen_array(self.row_pointers, INDEX))
        self._validate()

    def _validate(self):
        if self.num_rows < 1 or self.num_cols < 1:
            raise DimensionError(f"matrix dimensions must be positive, got {self.shape}")
        rp, cols = self.row_pointers, self.columns
        if len(rp) != self.num_rows + 1:
            raise DimensionError(f"row_pointers has length {len(rp)}, expected {self.num_rows + 1}")
        if len(self.values) != len(cols):
            raise DimensionError("values and columns differ in length")
        if rp[0] != 0 or rp[-1] != len(cols) or np.any(np.diff(rp) < 0):
            raise ParameterError("row_pointers must start at 0, be non-decreasing and end at nnz")
        if len(cols) and (cols.min() < 0 or cols.max() >= self.num_cols):
            raise BoundsError("column index out of range")
        steps = np.diff(cols)
        row_starts = rp[1:-1]
        interior = np.ones(len(steps), dtype=bool)
        interior[row_starts[(row_starts > 0) & (row_starts < len(cols))] - 1] = False
        if np.any(steps[interior] <= 0):
            raise ParameterError("column indexes must strictly increase within each row")

    @property
    def shape(self):
        return (self.num_rows, self.num_cols)

    @property
    def nnz(self):
        return int(self.row_pointers[-1])

    def row_indices(self):
        """Row index of every stored element."""
        return np.repeat(np.arange(self.num_rows, dtype=INDEX), np.diff(self.row_pointers))

    def to_triplets(self):
        rows = self.row_indices()
        return [Triplet(int(r), int(c), float(v)) for r, c, v in zip(rows, self.columns, self.values)]

    def to_dense(self):
        dense = np.zeros(self.shape, dtype=REAL)
        dense[self.row_indices(), self.columns] = self.values
        return dense


def csr_from_arrays(num_rows, num_cols, rows, cols, values):
    """Build a normalized CSR matrix from parallel coordinate arrays.

    Duplicate coordinates are summed in input order; explicit zeros stay stored.
    """
    if num_rows < 1 or num_cols < 1:
        raise DimensionError(f"matrix dimensions must be positive, got ({num_rows}, {num_cols})")
    rows = np.asarray(rows, dtype=INDEX).reshape(-1)
    cols = np.asarray(cols, dtype=INDEX).reshape(-1)
    values = np.asarray(values, dtype=REAL).reshape(-1)
    if not (len(rows) == len(cols) == len(values)):
        raise DimensionError("coordinate arrays differ in length")
    if len(rows) and (rows.min() < 0 or rows.max() >= num_rows or cols.min() < 0 or cols.max() >= num_cols):
        raise BoundsError(f"entry index outside a {num_rows}x{num_cols} matrix")

    order = np.lexsort((cols, rows))
    rows, cols, values = rows[order], cols[order], values[order]
    if len(rows):
        new_entry = np.ones(len(rows), dtype=bool)
        new_entry[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new_entry)
        values = np.add.reduceat(values, starts)
        rows, cols = rows[starts], cols[starts]
    counts = np.bincount(rows, minlength=num_rows)
    row_pointers = np.concatenate(([0], np.cumsum(counts)))
    return CsrMatrix(num_rows, num_cols, values, cols, row_pointers)


def csr_from_triplets(num_rows: int, num_cols: int, entries: Iterable) -> CsrMatrix:
    entries = list(entries)
    if entries:
        rows, cols, values = zip(*entries)
    else:
        rows, cols, values = (), (), ()
    return csr_from_arrays(num_rows, num_cols, rows, cols, values)


def csr_from_dense(dense) -> CsrMatrix:
    dense = np.asarray(dense, dtype=REAL)
    if dense.ndim != 2:
        raise DimensionError("expected a 2-D array")
    rows, cols = np.nonzero(dense)
    return csr_from_arrays(dense.shape[0], dense.shape[1], rows, cols, dense[rows, cols])


def identity(n: int) -> CsrMatrix:
    idx = np.arange(n)
    return csr_from_arrays(n, n, idx, idx, np.ones(n))


def row_nnz(A: CsrMatrix) -> np.ndarray:
    return np.diff(A.row_pointers)


def as_vector(x, length: int) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=REAL)
    if x.ndim != 1 or x.shape[0] != length:
        raise DimensionError(f"vector of shape {x.shape} does not match dimension {length}")
    return x


@nb.njit(nogil=True, cache=True)
def _csr_rows(start, stop, row_pointers, columns, values, x, y):
    for i in range(start, stop):
        s = 0.0
        for k in range(row_pointers[i], row_pointers[i + 1]):
            s += values[k] * x[columns[k]]
        y[i] = s


def spmv_csr(A: CsrMatrix, x, workers: int = 1) -> np.ndarray:
    """``y = A @ x`` summing each row in ascending storage order."""
    x = as_vector(x, A.num_cols)
    y = np.zeros(A.num_rows, dtype=REAL)
    run_blocks(_csr_rows, A.num_rows, workers, A.row_pointers, A.columns, A.values, x, y)
    return y
