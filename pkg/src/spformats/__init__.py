"""Sparse matrix storage formats for SpMV: CSR, ELLPACK, Sliced ELLPACK and adaptive row-grouped CSR."""

from .analysis import (
    BalanceStats,
    FormatStats,
    Traffic,
    TrafficModel,
    balance_stats,
    modeled_transactions,
    padding_stats,
    traffic_breakdown,
)
from .argcsr import (
    ArgCsrMatrix,
    GroupInfo,
    ThreadAssignment,
    argcsr_from_csr,
    assign_threads,
    chunk_entries,
    layout_group,
    partition_groups,
    spmv_argcsr,
)
from .core import (
    CsrMatrix,
    Triplet,
    csr_from_arrays,
    csr_from_dense,
    csr_from_triplets,
    identity,
    row_nnz,
    spmv_csr,
)
from .ellpack import (
    EllpackMatrix,
    SlicedEllpackMatrix,
    ellpack_from_csr,
    sliced_from_csr,
    spmv_ellpack,
    spmv_sliced,
)
from .errors import (
    BoundsError,
    CorrectnessError,
    DimensionError,
    FormatError,
    InternalError,
    IoError,
    ParameterError,
    ParseError,
    SparseFormatError,
    UnsupportedError,
)
from .io import read_binary, read_matrix_market, write_binary, write_matrix_market

__version__ = "0.1.0"
