import numpy as np
import pytest

from corpus import dense_oracle, e8, random_matrix, rel_err
from spformats import (
    BoundsError,
    CsrMatrix,
    DimensionError,
    ParameterError,
    Triplet,
    csr_from_dense,
    csr_from_triplets,
    identity,
    row_nnz,
    spmv_csr,
)


def test_identity_triplets():
    A = csr_from_triplets(3, 3, [(0, 0, 1), (1, 1, 1), (2, 2, 1)])
    assert A.row_pointers.tolist() == [0, 1, 2, 3]
    assert A.columns.tolist() == [0, 1, 2]


def test_e8_structure():
    A = e8()
    assert A.row_pointers.tolist() == [0, 1, 2, 3, 4, 5, 6, 7, 15]
    assert A.nnz == 15
    assert row_nnz(A).tolist() == [1, 1, 1, 1, 1, 1, 1, 8]


def test_duplicates_sum():
    A = csr_from_triplets(1, 1, [(0, 0, 1.0), (0, 0, 2.0)])
    assert A.nnz == 1
    assert A.values.tolist() == [3.0]


def test_explicit_zero_kept():
    A = csr_from_triplets(2, 2, [(0, 1, 0.0), (1, 0, 2.0)])
    assert A.nnz == 2
    assert A.values.tolist() == [0.0, 2.0]


def test_unsorted_input_is_sorted_within_rows():
    A = csr_from_triplets(2, 4, [(1, 3, 1.0), (0, 2, 2.0), (1, 0, 3.0), (0, 1, 4.0)])
    assert A.columns.tolist() == [1, 2, 0, 3]
    assert A.values.tolist() == [4.0, 2.0, 3.0, 1.0]


def test_row_nnz_with_empty_row():
    assert row_nnz(csr_from_triplets(2, 2, [(0, 1, 5.0)])).tolist() == [1, 0]
    assert row_nnz(identity(3)).tolist() == [1, 1, 1]


@pytest.mark.parametrize("entry", [(2, 0, 1.0), (0, 2, 1.0), (-1, 0, 1.0)])
def test_out_of_bounds(entry):
    with pytest.raises(BoundsError):
        csr_from_triplets(2, 2, [entry])


@pytest.mark.parametrize("shape", [(0, 3), (3, 0)])
def test_zero_dimension(shape):
    with pytest.raises(DimensionError):
        csr_from_triplets(*shape, [])


def test_constructor_rejects_unsorted_columns():
    with pytest.raises(ParameterError):
        CsrMatrix(1, 3, [1.0, 1.0], [2, 0], [0, 2])


def test_constructor_rejects_bad_row_pointers():
    with pytest.raises(ParameterError):
        CsrMatrix(2, 2, [1.0], [0], [0, 2, 1])
    with pytest.raises(DimensionError):
        CsrMatrix(2, 2, [1.0], [0], [0, 1])


def test_arrays_are_read_only():
    A = identity(3)
    with pytest.raises(ValueError):
        A.values[0] = 2.0


def test_spmv_identity():
    x = np.array([1.5, -2.0, 3.25, 0.0])
    np.testing.assert_array_equal(spmv_csr(identity(4), x), x)


def test_spmv_e8_ones():
    assert spmv_csr(e8(), np.ones(8)).tolist() == [1, 1, 1, 1, 1, 1, 1, 8]


def test_spmv_dimension_mismatch():
    with pytest.raises(DimensionError):
        spmv_csr(identity(3), np.ones(4))


def test_spmv_random_50():
    rng = np.random.default_rng(1)
    A = random_matrix(rng, 50, 50, density=0.1)
    x = rng.uniform(-1, 1, 50)
    assert rel_err(spmv_csr(A, x), dense_oracle(A.to_dense(), x)) <= 1e-13


@pytest.mark.parametrize("seed", range(20))
def test_spmv_matches_dense_up_to_64(seed):
    rng = np.random.default_rng(seed)
    A = random_matrix(rng, int(rng.integers(1, 65)), int(rng.integers(1, 65)))
    x = rng.uniform(-1, 1, A.num_cols)
    y = spmv_csr(A, x)
    assert y.shape == (A.num_rows,)
    assert rel_err(y, dense_oracle(A.to_dense(), x)) <= 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_triplet_round_trip_and_nnz_sum(seed):
    A = random_matrix(np.random.default_rng(100 + seed))
    trips = A.to_triplets()
    assert all(isinstance(t, Triplet) for t in trips)
    assert csr_from_triplets(A.num_rows, A.num_cols, trips) == A
    assert row_nnz(A).sum() == A.nnz


def test_dense_round_trip():
    d = np.array([[0.0, 2.0], [3.0, 0.0], [0.0, 0.0]])
    np.testing.assert_array_equal(csr_from_dense(d).to_dense(), d)


def test_workers_do_not_change_bits():
    rng = np.random.default_rng(5)
    A = random_matrix(rng, 200, 150)
    x = rng.uniform(-1, 1, 150)
    assert spmv_csr(A, x, workers=1).tobytes() == spmv_csr(A, x, workers=4).tobytes()
