import numpy as np
import pytest

from corpus import dense_oracle, e8, random_matrix, rel_err
from spformats import (
    DimensionError,
    EllpackMatrix,
    ParameterError,
    csr_from_triplets,
    ellpack_from_csr,
    identity,
    sliced_from_csr,
    spmv_csr,
    spmv_ellpack,
    spmv_sliced,
)


def padded(M):
    return int(np.count_nonzero(M.columns == -1))


def test_ellpack_e8_padding():
    M = ellpack_from_csr(e8())
    assert M.width == 8
    assert len(M.values) == 64
    assert padded(M) == 49


def test_ellpack_columnwise_layout():
    M = ellpack_from_csr(e8())
    # element j of row r sits at j * num_rows + r
    assert M.columns[0 * 8 + 7] == 0
    assert M.columns[5 * 8 + 7] == 5
    assert M.columns[1 * 8 + 0] == -1
    assert M.values[1 * 8 + 0] == 0.0


def test_ellpack_identity_no_padding():
    M = ellpack_from_csr(identity(5))
    assert M.width == 1 and padded(M) == 0


def test_ellpack_all_zero_matrix():
    A = csr_from_triplets(3, 2, [])
    M = ellpack_from_csr(A)
    assert M.width == 0 and len(M.values) == 0
    assert spmv_ellpack(M, np.ones(2)).tolist() == [0.0, 0.0, 0.0]
    assert M.to_csr() == A


def test_ellpack_rejects_interior_padding():
    with pytest.raises(ParameterError):
        EllpackMatrix(1, 2, 2, [0.0, 1.0], [-1, 1])


@pytest.mark.parametrize("seed", range(5))
def test_ellpack_round_trip_40(seed):
    A = random_matrix(np.random.default_rng(seed), 40, 40)
    assert ellpack_from_csr(A).to_csr() == A


def test_spmv_ellpack_examples():
    x = np.array([2.0, -1.0, 0.5, 4.0])
    np.testing.assert_array_equal(spmv_ellpack(ellpack_from_csr(identity(4)), x), x)
    assert spmv_ellpack(ellpack_from_csr(e8()), np.ones(8)).tolist() == [1] * 7 + [8]
    with pytest.raises(DimensionError):
        spmv_ellpack(ellpack_from_csr(identity(4)), np.ones(3))


def test_spmv_ellpack_matches_csr_100():
    rng = np.random.default_rng(11)
    for _ in range(100):
        A = random_matrix(rng)
        x = rng.uniform(-1, 1, A.num_cols)
        assert rel_err(spmv_ellpack(ellpack_from_csr(A), x), spmv_csr(A, x)) <= 1e-12


def test_sliced_e8_slice4():
    M = sliced_from_csr(e8(), 4)
    assert M.slice_widths.tolist() == [1, 8]
    assert M.slice_offsets.tolist() == [0, 4]
    assert padded(M) == (4 * 1 - 4) + (4 * 8 - 11) == 21


def test_sliced_single_slice_equals_ellpack_shape():
    S = sliced_from_csr(e8(), 8)
    E = ellpack_from_csr(e8())
    assert S.slice_widths.tolist() == [E.width]
    np.testing.assert_array_equal(S.columns, E.columns)
    np.testing.assert_array_equal(S.values, E.values)


def test_sliced_identity6():
    M = sliced_from_csr(identity(6), 4)
    assert M.slice_widths.tolist() == [1, 1]
    assert padded(M) == 0
    x = np.arange(6.0)
    np.testing.assert_array_equal(spmv_sliced(M, x), x)


def test_sliced_ragged_last_slice_uses_true_row_count():
    M = sliced_from_csr(identity(6), 4)
    assert M.rows_per_slice().tolist() == [4, 2]
    assert len(M.values) == 6


def test_sliced_default_size_and_bad_size():
    assert sliced_from_csr(identity(3)).slice_size == 32
    with pytest.raises(ParameterError):
        sliced_from_csr(identity(3), 0)


def test_spmv_sliced_e8():
    assert spmv_sliced(sliced_from_csr(e8(), 4), np.ones(8)).tolist() == [1] * 7 + [8]


@pytest.mark.parametrize("slice_size", [1, 2, 4, 32])
def test_spmv_sliced_matches_csr_100(slice_size):
    rng = np.random.default_rng(slice_size)
    for _ in range(100):
        A = random_matrix(rng)
        x = rng.uniform(-1, 1, A.num_cols)
        M = sliced_from_csr(A, slice_size)
        assert rel_err(spmv_sliced(M, x), spmv_csr(A, x)) <= 1e-12
        assert M.to_csr() == A


@pytest.mark.parametrize("seed", range(10))
def test_slicing_never_adds_padding(seed):
    A = random_matrix(np.random.default_rng(50 + seed))
    full = padded(ellpack_from_csr(A))
    for s in range(1, A.num_rows + 1, max(1, A.num_rows // 15)):
        assert padded(sliced_from_csr(A, s)) <= full


@pytest.mark.parametrize("seed", range(5))
def test_agree_with_dense_oracle_200(seed):
    rng = np.random.default_rng(300 + seed)
    A = random_matrix(rng, 200, 200)
    x = rng.uniform(-1, 1, 200)
    ref = dense_oracle(A.to_dense(), x)
    assert rel_err(spmv_ellpack(ellpack_from_csr(A), x), ref) <= 1e-12
    assert rel_err(spmv_sliced(sliced_from_csr(A, 32), x), ref) <= 1e-12


def test_workers_bit_identical():
    rng = np.random.default_rng(9)
    A = random_matrix(rng, 200, 100)
    x = rng.uniform(-1, 1, 100)
    E, S = ellpack_from_csr(A), sliced_from_csr(A, 8)
    assert spmv_ellpack(E, x, workers=1).tobytes() == spmv_ellpack(E, x, workers=3).tobytes()
    assert spmv_sliced(S, x, workers=1).tobytes() == spmv_sliced(S, x, workers=3).tobytes()
