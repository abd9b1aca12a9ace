import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from killing_lab.linalg import (SparseIntMatrix, bareiss_rank, dedup_rows, float_rank, residual,
                                nullspace, rank_modular, read_triplets, span_rank, write_triplets)


def _dense_rank_sympy(A):
    import sympy
    return sympy.Matrix(A.tolist()).rank()


def test_zero_matrix():
    M = SparseIntMatrix.from_dense(np.zeros((4, 7), dtype=np.int64))
    assert rank_modular(M) == 0
    assert nullspace(M).dim == 7


def test_identity_block():
    M = SparseIntMatrix.from_dense(np.eye(5, dtype=np.int64))
    res = nullspace(M)
    assert res.dim == 0 and res.basis.nrows == 0


def test_single_row_nullspace():
    res = nullspace(SparseIntMatrix.from_dense(np.array([[1, 1]])))
    v = res.basis.to_dense()[0]
    assert res.dim == 1 and (list(v) == [1, -1] or list(v) == [-1, 1])


def test_random_rank_vs_bareiss():
    rng = np.random.default_rng(0)
    for r in (10, 35, 50):
        A = rng.integers(-20, 21, (50, r)) @ rng.integers(-20, 21, (r, 80))
        M = SparseIntMatrix.from_dense(A)
        assert rank_modular(M) == bareiss_rank(A.tolist()) == r


@given(hnp.arrays(np.int64, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.integers(-3, 3)))
def test_rank_and_nullspace_property(A):
    M = SparseIntMatrix.from_dense(A)
    r = bareiss_rank(A.tolist())
    assert rank_modular(M) == r
    res = nullspace(M)
    assert res.dim == A.shape[1] - r
    if res.dim:
        B = res.basis.to_dense().astype(object)
        assert not np.any(A.astype(object) @ B.T)
        assert _dense_rank_sympy(B) == res.dim


def test_large_entries_nullspace():
    # entries beyond a single prime force rational reconstruction over several primes
    rng = np.random.default_rng(1)
    A = rng.integers(-10**6, 10**6, (12, 15)).astype(object)
    A[11] = A[0] * 3 - A[5] * 7
    M = SparseIntMatrix.from_dense(A)
    res = nullspace(M)
    assert res.dim == 15 - _dense_rank_sympy(A)
    assert not np.any(A @ res.basis.to_dense().astype(object).T)


def test_span_rank_duplicates():
    rng = np.random.default_rng(2)
    vecs = [rng.integers(-5, 6, 9) for _ in range(5)]
    assert span_rank(vecs + vecs) == span_rank(vecs) == 5


def test_float_rank_smoke():
    rng = np.random.default_rng(3)
    A = rng.integers(-5, 6, (30, 6)) @ rng.integers(-5, 6, (6, 40))
    assert float_rank(SparseIntMatrix.from_dense(A)) == 6


def test_dedup_rows_keeps_rank():
    A = np.array([[1, 2, 0], [2, 4, 0], [0, 1, 1], [0, -3, -3], [1, 2, 0]])
    M = SparseIntMatrix.from_dense(A)
    D = dedup_rows(M)
    assert D.nrows == 2
    assert rank_modular(D) == rank_modular(M)


def test_residual():
    A = np.array([[1, 0, 1], [0, 1, 1]])
    M = SparseIntMatrix.from_dense(A)
    assert not np.any(residual(M, [1, 1, -1]))
    assert list(residual(M, [1, 0, 0])) == [1, 0]


def test_triplet_roundtrip(tmp_path):
    A = np.array([[0, 3, 0], [-2, 0, 10**20]], dtype=object)
    M = SparseIntMatrix.from_dense(A)
    p = tmp_path / "m.txt"
    write_triplets(M, p)
    assert np.array_equal(read_triplets(p).to_dense(), M.to_dense())


def test_deterministic_seed():
    rng = np.random.default_rng(4)
    A = rng.integers(-3, 4, (10, 20))
    M = SparseIntMatrix.from_dense(A)
    a, b = nullspace(M, seed=5), nullspace(M, seed=5)
    assert np.array_equal(a.basis.to_dense(), b.basis.to_dense())
