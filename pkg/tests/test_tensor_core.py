import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from killing_lab.tensor_core import (BianchiTensor, SymPairTensor, SymTensorRankD, bianchi_basis, evaluate,
                                     evaluate_slots, k2_space_dim, multisets, symmetrize, tensor_from_json,
                                     tensor_to_json)


def test_k2_space_dim_values():
    assert k2_space_dim(16) == 5440
    assert k2_space_dim(1) == 0
    assert k2_space_dim(4) == 20


def _bruteforce_bianchi_dim(n):
    """Nullspace dimension of the constraint T(X,X,X,P) = 0 over pair-symmetric tensors, via sympy."""
    ps = multisets(n, 2)
    unknowns = [(a, b) for a in ps for b in ps]
    col = {u: i for i, u in enumerate(unknowns)}
    rows = []
    # coefficient of x_i x_j x_k p_l in sum over orderings of T(X,X,X,P)
    for trip in multisets(n, 3):
        for l in range(n):
            r = [0] * len(unknowns)
            for perm in set(itertools.permutations(trip)):
                a = tuple(sorted(perm[:2]))
                b = tuple(sorted((perm[2], l)))
                r[col[(a, b)]] += 1
            rows.append(r)
    M = sympy.Matrix(rows)
    return len(unknowns) - M.rank()


@pytest.mark.parametrize("n,expected", [(2, 1), (3, 6)])
def test_bianchi_basis_matches_bruteforce(n, expected):
    assert _bruteforce_bianchi_dim(n) == expected
    assert len(bianchi_basis(n)) == expected


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_bianchi_basis_length(n):
    assert len(bianchi_basis(n)) == n * n * (n * n - 1) // 12


def test_bianchi_basis_kills_xxxp():
    rng = np.random.default_rng(1)
    for n in (2, 3, 4):
        for B in bianchi_basis(n):
            for _ in range(100 // n):
                X = [int(v) for v in rng.integers(-5, 6, n)]
                P = [int(v) for v in rng.integers(-5, 6, n)]
                assert evaluate_slots(B, [X, X, X, P]) == 0


def test_bianchi_cyclic_and_pair_exchange():
    rng = np.random.default_rng(2)
    n = 4
    for B in bianchi_basis(n):
        A = B.full_array(exact=True)
        assert np.all(A + A.transpose(1, 2, 0, 3) + A.transpose(2, 0, 1, 3) == 0)
        for _ in range(5):
            X, Y, Z, P = ([int(v) for v in rng.integers(-4, 5, n)] for _ in range(4))
            assert evaluate_slots(B, [P, X, Y, Z]) == evaluate_slots(B, [Y, Z, P, X])


def test_eval_zero_and_linearity():
    B = BianchiTensor(3, [1, -2, 0, 3, 1, 5])
    P = [1, 2, 3]
    assert evaluate(B, [0, 0, 0], P) == 0
    X = [2, -1, 4]
    assert evaluate(B.scaled(Fraction(7, 3)), X, P) == Fraction(7, 3) * evaluate(B, X, P)


def test_eval_matches_fourfold_loop():
    B = bianchi_basis(2)[0]
    X, P = (1, 0), (0, 1)
    A = B.full_array(exact=True)
    naive = sum(A[i, j, k, l] * X[i] * X[j] * P[k] * P[l]
                for i in range(2) for j in range(2) for k in range(2) for l in range(2))
    assert evaluate(B, list(X), list(P)) == naive
    assert naive != 0


def _random_tensor(rng, n, order):
    T = np.empty((n,) * order, dtype=object)
    for idx in np.ndindex(T.shape):
        T[idx] = Fraction(int(rng.integers(-3, 4)))
    return T


def test_symmetrize_idempotent_and_fixed_points():
    rng = np.random.default_rng(3)
    T = _random_tensor(rng, 3, 4)
    S = symmetrize(T, 2, 2)
    assert np.all(symmetrize(S, 2, 2) == S)
    u, v = np.array([1, 2, -1], dtype=object), np.array([0, 3, 1], dtype=object)
    R = np.einsum("i,j,k,l->ijkl", u, u, v, v)
    assert np.all(symmetrize(R, 2, 2) == R)


def _sym_matrix(n, a, b):
    """Matrix of S_{a,b} on (R^n)^{a+b}, scaled by a! b! to integers."""
    N = n ** (a + b)
    M = np.zeros((N, N), dtype=np.int64)
    for flat in range(N):
        e = np.zeros(N, dtype=np.int64)
        e[flat] = 1
        T = e.reshape((n,) * (a + b))
        acc = np.zeros_like(T)
        for pa in itertools.permutations(range(a)):
            for pb in itertools.permutations(range(a, a + b)):
                acc = acc + np.transpose(T, pa + pb)
        M[:, flat] = acc.ravel()
    return M


def test_young_lemma_bruteforce():
    # ker S_{a',b'} S_{a,b} = ker S_{a,b} for b <= a' <= a, checked by ranks
    n, a, b = 3, 3, 1
    S = sympy.Matrix(_sym_matrix(n, a, b))
    r = S.rank()
    for a2 in range(b, a + 1):
        S2 = sympy.Matrix(_sym_matrix(n, a2, a + b - a2))
        assert (S2 * S).rank() == r


def test_young_lemma_random_tensors():
    rng = np.random.default_rng(4)
    for _ in range(5):
        T = _random_tensor(rng, 3, 4)
        S = symmetrize(T, 3, 1)
        if np.any(S != 0):
            for a2 in (1, 2, 3):
                assert np.any(symmetrize(S, a2, 4 - a2) != 0)


def test_topslot_swap_sign(get_topslot):
    # tensors with K(X^{d+1}, P^{d-1}) = 0 satisfy K(P^d, X^d) = (-1)^d K(X^d, P^d)
    rng = np.random.default_rng(5)
    for sid, d in (("sphere:2", 3), ("cpm:2", 2), ("sphere:3", 3)):
        _, sol = get_topslot(sid, d)
        for K in sol.tensors()[:5]:
            n = K.n
            for _ in range(3):
                X = [int(v) for v in rng.integers(-4, 5, n)]
                P = [int(v) for v in rng.integers(-4, 5, n)]
                assert evaluate(K, P, X) == (-1) ** d * evaluate(K, X, P)


@given(st.lists(st.integers(-9, 9), min_size=6, max_size=6))
def test_json_roundtrip(coords):
    B = BianchiTensor(3, coords)
    S = B.to_sympair()
    back = tensor_from_json(tensor_to_json(B))
    assert back == S


def test_json_rejects_noncanonical():
    bad = json.dumps({"n": 2, "entries": [[1, 0, 0, 0, "1"]]})
    with pytest.raises(ValueError):
        tensor_from_json(bad)
    with pytest.raises(ValueError):
        tensor_from_json(json.dumps({"n": 2, "entries": [[0, 0, 0, 2, "1"]]}))
    with pytest.raises(ValueError):
        tensor_from_json(json.dumps({"entries": []}))


def test_sympair_canonical_index_count():
    n = 4
    assert SymPairTensor(n).size == (n * (n + 1) // 2) ** 2
    with pytest.raises(ValueError):
        SymPairTensor(n, {(1, 0, 0, 0): 1})


def test_bianchi_rejects_non_member():
    T = SymPairTensor(2, {(0, 0, 0, 0): 1})
    with pytest.raises(ValueError):
        BianchiTensor.from_sympair(T)


def test_symtensor_vector_roundtrip():
    T = SymTensorRankD(3, 3, {((0, 1, 2), (0, 0, 1)): Fraction(1, 2), ((2, 2, 2), (0, 1, 1)): -3})
    assert SymTensorRankD.from_vector(3, 3, T.to_vector()) == T
