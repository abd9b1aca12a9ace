import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from killing_lab import resolve
from killing_lab.catalog import quat_left, quat_right
from killing_lab.hpm import (bracket_relation_holds, family_span_dim, hopf_kernel_basis, hp2_reduction_check,
                             integer_array, is_sp_type, is_v_type, isotropy_basis, lr_norm_identity,
                             property_one, quaternion_structure, random_horizontal_pair, sp1_invariant, sp_basis,
                             t1, t2, topslot_generators, v_basis)
from killing_lab.linalg import span_rank
from killing_lab.tensor_core import SymPairTensor, evaluate, in_bianchi_subspace


@pytest.mark.parametrize("k", [1, 2, 3])
def test_basis_counts_and_types(k):
    J = quaternion_structure(k)
    sp, V = sp_basis(k), v_basis(k)
    assert len(sp) == 3 * k + 4 * k * (k - 1) // 2
    assert len(V) == k + 4 * k * (k - 1) // 2
    assert all(is_sp_type(A, J) for A in sp)
    assert all(is_v_type(S, J) for S in V)
    assert span_rank([A.ravel() for A in sp]) == len(sp)
    assert span_rank([S.ravel() for S in V]) == len(V)


def test_quaternion_relations():
    J1, J2, J3 = quaternion_structure(2)
    I = np.eye(8, dtype=np.int64)
    for Ja in (J1, J2, J3):
        assert np.array_equal(Ja @ Ja, -I)
    assert np.array_equal(J1 @ J2, J3)


def test_t1_zero_and_validation():
    Z = np.zeros((8, 8), dtype=np.int64)
    assert not t1(Z, Z).coeffs
    with pytest.raises(ValueError):
        t1(np.eye(8, dtype=np.int64), Z)


def test_t2_identity():
    n = 8
    I = np.eye(n, dtype=np.int64)
    T = t2(I, I)
    J = quaternion_structure(2)
    rng = np.random.default_rng(0)
    for _ in range(5):
        X = [int(v) for v in rng.integers(-3, 4, n)]
        P = [int(v) for v in rng.integers(-3, 4, n)]
        direct = sum(int(np.array(P) @ Ja @ np.array(X)) ** 2 for Ja in J)
        assert evaluate(T, X, P) == direct


def test_hopf_kernel():
    basis = hopf_kernel_basis(2)
    assert len(basis) == 15
    rows = []
    for T in basis:
        den = 1
        for c in T.coeffs.values():
            den = den * c.denominator // np.gcd(den, c.denominator)
        rows.append([int(c * den) for c in T.to_vector()])
    assert span_rank(rows) == 15
    rng = np.random.default_rng(1)
    for _ in range(10):
        X, P = random_horizontal_pair(2, rng)
        assert all(evaluate(T, X, P) == 0 for T in basis)


def test_hp2_reduction_examples():
    assert hp2_reduction_check((1, 1, 1))
    assert hp2_reduction_check((1, 0, 0))


@given(st.tuples(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4)))
def test_hp2_reduction_random(a):
    assert hp2_reduction_check(a)


def test_sp1_invariance_of_ambient_families():
    m = 1
    n = 4 * (m + 1)
    A = sp_basis(m + 1)
    V = v_basis(m + 1)
    I = np.eye(n, dtype=np.int64)
    samples = [t1(A[i], A[j]) for i, j in [(0, 0), (0, 3), (2, 5), (4, 6)]]
    samples += [t2(V[i], V[j]) for i, j in [(0, 0), (0, 2), (1, 4)]] + [t2(S, I) for S in V[:3]]
    for T in samples:
        assert sp1_invariant(T)
        assert property_one(T)
        assert in_bianchi_subspace(T)


def test_bracket_relation_random():
    rng = np.random.default_rng(2)
    n = 8
    for _ in range(3):
        T = rng.integers(-3, 4, (n,) * 4)
        T = T + T.transpose(1, 0, 2, 3)
        T = T + T.transpose(0, 1, 3, 2)
        assert bracket_relation_holds(T)


def test_property_one_fails_off_bianchi():
    T = SymPairTensor(8, {(0, 0, 0, 0): 1})
    assert not property_one(T)
    assert not in_bianchi_subspace(T)


@given(st.lists(st.integers(-5, 5), min_size=4, max_size=4), st.lists(st.integers(-5, 5), min_size=4, max_size=4))
def test_left_right_norm_identity(z, w):
    assert lr_norm_identity(z, w)


def test_left_and_right_agree_on_unit():
    e = np.array([1, 0, 0, 0])
    for a in (1, 2, 3):
        assert np.array_equal(quat_left(a) @ e, quat_right(a) @ e)


@pytest.mark.parametrize("m", [2, 3])
def test_isotropy_basis_matches_model(m):
    M = resolve(f"hpm:{m}")
    H = isotropy_basis(m)
    J = quaternion_structure(m)
    for Ja, L in zip(J, H[-3:]):
        assert np.array_equal(L, -Ja)
    assert all(M.isotropy_invariant(A) for A in H)
    assert span_rank([A.ravel() for A in H]) == M.isotropy_dim


def test_topslot_generators_solve(get_quadratic):
    _, sol = get_quadratic("hpm:2")
    gens = topslot_generators(2)
    assert {tag for tag, _ in gens} == {"i", "ii", "iii", "iv"}
    rows = [T for _, T in gens]
    from killing_lab.hpm import _integer_rows
    assert not np.any(sol.system.matrix.matvec_exact(np.array(_integer_rows(rows), dtype=object).T))
    assert family_span_dim(2) == sol.dim == 91
