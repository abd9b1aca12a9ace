from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from killing_lab import albert
from killing_lab.albert import (AlbertElement, E_point, clifford_system, det, embedded_curvature_at_E,
                                embedded_geodesic_check, even_family_basis, is_cayley_point, k_a, oct_conj,
                                oct_mul, oct_norm2, oct_unit, tangent_basis_at_E, to_ortho, trace)

_oct = st.lists(st.integers(-6, 6), min_size=8, max_size=8).map(lambda v: np.array(v, dtype=object))


@given(_oct, _oct)
def test_octonion_norm_multiplicative(a, b):
    assert oct_norm2(oct_mul(a, b)) == oct_norm2(a) * oct_norm2(b)


@given(_oct, _oct)
def test_octonion_alternative_and_conjugation(a, b):
    assert np.all(oct_mul(a, oct_mul(a, b)) == oct_mul(oct_mul(a, a), b))
    assert np.all(oct_conj(oct_mul(a, b)) == oct_mul(oct_conj(b), oct_conj(a)))


def test_octonion_units():
    one = oct_unit(0, exact=True)
    x = np.array([3, -1, 2, 0, 5, 1, 1, -2], dtype=object)
    assert np.all(oct_mul(one, x) == x)
    e1 = oct_unit(1, exact=True)
    assert np.all(oct_mul(e1, e1) == -one)


def test_clifford_relations():
    S = clifford_system()
    assert len(S) == 9
    I = np.eye(16, dtype=np.int64)
    for i in range(9):
        assert np.array_equal(S[i], S[i].T)
        for j in range(9):
            assert np.array_equal(S[i] @ S[j] + S[j] @ S[i], 2 * I * (i == j))


def test_determinant_examples():
    assert det(E_point(exact=True)) == 0
    assert det(AlbertElement.make([1, 2, 3], exact=True)) == 6


def test_cayley_point_and_tangent_space():
    E = E_point(exact=False)
    assert is_cayley_point(E)
    T = tangent_basis_at_E(exact=False)
    assert len(T) == 16
    vecs = np.array([to_ortho(V) for V in T])
    assert np.linalg.matrix_rank(vecs) == 16
    u = to_ortho(E)
    for v in vecs:
        assert np.allclose(albert.tangent_projection(u, v), v, atol=1e-12)


def test_k_a_examples():
    T = tangent_basis_at_E(exact=True)
    Y, Z = T[0], T[5]
    assert k_a(AlbertElement.make([0, 0, 0], exact=True), Y, Z) == 0
    with pytest.raises(ValueError):
        k_a(AlbertElement.make([1, 0, 0]), Y, Z)
    fam = even_family_basis()
    assert len(fam) == 10
    assert all(trace(A) == 0 for A in fam)
    assert np.linalg.matrix_rank(np.array([to_ortho(A) for A in fam], dtype=float)) == 10


def test_embedded_check_zero_and_metric():
    rng = np.random.default_rng(1)
    X0 = albert.random_cayley_point(rng)
    V0 = albert.random_tangent(X0, rng)
    assert embedded_geodesic_check(AlbertElement(np.zeros(27)), X0, V0, s_max=1.0) == 0
    assert embedded_geodesic_check(AlbertElement(np.zeros(27)), X0, V0, s_max=np.pi, quantity="metric") < 1e-9
    _, U, _ = albert.geodesic(X0, V0, np.pi, 2000)
    assert is_cayley_point(albert.from_ortho(U[-1]), tol=1e-8)


def test_embedded_curvature_spectrum():
    R = embedded_curvature_at_E()
    rng = np.random.default_rng(2)
    X = rng.standard_normal(16)
    X /= np.linalg.norm(X)
    J = np.einsum("abcd,b,c->da", R, X, X)
    ev = np.sort(np.linalg.eigvalsh((J + J.T) / 2))
    assert abs(ev[0]) < 1e-9
    low = ev[1]
    assert low > 0
    assert np.allclose(ev[1:9], low, rtol=1e-8) and np.allclose(ev[9:], 4 * low, rtol=1e-8)
