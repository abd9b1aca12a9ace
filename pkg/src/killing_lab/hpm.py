"""Quaternionic tensor families on R^{4m+4} and top-slot generators on T_o HP^m.

R^{4k} is identified with H^k, J_1, J_2, J_3 = J_1 J_2 act by left
multiplication by i, j, k in every block, and sp(k) consists of block
matrices of right multiplications.  All tensors are exact SymPairTensor or
BianchiTensor objects, stored through their momentum polynomial T(X,X,P,P).
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import gcd

import numpy as np

from .catalog import QuaternionStructure, quat_left, quat_right, sp_generators
from .linalg import span_rank
from .tensor_core import BianchiTensor, SymPairTensor, multisets


# ---------------------------------------------------------------------------
# quaternionic matrices
# ---------------------------------------------------------------------------

def quaternion_structure(k: int):
    """(J1, J2, J3) on R^{4k}."""
    return QuaternionStructure.standard(k).J


def sp_basis(k: int):
    """Basis of sp(k): skew-symmetric matrices commuting with J1, J2, J3."""
    return sp_generators(k)


def v_basis(k: int):
    """Basis of V_k: symmetric matrices commuting with J1, J2, J3.

    Blocks R(q_ij) with q_ji = conj(q_ij): k real diagonal generators and
    four per off-diagonal position.
    """
    gens = []
    for i in range(k):
        E = np.zeros((k, k), dtype=np.int64)
        E[i, i] = 1
        gens.append(np.kron(E, quat_right(0)))
    for i in range(k):
        for j in range(i + 1, k):
            E = np.zeros((k, k), dtype=np.int64)
            E[i, j], E[j, i] = 1, 1
            gens.append(np.kron(E, quat_right(0)))
            for a in (1, 2, 3):
                E = np.zeros((k, k), dtype=np.int64)
                E[i, j], E[j, i] = 1, -1
                gens.append(np.kron(E, quat_right(a)))
    return gens


def _commutes_with_J(A, J):
    return all(np.array_equal(A @ Ja, Ja @ A) for Ja in J)


def is_sp_type(A, J=None) -> bool:
    A = np.asarray(A)
    J = J if J is not None else quaternion_structure(A.shape[0] // 4)
    return A.shape[0] % 4 == 0 and np.array_equal(A.T, -A) and _commutes_with_J(A, J)


def is_v_type(S, J=None) -> bool:
    S = np.asarray(S)
    J = J if J is not None else quaternion_structure(S.shape[0] // 4)
    return S.shape[0] % 4 == 0 and np.array_equal(S.T, S) and _commutes_with_J(S, J)


# ---------------------------------------------------------------------------
# tensors built from products of bilinear forms
# ---------------------------------------------------------------------------

def _lcm_den(values):
    den = 1
    for v in values:
        q = Fraction(v).denominator
        den = den * q // gcd(den, q)
    return den


def bilinear_product_tensor(pairs, n: int) -> SymPairTensor:
    """Tensor with T(X,X,P,P) = sum c <M X, P><N X, P> over (c, M, N) in ``pairs``.

    Matrices may hold integers or Fractions.  The symmetric entry tensor is
    a quarter of the sum of the four slot swaps of M[k,i] N[l,j].
    """
    scaled = []
    for c, M, N in pairs:
        M, N = np.asarray(M, dtype=object), np.asarray(N, dtype=object)
        dm, dn = _lcm_den(M.ravel()), _lcm_den(N.ravel())
        scaled.append((Fraction(c) / (dm * dn), (M * dm).astype(np.int64), (N * dn).astype(np.int64)))
    den = _lcm_den([c for c, _, _ in scaled])
    C = np.zeros((n, n, n, n), dtype=np.int64)
    for c, M, N in scaled:
        C += int(c * den) * np.einsum("ki,lj->ijkl", M, N)
    C = C + C.transpose(1, 0, 2, 3)
    C = C + C.transpose(0, 1, 3, 2)
    i, j, k, l = np.nonzero(C)
    keep = (i <= j) & (k <= l)
    coeffs = {((int(a), int(b)), (int(c), int(d))): Fraction(int(C[a, b, c, d]), 4 * den)
              for a, b, c, d in zip(i[keep], j[keep], k[keep], l[keep])}
    return SymPairTensor(n, coeffs)


def t1(A, B) -> SymPairTensor:
    """T(X,X,P,P) = <AX,P><BX,P> for A, B in sp(m+1)."""
    J = quaternion_structure(np.asarray(A).shape[0] // 4)
    if not (is_sp_type(A, J) and is_sp_type(B, J)):
        raise ValueError("t1 requires skew matrices commuting with J1, J2, J3")
    return bilinear_product_tensor([(1, A, B)], np.asarray(A).shape[0])


def t2(S, Q) -> SymPairTensor:
    """T(X,X,P,P) = sum_a <S J_a X, P><Q J_a X, P> for S, Q in V_{m+1}."""
    n = np.asarray(S).shape[0]
    J = quaternion_structure(n // 4)
    if not (is_v_type(S, J) and is_v_type(Q, J)):
        raise ValueError("t2 requires symmetric matrices commuting with J1, J2, J3")
    S, Q = np.asarray(S, dtype=np.int64), np.asarray(Q, dtype=np.int64)
    return bilinear_product_tensor([(1, S @ Ja, Q @ Ja) for Ja in J], n)


def hopf_kernel_basis(m: int):
    """{t2(S, Id) : S in a basis of V_{m+1}}, the tensors vanishing on horizontal pairs."""
    if m < 1:
        raise ValueError("m >= 1 required")
    n = 4 * (m + 1)
    I = np.eye(n, dtype=np.int64)
    return [t2(S, I) for S in v_basis(m + 1)]


def random_horizontal_pair(m: int, rng, bound: int = 5):
    """Exact rational (X, P) with P orthogonal to X and to J_a X (P horizontal at X/|X|)."""
    n = 4 * (m + 1)
    J = quaternion_structure(m + 1)
    while True:
        X = [int(v) for v in rng.integers(-bound, bound + 1, size=n)]
        if any(X):
            break
    P = [Fraction(int(v)) for v in rng.integers(-bound, bound + 1, size=n)]
    xx = sum(x * x for x in X)
    # X, J1 X, J2 X, J3 X are orthogonal with equal norms
    for M in [np.eye(n, dtype=np.int64)] + list(J):
        u = [int(v) for v in M @ np.array(X, dtype=np.int64)]
        c = sum(p * w for p, w in zip(P, u)) / xx
        P = [p - c * w for p, w in zip(P, u)]
    return X, P


# ---------------------------------------------------------------------------
# structural checks on dense arrays
# ---------------------------------------------------------------------------

def slot_action(T, A):
    """(A.T)(X1..X4) = sum_i T(.., A X_i, ..) on a dense 4-array (exact if T is)."""
    T = np.asarray(T)
    A = np.asarray(A).astype(T.dtype)
    out = np.tensordot(A, T, axes=([0], [0]))  # T(A X1, ...)
    out = out + np.tensordot(T, A, axes=([1], [0])).transpose(0, 3, 1, 2)
    out = out + np.tensordot(T, A, axes=([2], [0])).transpose(0, 1, 3, 2)
    out = out + np.tensordot(T, A, axes=([3], [0]))
    return out


def integer_array(T: SymPairTensor):
    """Dense int64 array of a positive multiple of T (exact up to that scale)."""
    den = 1
    for c in T.coeffs.values():
        den = den * c.denominator // gcd(den, c.denominator)
    full = T.full_array(exact=True)
    return np.vectorize(lambda c: int(c * den), otypes=[np.int64])(full)


def sp1_invariant(T: SymPairTensor) -> bool:
    """Infinitesimal Sp(1)-invariance J_a.T = 0 for a = 1, 2, 3, exact."""
    full = integer_array(T)
    return all(not np.any(slot_action(full, Ja) != 0) for Ja in quaternion_structure(T.n // 4))


def property_one(T: SymPairTensor) -> bool:
    """T(X,X,X,P) = 0 identically: the symmetrization over the first three slots vanishes."""
    full = integer_array(T)
    acc = sum((np.transpose(full, p + (3,)) for p in itertools.permutations(range(3))), 0)
    return not np.any(acc != 0)


def bracket_relation_holds(T, J=None) -> bool:
    """(J1.J2.T) - (J2.J1.T) = -2 J3.T on a dense 4-array."""
    T = np.asarray(T)
    J = J if J is not None else quaternion_structure(T.shape[0] // 4)
    lhs = slot_action(slot_action(T, J[1]), J[0]) - slot_action(slot_action(T, J[0]), J[1])
    return not np.any(lhs + 2 * slot_action(T, J[2]) != 0)


def lr_norm_identity(z, w) -> bool:
    """sum_a <L_a z, w>^2 = sum_a <R_a z, w>^2 for quaternions z, w (exact)."""
    z, w = np.asarray(z, dtype=object), np.asarray(w, dtype=object)
    left = sum(((quat_left(a).astype(object) @ z) @ w) ** 2 for a in (1, 2, 3))
    right = sum(((quat_right(a).astype(object) @ z) @ w) ** 2 for a in (1, 2, 3))
    return left == right


def hp2_reduction_check(a=(1, 1, 1)) -> bool:
    """Decompose T2(S,S), S = diag(a_i I_4), into T2(I, S') plus sp(3) products, exactly.

    With mu_i + mu_j = a_i a_j and S' = diag(mu_i I_4):
    T2(S,S) = T2(I,S') + T2(S',I) + sum_{i,a} (a_i^2 - 2 mu_i) <R_a x_i, p_i>^2,
    where <R_a x_i, p_i> is the bilinear form of the block matrix A_ia in sp(3).
    """
    a = [Fraction(v) for v in a]
    mu = [(a[0] * a[1] + a[2] * a[0] - a[1] * a[2]) / 2,
          (a[0] * a[1] + a[1] * a[2] - a[2] * a[0]) / 2,
          (a[1] * a[2] + a[2] * a[0] - a[0] * a[1]) / 2]
    J = quaternion_structure(3)
    n = 12

    def diag(vals):
        D = np.zeros((n, n), dtype=object)
        for i, v in enumerate(vals):
            for r in range(4):
                D[4 * i + r, 4 * i + r] = v
        return D

    S, Sp = diag(a), diag(mu)
    lhs = bilinear_product_tensor([(1, S @ Ja, S @ Ja) for Ja in J], n)
    pairs = [(1, Ja, Sp @ Ja) for Ja in J] + [(1, Sp @ Ja, Ja) for Ja in J]
    for i in range(3):
        for al in (1, 2, 3):
            A = np.zeros((n, n), dtype=object)
            A[4 * i:4 * i + 4, 4 * i:4 * i + 4] = quat_right(al)
            pairs.append((a[i] ** 2 - 2 * mu[i], A, A))
    rhs = bilinear_product_tensor(pairs, n)
    return lhs == rhs


# ---------------------------------------------------------------------------
# top-slot generators on T_o HP^m = R^{4m}
# ---------------------------------------------------------------------------

FAMILIES = ("i", "ii", "iii", "iv")


def isotropy_basis(m: int):
    """sp(m) + sp(1) acting on R^{4m}; the sp(1) part acts as -J_a."""
    return list(sp_basis(m)) + [-Ja for Ja in quaternion_structure(m)]


def topslot_generators(m: int, families=FAMILIES):
    """Tagged top-slot quadratic tensors on R^{4m} as (family, BianchiTensor) pairs.

    (i)   <AX,P><BX,P> for A, B in a basis of sp(m) + sp(1);
    (ii)  sum c_bg <J_b X,P><J_g X,P> for symmetric c;
    (iii) sum_a <N_a X,P><J_a X,P> for N_a in sp(m);
    (iv)  t1 and t2 tensors of level m-1 on R^{4m}.
    """
    if m < 2:
        raise ValueError("m >= 2 required")
    n = 4 * m
    J = quaternion_structure(m)
    out = []

    def add(tag, pairs):
        T = bilinear_product_tensor(pairs, n)
        if T.coeffs:
            out.append((tag, BianchiTensor.from_sympair(T)))

    if "i" in families:
        H = isotropy_basis(m)
        for i, j in itertools.combinations_with_replacement(range(len(H)), 2):
            add("i", [(1, H[i], H[j])])
    if "ii" in families:
        for b, g in itertools.combinations_with_replacement(range(3), 2):
            add("ii", [(1, J[b], J[g])] if b == g else [(1, J[b], J[g]), (1, J[g], J[b])])
    if "iii" in families:
        for N in sp_basis(m):
            for al in range(3):
                add("iii", [(1, N, J[al])])
    if "iv" in families:
        A = sp_basis(m)
        for i, j in itertools.combinations_with_replacement(range(len(A)), 2):
            add("iv", [(1, A[i], A[j])])
        V = v_basis(m)
        for i, j in itertools.combinations_with_replacement(range(len(V)), 2):
            add("iv", [(1, V[i] @ Ja, V[j] @ Ja) for Ja in J])
    return out


def _integer_rows(tensors):
    rows = []
    for T in tensors:
        den = 1
        for c in T.coords:
            den = den * c.denominator // gcd(den, c.denominator)
        rows.append([int(c * den) for c in T.coords])
    return rows


def family_span_dim(m: int, families=FAMILIES) -> int:
    """Exact dimension of the span of the selected generator families."""
    return span_rank(_integer_rows([T for _, T in topslot_generators(m, families)]))
