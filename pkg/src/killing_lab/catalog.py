"""Model symmetric spaces: curvature tensors and isotropy generators.

Every model works in orthonormal coordinates on the tangent space 𝔪 = R^n
at the base point.  The curvature is stored as an exact integer 4-tensor
``R_int`` with a rational factor ``R_scale``:

    <R(X,Y)Z, V> = R_scale * sum R_int[a,b,c,d] X_a Y_b Z_c V_d.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property, reduce
from math import gcd, isqrt

import numpy as np

from .albert import clifford_system


@dataclass(frozen=True)
class QuaternionStructure:
    """J1, J2, J3 = J1 J2 on R^{4m}: block-diagonal left multiplication by i, j, k."""
    m: int
    J: tuple

    @classmethod
    def standard(cls, m):
        return cls(m, tuple(np.kron(np.eye(m, dtype=np.int64), quat_left(a)) for a in (1, 2, 3)))


# ---------------------------------------------------------------------------
# quaternion matrices on H = R^4 with basis 1, i, j, k
# ---------------------------------------------------------------------------

def _quat_mul(p, q):
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return (a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2)


def _unit(k, n=4):
    return tuple(1 if i == k else 0 for i in range(n))


def quat_left(k):
    """Matrix of x -> e_k x (k = 0 for 1, 1..3 for i, j, k)."""
    return np.array([_quat_mul(_unit(k), _unit(c)) for c in range(4)], dtype=np.int64).T


def quat_right(k):
    """Matrix of x -> x e_k."""
    return np.array([_quat_mul(_unit(c), _unit(k)) for c in range(4)], dtype=np.int64).T


# ---------------------------------------------------------------------------
# curvature from a quadratic form
# ---------------------------------------------------------------------------

def _biquadratic(n, gram=0, cross=0, forms=(), prods=()):
    """Twice the symmetric coefficient tensor k2[i,j,k,l] of a biquadratic form.

    k(A,B) = gram |A|^2|B|^2 + cross <A,B>^2 + sum c <M B, A>^2
             + sum c <S A, A><T B, B>
    and k(A,B) = (1/2) sum k2[i,j,k,l] A_i A_j B_k B_l.
    """
    I = np.eye(n, dtype=np.int64)
    k2 = 2 * gram * np.einsum("ij,kl->ijkl", I, I)
    k2 = k2 + cross * (np.einsum("ik,jl->ijkl", I, I) + np.einsum("il,jk->ijkl", I, I))
    for c, M in forms:
        M = np.asarray(M, dtype=np.int64)
        k2 = k2 + c * (np.einsum("ik,jl->ijkl", M, M) + np.einsum("il,jk->ijkl", M, M))
    for c, S, T in prods:
        k2 = k2 + 2 * c * np.einsum("ij,kl->ijkl", np.asarray(S, np.int64), np.asarray(T, np.int64))
    return k2


def curvature_from_sectional_form(k2):
    """Algebraic curvature tensor R with R(A,B,B,A) = k(A,B).

    Uses R(a,b,c,d) = (2/3) (kpol(a,d; b,c) - kpol(a,c; b,d)).  Returns
    (R_int, R_scale) with R = R_scale * R_int.
    """
    Rint = np.einsum("adbc->abcd", k2) - np.einsum("acbd->abcd", k2)
    return _normalize(Rint, Fraction(1, 3))


def _normalize(Rint, scale):
    g = reduce(gcd, (int(abs(x)) for x in np.unique(Rint)), 0)
    if g > 1:
        Rint = Rint // g
        scale = scale * g
    return Rint.astype(np.int64), Fraction(scale)


# ---------------------------------------------------------------------------
# the model type
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymmetricSpaceModel:
    name: str
    n: int
    rank: int
    R_int: np.ndarray
    R_scale: Fraction
    isotropy_gens: tuple
    rank_one: bool
    normalized: bool = False
    scale_factor: Fraction = Fraction(1)
    scaling_note: str = ""
    kind: str = "custom"
    complex_structures: tuple = ()
    input_hash: str = ""

    # -- curvature -------------------------------------------------------
    @cached_property
    def R_exact(self):
        """Object array of Fractions, R[a,b,c,d] = <R(e_a,e_b)e_c, e_d>."""
        return self.R_int.astype(object) * self.R_scale

    @cached_property
    def R_float(self):
        return self.R_int.astype(np.float64) * float(self.R_scale)

    def curvature(self, X, Y, Z):
        """R(X,Y)Z; exact for integer or Fraction input."""
        if _is_exact(X, Y, Z):
            v = np.einsum("abcd,a,b,c->d", self.R_int.astype(object), _obj(X), _obj(Y), _obj(Z))
            return v * self.R_scale
        return np.einsum("abcd,a,b,c->d", self.R_float, np.asarray(X, float), np.asarray(Y, float),
                         np.asarray(Z, float))

    def R4(self, X, Y, Z, V):
        """<R(X,Y)Z, V>."""
        return _dot(self.curvature(X, Y, Z), V)

    def jacobi_matrix(self, X, exact=False):
        """Matrix of the Jacobi operator R_X: Y -> R(Y,X)X."""
        if exact:
            return np.einsum("abcd,b,c->da", self.R_int.astype(object), _obj(X), _obj(X)) * self.R_scale
        X = np.asarray(X, float)
        return np.einsum("abcd,b,c->da", self.R_float, X, X)

    def sectional_form(self, X, P):
        """R(P,X,X,P)."""
        return self.R4(P, X, X, P)

    def scaled(self, c):
        """Model with curvature multiplied by the rational c (c < 0 gives the dual sign)."""
        c = Fraction(c)
        if c == 0:
            raise ValueError("scale must be nonzero")
        note = f"curvature multiplied by {c}" + (f"; {self.scaling_note}" if self.scaling_note else "")
        return replace(self, R_scale=self.R_scale * c, scale_factor=self.scale_factor * c,
                       normalized=self.normalized and c == 1, scaling_note=note,
                       name=self.name if c == 1 else f"{self.name}*({c})")

    def check_symmetries(self):
        """Exact check of the algebraic curvature identities and isotropy invariance."""
        R = self.R_int
        ok = (np.array_equal(R, -R.transpose(1, 0, 2, 3)) and np.array_equal(R, -R.transpose(0, 1, 3, 2))
              and np.array_equal(R, R.transpose(2, 3, 0, 1))
              and not np.any(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)))
        return ok and all(self.isotropy_invariant(A) for A in self.isotropy_gens)

    def isotropy_invariant(self, A):
        """R(AX,Y)Z + R(X,AY)Z + R(X,Y)AZ - A R(X,Y)Z = 0 as a tensor identity."""
        R = self.R_int
        A = np.asarray(A, dtype=np.int64)
        # R[a,b,c,d] X_a Y_b Z_c V_d with A acting: (AX)_a = A[a,e] X_e
        t = (np.einsum("ebcd,ea->abcd", R, A) + np.einsum("aecd,eb->abcd", R, A)
             + np.einsum("abed,ec->abcd", R, A) - np.einsum("abce,de->abcd", R, A))
        return not np.any(t)

    def describe(self):
        return {"name": self.name, "n": self.n, "rank": self.rank, "isotropy_dim": self.isotropy_dim,
                "rank_one": self.rank_one, "scale_factor": str(self.scale_factor),
                "scaling_note": self.scaling_note}

    @cached_property
    def isotropy_dim(self):
        from .linalg import span_rank
        if not self.isotropy_gens:
            return 0
        return span_rank([np.asarray(A).ravel() for A in self.isotropy_gens])

    def content_hash(self):
        """Git-style sha1 over the exact model data."""
        h = hashlib.sha1()
        payload = json.dumps({"name": self.name, "n": self.n, "scale": str(self.R_scale),
                              "R": self.R_int.ravel().tolist(),
                              "gens": [np.asarray(A).ravel().tolist() for A in self.isotropy_gens]})
        blob = payload.encode()
        h.update(b"blob %d\0" % len(blob))
        h.update(blob)
        return h.hexdigest()


def _is_exact(*vs):
    return all(isinstance(x, (int, Fraction, np.integer)) for v in vs for x in v)


def _obj(v):
    out = np.empty(len(v), dtype=object)
    for i, x in enumerate(v):
        out[i] = Fraction(x) if not isinstance(x, Fraction) else x
    return out


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def so_generators(n):
    gens = []
    for i in range(n):
        for j in range(i + 1, n):
            A = np.zeros((n, n), dtype=np.int64)
            A[i, j], A[j, i] = -1, 1
            gens.append(A)
    return gens


def make_sphere(n: int, kappa=1) -> SymmetricSpaceModel:
    """Round sphere S^n of constant curvature kappa: R(X,Y)Z = kappa(<Y,Z>X - <X,Z>Y)."""
    if n < 2:
        raise ValueError("sphere requires n >= 2")
    kappa = Fraction(kappa)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    I = np.eye(n, dtype=np.int64)
    Rint = np.einsum("bc,ad->abcd", I, I) - np.einsum("ac,bd->abcd", I, I)
    return SymmetricSpaceModel(
        name=f"sphere:{n}" if kappa == 1 else f"sphere:{n}@{kappa}", n=n, rank=1, R_int=Rint, R_scale=kappa,
        isotropy_gens=tuple(so_generators(n)), rank_one=True, normalized=(kappa == 1),
        scale_factor=kappa, scaling_note="constant curvature %s" % kappa, kind="sphere")


def complex_structure(m):
    return np.kron(np.eye(m, dtype=np.int64), np.array([[0, -1], [1, 0]], dtype=np.int64))


def u_generators(m):
    """Basis of u(m) acting on R^{2m} = C^m."""
    I2 = np.eye(2, dtype=np.int64)
    J2 = np.array([[0, -1], [1, 0]], dtype=np.int64)
    gens = []
    for i in range(m):
        E = np.zeros((m, m), dtype=np.int64)
        E[i, i] = 1
        gens.append(np.kron(E, J2))
    for i in range(m):
        for j in range(i + 1, m):
            E = np.zeros((m, m), dtype=np.int64)
            E[i, j], E[j, i] = 1, -1
            gens.append(np.kron(E, I2))
            E = np.zeros((m, m), dtype=np.int64)
            E[i, j], E[j, i] = 1, 1
            gens.append(np.kron(E, J2))
    return gens


def make_cpm(m: int) -> SymmetricSpaceModel:
    """CP^m with R(P,X,X,P) = |X|^2|P|^2 - <X,P>^2 + 3<JX,P>^2."""
    if m < 2:
        raise ValueError("cpm requires m >= 2 (m = 1 is the sphere)")
    n = 2 * m
    J = complex_structure(m)
    k2 = _biquadratic(n, gram=1, cross=-1, forms=[(3, J)])
    Rint, scale = curvature_from_sectional_form(k2)
    return SymmetricSpaceModel(
        name=f"cpm:{m}", n=n, rank=1, R_int=Rint, R_scale=scale, isotropy_gens=tuple(u_generators(m)),
        rank_one=True, normalized=True, kind="cpm", complex_structures=(J,),
        scaling_note="sectional curvature in [1,4]")


def sp_generators(m):
    """Basis of sp(m): block matrices R(q) with q_ji = -conj(q_ij)."""
    gens = []
    for i in range(m):
        for a in (1, 2, 3):
            E = np.zeros((m, m), dtype=np.int64)
            E[i, i] = 1
            gens.append(np.kron(E, quat_right(a)))
    for i in range(m):
        for j in range(i + 1, m):
            E = np.zeros((m, m), dtype=np.int64)
            E[i, j], E[j, i] = 1, -1
            gens.append(np.kron(E, quat_right(0)))
            for a in (1, 2, 3):
                E = np.zeros((m, m), dtype=np.int64)
                E[i, j], E[j, i] = 1, 1
                gens.append(np.kron(E, quat_right(a)))
    return gens


def make_hpm(m: int) -> SymmetricSpaceModel:
    """HP^m with R(P,X,X,P) = |X|^2|P|^2 - <X,P>^2 + 3 sum_a <J_a X,P>^2."""
    if m < 1:
        raise ValueError("hpm requires m >= 1")
    n = 4 * m
    Q = QuaternionStructure.standard(m)
    k2 = _biquadratic(n, gram=1, cross=-1, forms=[(3, J) for J in Q.J])
    Rint, scale = curvature_from_sectional_form(k2)
    gens = sp_generators(m) + [-J for J in Q.J]
    return SymmetricSpaceModel(
        name=f"hpm:{m}", n=n, rank=1, R_int=Rint, R_scale=scale, isotropy_gens=tuple(gens),
        rank_one=True, normalized=True, kind="hpm", complex_structures=tuple(Q.J),
        scaling_note="sectional curvature in [1,4]")


def make_op2(sum_sign: int = -1) -> SymmetricSpaceModel:
    """Cayley plane from the Clifford system S_0..S_8 on O + O.

    R(X,P)P = 3(|P|^2 X - <X,P>P) + sum_sign * sum_i (<S_i X,P> S_i P - <S_i P,P> S_i X).

    With sum_sign = -1 the Jacobi operator of a unit X has eigenvalues 1 (x8)
    and 4 (x7) on X^perp, the Cayley-plane pattern with sectional curvature
    in [1,4].  sum_sign = +1 gives eigenvalues 2 and 5, which is Spin(9)
    invariant but not the curvature of a rank-one symmetric space; it is kept
    only for comparison.
    """
    if sum_sign not in (1, -1):
        raise ValueError("sum_sign must be +1 or -1")
    S = clifford_system()
    n = 16
    k2 = _biquadratic(n, gram=3, cross=-3, forms=[(sum_sign, Si) for Si in S],
                      prods=[(-sum_sign, Si, Si) for Si in S])
    Rint, scale = curvature_from_sectional_form(k2)
    gens = [S[i] @ S[j] for i in range(9) for j in range(i + 1, 9)]
    return SymmetricSpaceModel(
        name="op2" if sum_sign == -1 else "op2-quoted-sign", n=n, rank=1, R_int=Rint, R_scale=scale,
        isotropy_gens=tuple(gens), rank_one=True, normalized=(sum_sign == -1), scale_factor=Fraction(1),
        kind="op2",
        scaling_note="Clifford-system curvature with the S_i sum taken with sign %+d; "
                     "sectional curvature in [1,4], no rescaling" % sum_sign)


# ---------------------------------------------------------------------------
# symmetric pairs from structure constants
# ---------------------------------------------------------------------------

def _rational_sqrt(q: Fraction):
    q = Fraction(q)
    if q < 0:
        return None
    a, b = isqrt(q.numerator), isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return None


def make_from_structure_constants(table, name="file") -> SymmetricSpaceModel:
    """Symmetric space g/h from a bracket table; R(X,Y)Z = -[[X,Y],Z] on m.

    ``table`` is a dict (or JSON text) with keys h_dim, m_dim, brackets and
    inner_product.  Basis indices 0..h_dim-1 span h, the rest span m.  The
    diagonal inner product on m must be a common positive factor times
    rational squares so that an orthonormal basis has rational coordinates.
    """
    raw = table if isinstance(table, dict) else json.loads(table)
    try:
        hd, md = int(raw["h_dim"]), int(raw["m_dim"])
        brackets = raw["brackets"]
        ip = [Fraction(str(x)) for x in raw["inner_product"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed space definition: {exc}") from None
    N = hd + md
    if md < 1 or hd < 0:
        raise ValueError("dimensions must be positive")
    if len(ip) == N:
        ip = ip[hd:]
    if len(ip) != md or any(g <= 0 for g in ip):
        raise ValueError("inner_product must list m_dim positive entries")
    C = np.zeros((N, N, N), dtype=object)
    C[...] = Fraction(0)
    seen = {}
    for entry in brackets:
        i, j, terms = entry
        vec = [Fraction(0)] * N
        for k, c in terms:
            vec[int(k)] += Fraction(str(c))
        for (a, b, sign) in ((i, j, 1), (j, i, -1)):
            key = (a, b)
            val = [sign * x for x in vec]
            if key in seen and seen[key] != val:
                raise ValueError(f"inconsistent brackets for {key}")
            seen[key] = val
            C[a, b, :] = val
    for i in range(N):
        if any(C[i, i, :] != 0):
            raise ValueError("bracket [e_i, e_i] must vanish")
    h = range(hd)
    m = range(hd, N)
    for a in range(N):
        for b in range(N):
            for k in range(N):
                if C[a, b, k] == 0:
                    continue
                in_h = [a < hd, b < hd, k < hd]
                # [h,h] in h, [h,m] in m, [m,m] in h
                if in_h[0] == in_h[1] and not in_h[2]:
                    raise ValueError("bracket table violates [h,h]⊆h or [m,m]⊆h")
                if in_h[0] != in_h[1] and in_h[2]:
                    raise ValueError("bracket table violates [h,m]⊆m")
    # Jacobi identity
    for a in range(N):
        for b in range(a + 1, N):
            for c in range(b + 1, N):
                tot = np.zeros(N, dtype=object)
                for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
                    tot = tot + C[x, y, :] @ C[:, z, :]
                if any(t != 0 for t in tot):
                    raise ValueError("bracket table violates the Jacobi identity")
    g = {hd + i: ip[i] for i in range(md)}
    for hh in h:
        for x in m:
            for y in m:
                if C[hh, x, y] * g[y] + C[hh, y, x] * g[x] != 0:
                    raise ValueError("inner product on m is not ad(h)-invariant")
    lam = ip[0]
    s = []
    for gi in ip:
        r = _rational_sqrt(gi / lam)
        if r is None:
            raise ValueError("inner product entries must be a common factor times rational squares")
        s.append(r)
    # orthonormal basis f_a = e_a / (sqrt(lam) s_a)
    mm = list(m)
    R = np.zeros((md,) * 4, dtype=object)
    R[...] = Fraction(0)
    for ia, a in enumerate(mm):
        for ib, b in enumerate(mm):
            xy = C[a, b, :]
            for ic, c in enumerate(mm):
                # -[[e_a, e_b], e_c] component on e_d
                v = -(xy @ C[:, c, :])
                for idd, d in enumerate(mm):
                    if v[d] != 0:
                        # <R(f_a,f_b)f_c, f_d> = v_d g_d / (|e_a||e_b||e_c||e_d|)
                        R[ia, ib, ic, idd] = v[d] * s[idd] / (lam * s[ia] * s[ib] * s[ic])
    den = reduce(lambda x, y: x * y // gcd(x, y), (x.denominator for x in R.ravel()), 1)
    Rint = np.array([int(x * den) for x in R.ravel()], dtype=np.int64).reshape(R.shape)
    Rint, scale = _normalize(Rint, Fraction(1, den))
    gens = []
    for hh in h:
        A = np.zeros((md, md), dtype=object)
        for ia, a in enumerate(mm):
            for idd, d in enumerate(mm):
                A[idd, ia] = C[hh, a, d] * s[idd] / s[ia]
        dA = reduce(lambda x, y: x * y // gcd(x, y), (Fraction(x).denominator for x in A.ravel()), 1)
        Ai = np.array([int(Fraction(x) * dA) for x in A.ravel()], dtype=np.int64).reshape(md, md)
        if np.any(Ai):
            gens.append(Ai)
    rank = _rank_of_pair(C, hd, N)
    payload = json.dumps(raw, sort_keys=True).encode()
    digest = hashlib.sha1(b"blob %d\0" % len(payload) + payload).hexdigest()
    return SymmetricSpaceModel(
        name=name, n=md, rank=rank, R_int=Rint, R_scale=scale, isotropy_gens=tuple(gens),
        rank_one=(rank == 1), normalized=False, kind="file", scaling_note="from structure constants",
        input_hash=digest)


def _rank_of_pair(C, hd, N):
    """Dimension of the centralizer in m of a generic element of m."""
    rng = np.random.default_rng(12345)
    md = N - hd
    if md == 0:
        return 0
    X = rng.integers(-50, 51, size=md)
    # ad_X: m -> h, Y -> [X, Y]
    M = np.zeros((N, md), dtype=np.float64)
    for j in range(md):
        col = np.zeros(N)
        for i in range(md):
            col += float(X[i]) * np.array([float(v) for v in C[hd + i, hd + j, :]])
        M[:, j] = col
    r = np.linalg.matrix_rank(M) if np.any(M) else 0
    return md - r


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

CATALOG = ("sphere:2", "sphere:3", "sphere:4", "cpm:2", "cpm:3", "hpm:1", "hpm:2", "hpm:3", "op2")


def resolve(space_id: str) -> SymmetricSpaceModel:
    """Model for an identifier such as 'sphere:3', 'cpm:2', 'hpm:2', 'op2' or 'file:path'."""
    if not isinstance(space_id, str) or not space_id:
        raise KeyError("empty space id")
    if space_id == "op2":
        return make_op2()
    kind, _, arg = space_id.partition(":")
    if kind == "file":
        if not arg:
            raise KeyError("file: requires a path")
        with open(arg) as fh:
            return make_from_structure_constants(fh.read(), name=space_id)
    try:
        k = int(arg)
    except ValueError:
        raise KeyError(f"unknown space id {space_id!r}") from None
    try:
        if kind == "sphere":
            return make_sphere(k)
        if kind == "cpm":
            return make_cpm(k)
        if kind == "hpm":
            return make_hpm(k)
    except ValueError as exc:
        raise KeyError(str(exc)) from None
    raise KeyError(f"unknown space id {space_id!r}")


def catalog_table():
    rows = []
    for sid in CATALOG:
        M = resolve(sid)
        rows.append({"id": sid, "n": M.n, "rank": M.rank, "isotropy_dim": M.isotropy_dim,
                     "rank_one": M.rank_one})
    rows.append({"id": "file:<path>", "n": None, "rank": None, "isotropy_dim": None, "rank_one": None,
                 "hint": "JSON {h_dim, m_dim, brackets, inner_product}"})
    return rows
