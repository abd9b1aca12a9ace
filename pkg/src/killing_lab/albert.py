"""Octonions, the Albert algebra H3(O) and the embedded Cayley plane.

Elements of H3(O) are stored as flat 27-vectors
``[r1, r2, r3, x1 (8), x2 (8), x3 (8)]`` standing for the Hermitian matrix

    [[r1,  x3*, x2*],
     [x3,  r2,  x1 ],
     [x2,  x1*, r3 ]].

Entries may be floats or exact Fractions.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np

# ---------------------------------------------------------------------------
# octonions
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def fano_triples():
    """Oriented lines (i, i+1, i+3) mod 7 of the Fano plane on e1..e7."""
    return tuple((i, i % 7 + 1, (i + 2) % 7 + 1) for i in range(1, 8))


@lru_cache(maxsize=None)
def _mult_table():
    """table[i][j] = (k, sign) with e_i e_j = sign * e_k."""
    t = [[None] * 8 for _ in range(8)]
    for i in range(8):
        t[0][i] = (i, 1)
        t[i][0] = (i, 1)
    for i in range(1, 8):
        t[i][i] = (0, -1)
    for a, b, c in fano_triples():
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            t[x][y] = (z, 1)
            t[y][x] = (z, -1)
    return tuple(tuple(r) for r in t)


@lru_cache(maxsize=None)
def structure_constants():
    """Integer array C with (ab)_k = sum_ij C[i,j,k] a_i b_j."""
    C = np.zeros((8, 8, 8), dtype=np.int64)
    for i, row in enumerate(_mult_table()):
        for j, (k, s) in enumerate(row):
            C[i, j, k] = s
    return C


def oct_mul(a, b):
    """Octonion product under the fixed Fano table (float or exact)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.dtype == object or b.dtype == object:
        out = np.zeros(8, dtype=object)
        out[:] = 0
        t = _mult_table()
        for i in range(8):
            if a[i] == 0:
                continue
            for j in range(8):
                if b[j] == 0:
                    continue
                k, s = t[i][j]
                out[k] += s * a[i] * b[j]
        return out
    return np.einsum("i,j,ijk->k", a, b, structure_constants())


def oct_conj(a):
    a = np.array(a)
    a[1:] = -a[1:]
    return a


def oct_norm2(a):
    return sum(x * x for x in a) if np.asarray(a).dtype == object else float(np.dot(a, a))


def oct_unit(i, exact=False):
    e = np.zeros(8, dtype=object if exact else np.float64)
    if exact:
        e[:] = 0
    e[i] = 1
    return e


# ---------------------------------------------------------------------------
# Clifford system on O + O
# ---------------------------------------------------------------------------

def clifford_system():
    """Nine symmetric 16x16 integer matrices S_0..S_8 on O + O.

    S_0 (x1, x2) = (x1, -x2) and S_i (x1, x2) = (e x2*, x1* e) with e the
    (i-1)-th octonion basis vector.  They satisfy S_i S_j + S_j S_i = 2 delta_ij.
    """
    mats = []
    S0 = np.diag([1] * 8 + [-1] * 8).astype(np.int64)
    mats.append(S0)
    for i in range(8):
        e = oct_unit(i, exact=True)
        M = np.zeros((16, 16), dtype=np.int64)
        for c in range(16):
            v = np.zeros(16, dtype=object)
            v[:] = 0
            v[c] = 1
            x1, x2 = v[:8], v[8:]
            y1 = oct_mul(e, oct_conj(x2))
            y2 = oct_mul(oct_conj(x1), e)
            M[:8, c] = [int(t) for t in y1]
            M[8:, c] = [int(t) for t in y2]
        mats.append(M)
    return mats


# ---------------------------------------------------------------------------
# Albert algebra
# ---------------------------------------------------------------------------

class AlbertElement:
    """Hermitian 3x3 octonion matrix stored as a 27-vector."""

    def __init__(self, vec):
        vec = np.asarray(vec)
        if vec.shape != (27,):
            raise ValueError("expected 27 components")
        self.vec = vec

    @classmethod
    def make(cls, r, x1=None, x2=None, x3=None, exact=False):
        dt = object if exact else np.float64
        v = np.zeros(27, dtype=dt)
        if exact:
            v[:] = Fraction(0)
        v[:3] = r
        for k, x in enumerate((x1, x2, x3)):
            if x is not None:
                v[3 + 8 * k: 11 + 8 * k] = x
        return cls(v)

    @property
    def exact(self):
        return self.vec.dtype == object

    @property
    def r(self):
        return self.vec[:3]

    def x(self, k):
        """Off-diagonal octonion x_k for k in 1, 2, 3."""
        return self.vec[3 + 8 * (k - 1): 11 + 8 * (k - 1)]

    def matrix(self):
        """3x3x8 array of octonion entries."""
        dt = self.vec.dtype
        M = np.zeros((3, 3, 8), dtype=dt)
        if dt == object:
            M[...] = Fraction(0)
        for i in range(3):
            M[i, i, 0] = self.r[i]
        x1, x2, x3 = self.x(1), self.x(2), self.x(3)
        M[0, 1], M[1, 0] = oct_conj(x3), x3
        M[0, 2], M[2, 0] = oct_conj(x2), x2
        M[1, 2], M[2, 1] = x1, oct_conj(x1)
        return M

    @classmethod
    def from_matrix(cls, M):
        v = np.zeros(27, dtype=M.dtype)
        v[:3] = [M[0, 0, 0], M[1, 1, 0], M[2, 2, 0]]
        v[3:11] = M[1, 2]
        v[11:19] = M[2, 0]
        v[19:27] = M[1, 0]
        return cls(v)

    def __add__(self, other):
        return AlbertElement(self.vec + other.vec)

    def __sub__(self, other):
        return AlbertElement(self.vec - other.vec)

    def __mul__(self, c):
        return AlbertElement(self.vec * c)

    __rmul__ = __mul__

    def __repr__(self):
        return f"AlbertElement(r={list(self.r)})"


def _matmul(A, B):
    dt = object if (A.dtype == object or B.dtype == object) else np.float64
    out = np.zeros((3, 3, 8), dtype=dt)
    if dt == object:
        out[...] = Fraction(0)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                out[i, j] = out[i, j] + oct_mul(A[i, k], B[k, j])
    return out


def jordan_mul(A: AlbertElement, B: AlbertElement) -> AlbertElement:
    """A o B = (AB + BA) / 2."""
    MA, MB = A.matrix(), B.matrix()
    S = _matmul(MA, MB) + _matmul(MB, MA)
    half = Fraction(1, 2) if S.dtype == object else 0.5
    return AlbertElement.from_matrix(S * half)


def trace(A: AlbertElement):
    return A.r[0] + A.r[1] + A.r[2]


def inner(A: AlbertElement, B: AlbertElement):
    """<A, B> = Tr(A o B) = sum r_i s_i + 2 sum <x_i, y_i>."""
    a, b = A.vec, B.vec
    return sum(a[:3] * b[:3]) + 2 * sum(a[3:] * b[3:])


def det(A: AlbertElement):
    """Cubic norm r1 r2 r3 + 2 Re(x1 x2 x3*) - r1|x1|^2 - r2|x2|^2 - r3|x3|^2.

    The conjugate on x3 matches the matrix layout above; with it the
    Cayley-Hamilton identity A^3 - Tr(A) A^2 + S(A) A - det(A) I = 0 holds.
    """
    r = A.r
    x1, x2, x3 = A.x(1), A.x(2), A.x(3)
    re = oct_mul(oct_mul(x1, x2), oct_conj(x3))[0]
    return (r[0] * r[1] * r[2] + 2 * re - r[0] * oct_norm2(x1)
            - r[1] * oct_norm2(x2) - r[2] * oct_norm2(x3))


def phi(A: AlbertElement, B: AlbertElement, C: AlbertElement):
    """Symmetric trilinear form with phi(X, X, X) = det(X)."""
    val = (det(A + B + C) - det(A + B) - det(A + C) - det(B + C)
           + det(A) + det(B) + det(C))
    if isinstance(val, (Fraction, int)) or (A.exact and B.exact and C.exact):
        return Fraction(val) / 6
    return val / 6


def basis_element(i: int, exact=False) -> AlbertElement:
    v = np.zeros(27, dtype=object if exact else np.float64)
    if exact:
        v[:] = Fraction(0)
    v[i] = 1
    return AlbertElement(v)


def E_point(exact=True) -> AlbertElement:
    return AlbertElement.make([1, 0, 0], exact=exact)


def tangent_basis_at_E(exact=True):
    """The 16 tangent vectors at E: y (the x3 slot) then z (the x2 slot) over the octonion basis."""
    out = []
    for slot in (3, 2):
        for i in range(8):
            kw = {f"x{slot}": oct_unit(i, exact)}
            out.append(AlbertElement.make([0, 0, 0], exact=exact, **kw))
    return out


def is_cayley_point(X: AlbertElement, tol=1e-10) -> bool:
    """Tr X = 1 and phi(A, X, X) = 0 on the 27 coordinate basis elements."""
    exact = X.exact
    vals = [trace(X) - 1] + [phi(basis_element(i, exact), X, X) for i in range(27)]
    if exact:
        return all(v == 0 for v in vals)
    return max(abs(float(v)) for v in vals) <= tol


def k_a(A: AlbertElement, Y: AlbertElement, Z: AlbertElement):
    """K_A(Y, Z) = phi(Y, Z, A) for trace-free A."""
    t = trace(A)
    if (t != 0 if A.exact else abs(float(t)) > 1e-12):
        raise ValueError("K_A requires a trace-free A")
    return phi(Y, Z, A)


def even_family_basis():
    """Basis of trace-free A with x2 = x3 = 0: (r1-r2), (r2-r3), x1 in O; 10 elements."""
    out = [AlbertElement.make([1, -1, 0], exact=True), AlbertElement.make([0, 1, -1], exact=True)]
    for i in range(8):
        out.append(AlbertElement.make([0, 0, 0], x1=oct_unit(i, True), exact=True))
    return out


def trace_free_basis():
    """Basis of the hyperplane V = {Tr A = 0} (26 elements)."""
    out = [AlbertElement.make([1, -1, 0], exact=True), AlbertElement.make([0, 1, -1], exact=True)]
    for i in range(3, 27):
        out.append(basis_element(i, exact=True))
    return out


# ---------------------------------------------------------------------------
# numeric model of the embedding
# ---------------------------------------------------------------------------

# orthonormal coordinates: u = D * vec, ||A||^2 = |u|^2
_D = np.array([1.0] * 3 + [np.sqrt(2.0)] * 24)


def to_ortho(A: AlbertElement):
    return np.asarray(A.vec, dtype=np.float64) * _D


def from_ortho(u) -> AlbertElement:
    return AlbertElement(np.asarray(u, dtype=np.float64) / _D)


@lru_cache(maxsize=None)
def phi_tensor():
    """Dense symmetric 27^3 array of phi on the coordinate basis.

    Read off the monomials of det: r1 r2 r3, -r_i |x_i|^2 and the trilinear
    term 2 Re(x1 x2 x3*) = 2 sum C[i,j,k] x1_i x2_j x3_k.
    """
    T = np.zeros((27, 27, 27))

    def put(idx, val):
        a, b, c = idx
        for p in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
            T[p] = val

    put((0, 1, 2), 1.0 / 6.0)
    for k in range(3):
        for i in range(8):
            j = 3 + 8 * k + i
            put((k, j, j), -1.0 / 3.0)
    C = structure_constants()
    for i, j, l in zip(*np.nonzero(C)):
        put((3 + i, 11 + j, 19 + l), C[i, j, l] / 3.0)
    T.setflags(write=False)
    return T


@lru_cache(maxsize=None)
def phi_ortho():
    """phi in orthonormal coordinates: phi(u, v, w) = einsum(T, u, v, w)."""
    T = phi_tensor() / _D[:, None, None] / _D[None, :, None] / _D[None, None, :]
    T.setflags(write=False)
    return T


_TRACE = np.array([1.0] * 3 + [0.0] * 24)


def _constraints(u):
    T = phi_ortho()
    Tu = np.tensordot(T, u, axes=([2], [0]))      # (27, 27): phi(e_a, e_b, u)
    g = np.concatenate([Tu @ u, [_TRACE @ u - 1.0]])
    J = np.vstack([2.0 * Tu, _TRACE])
    return g, J, Tu


def _accel(u, v):
    """Normal acceleration keeping the curve on the constraint set."""
    T = phi_ortho()
    _, J, _ = _constraints(u)
    Tv = np.tensordot(T, v, axes=([2], [0]))
    h = np.concatenate([2.0 * (Tv @ v), [0.0]])
    a, *_ = np.linalg.lstsq(J, -h, rcond=1e-10)
    return a


def tangent_projection(u, v):
    _, J, _ = _constraints(u)
    w, *_ = np.linalg.lstsq(J, J @ v, rcond=1e-10)
    return v - w


def _project_point(u, iters=4):
    for _ in range(iters):
        g, J, _ = _constraints(u)
        du, *_ = np.linalg.lstsq(J, -g, rcond=1e-10)
        u = u + du
    return u


class ConstraintDriftError(RuntimeError):
    pass


def geodesic(X0: AlbertElement, V0: AlbertElement, s_max: float, steps: int, drift_tol=1e-9,
             callback=None):
    """Integrate an embedded geodesic by RK4 with per-step projection.

    Returns arrays (s, U, W) of positions and velocities in orthonormal
    coordinates.  A per-step constraint violation above ``drift_tol`` (before
    projection) raises ConstraintDriftError.
    """
    u = to_ortho(X0)
    v = tangent_projection(u, to_ortho(V0))
    h = s_max / steps
    S, U, W = [0.0], [u.copy()], [v.copy()]

    def f(y):
        uu, vv = y[:27], y[27:]
        return np.concatenate([vv, _accel(uu, vv)])

    y = np.concatenate([u, v])
    for k in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        g, _, _ = _constraints(y[:27])
        drift = float(np.max(np.abs(g)))
        if drift > drift_tol:
            raise ConstraintDriftError(f"constraint drift {drift:.3e} at s={(k + 1) * h:.6f}")
        u = _project_point(y[:27])
        v = tangent_projection(u, y[27:])
        y = np.concatenate([u, v])
        S.append((k + 1) * h)
        U.append(u.copy())
        W.append(v.copy())
    return np.array(S), np.array(U), np.array(W)


def _phi_ortho_eval(a, b, c):
    return float(np.einsum("ijk,i,j,k->", phi_ortho(), a, b, c))


def embedded_geodesic_check(A: AlbertElement, X0: AlbertElement, V0: AlbertElement,
                            s_max: float = np.pi, steps: int = 2000, quantity: str = "ka"):
    """max_s |phi(g', g', A) - phi(V0, V0, A)| along the embedded geodesic.

    With ``quantity="metric"`` the squared speed is monitored instead.
    """
    if quantity == "ka":
        t = float(trace(A))
        if abs(t) > 1e-12:
            raise ValueError("A must be trace-free")
    a = to_ortho(A)
    _, _, W = geodesic(X0, V0, s_max, steps)
    if quantity == "metric":
        vals = np.einsum("ij,ij->i", W, W)
    else:
        Ta = np.tensordot(phi_ortho(), a, axes=([2], [0]))
        vals = np.einsum("ij,jk,ik->i", W, Ta, W)
    return float(np.max(np.abs(vals - vals[0])))


def random_tangent(X: AlbertElement, rng, unit=True) -> AlbertElement:
    u = to_ortho(X)
    v = tangent_projection(u, rng.standard_normal(27))
    if unit:
        v = v / np.linalg.norm(v)
    return from_ortho(v)


def random_cayley_point(rng, t_max=1.5) -> AlbertElement:
    """Endpoint of an embedded geodesic from E in a random direction."""
    E = E_point(exact=False)
    V = random_tangent(E, rng)
    t = float(rng.uniform(0.1, t_max))
    _, U, _ = geodesic(E, V, t, max(50, int(400 * t)))
    return from_ortho(U[-1])


def random_trace_free(rng, even=False) -> AlbertElement:
    v = rng.standard_normal(27)
    if even:
        v[11:] = 0.0
    v[:3] -= v[:3].mean()
    return AlbertElement(v)


# ---------------------------------------------------------------------------
# curvature of the embedding at E
# ---------------------------------------------------------------------------

def second_fundamental_form_at_E():
    """II(e_a, e_b) for an orthonormal tangent frame at E, shape (16, 16, 27)."""
    u = to_ortho(E_point(exact=False))
    frame = np.array([to_ortho(V) for V in tangent_basis_at_E(exact=False)])
    frame = frame / np.linalg.norm(frame, axis=1)[:, None]
    _, J, _ = _constraints(u)
    T = phi_ortho()
    II = np.zeros((16, 16, 27))
    pinv = np.linalg.pinv(J, rcond=1e-10)
    for a in range(16):
        Ta = np.tensordot(T, frame[a], axes=([2], [0]))
        for b in range(16):
            h = np.concatenate([2.0 * (Ta @ frame[b]), [0.0]])
            II[a, b] = -pinv @ h
    return II


def embedded_curvature_at_E():
    """R[a,b,c,d] = <R(e_a, e_b) e_c, e_d> from the Gauss equation in the frame at E."""
    II = second_fundamental_form_at_E()
    G = np.einsum("abk,cdk->abcd", II, II)   # <II(a,b), II(c,d)>
    # <R(X,Y)Z,W> = <II(Y,Z), II(X,W)> - <II(X,Z), II(Y,W)>
    return np.einsum("bcad->abcd", G) - np.einsum("acbd->abcd", G)
