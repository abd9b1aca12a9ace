"""Symmetric tensors, symmetrizers and the Bianchi-type subspace.

A rank-2 quadratic top-slot coefficient is a (0,4)-tensor K with
K(X,Y,Z,W) symmetric in (X,Y) and in (Z,W).  It is stored by its canonical
entries K[i,j,k,l] with i <= j, k <= l, the pair (i,j) ordered before (k,l)
lexicographically.  Its momentum polynomial is K(X,X,P,P).
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction
from functools import lru_cache
from math import factorial, gcd

import numpy as np

from .linalg import SparseIntMatrix


# ---------------------------------------------------------------------------
# index helpers
# ---------------------------------------------------------------------------

def k2_space_dim(n: int) -> int:
    """Dimension n^2 (n^2 - 1) / 12 of the Bianchi-type subspace."""
    if n < 1:
        raise ValueError("n must be positive")
    return n * n * (n * n - 1) // 12


@lru_cache(maxsize=None)
def multisets(n: int, d: int):
    """Sorted multi-indices of length d over range(n), in lexicographic order."""
    return tuple(itertools.combinations_with_replacement(range(n), d))


@lru_cache(maxsize=None)
def multiset_index(n: int, d: int):
    return {a: i for i, a in enumerate(multisets(n, d))}


def pairs(n: int):
    return multisets(n, 2)


def arrangements(alpha) -> int:
    """Number of distinct orderings of the multi-index ``alpha``."""
    out = factorial(len(alpha))
    for v in set(alpha):
        out //= factorial(alpha.count(v))
    return out


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(x)


# ---------------------------------------------------------------------------
# tensors
# ---------------------------------------------------------------------------

class SymTensorRankD:
    """Constant (0,2d)-tensor symmetric in its first d and its last d slots.

    ``coeffs`` maps (alpha, beta), two sorted multi-indices of length d, to a
    rational entry.  Zero entries are not stored.
    """

    def __init__(self, n: int, d: int, coeffs=None):
        self.n = int(n)
        self.d = int(d)
        clean = {}
        for (a, b), v in (coeffs or {}).items():
            a, b = tuple(a), tuple(b)
            if len(a) != d or len(b) != d:
                raise ValueError("multi-index length must equal d")
            if list(a) != sorted(a) or list(b) != sorted(b):
                raise ValueError("multi-indices must be sorted")
            if any(i < 0 or i >= n for i in a + b):
                raise ValueError("index out of range")
            v = _frac(v)
            if v:
                clean[(a, b)] = v
        self.coeffs = clean

    # coordinates -------------------------------------------------------
    @property
    def size(self):
        return len(multisets(self.n, self.d)) ** 2

    def to_vector(self):
        """Coordinates in the order (alpha, beta) with alpha major."""
        idx = multiset_index(self.n, self.d)
        nd = len(idx)
        v = np.zeros(nd * nd, dtype=object)
        v[:] = Fraction(0)
        for (a, b), c in self.coeffs.items():
            v[idx[a] * nd + idx[b]] = c
        return v

    @classmethod
    def from_vector(cls, n, d, vec):
        ms = multisets(n, d)
        nd = len(ms)
        if len(vec) != nd * nd:
            raise ValueError("coordinate vector has wrong length")
        return cls(n, d, {(ms[i // nd], ms[i % nd]): vec[i] for i in range(len(vec)) if vec[i]})

    def entry(self, idx):
        """Entry at an arbitrary (unsorted) index tuple of length 2d."""
        a = tuple(sorted(idx[:self.d]))
        b = tuple(sorted(idx[self.d:]))
        return self.coeffs.get((a, b), Fraction(0))

    def full_array(self, exact=False):
        """Dense array of shape (n,)*2d, float by default or Fraction objects."""
        shape = (self.n,) * (2 * self.d)
        A = np.zeros(shape, dtype=object if exact else np.float64)
        if exact:
            A[...] = Fraction(0)
        for (a, b), c in self.coeffs.items():
            val = c if exact else float(c)
            for pa in set(itertools.permutations(a)):
                for pb in set(itertools.permutations(b)):
                    A[pa + pb] = val
        return A

    def poly_terms(self):
        """Monomial coefficients of K(X^d, P^d) as {(alpha, beta): coefficient}."""
        return {(a, b): c * arrangements(a) * arrangements(b) for (a, b), c in self.coeffs.items()}

    def scaled(self, c):
        c = _frac(c)
        return type(self)(self.n, self.d, {k: v * c for k, v in self.coeffs.items()})

    def __add__(self, other):
        if (self.n, self.d) != (other.n, other.d):
            raise ValueError("shape mismatch")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + v
        return type(self)(self.n, self.d, out)

    def __eq__(self, other):
        return (isinstance(other, SymTensorRankD) and (self.n, self.d) == (other.n, other.d)
                and self.coeffs == other.coeffs)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, d={self.d}, nnz={len(self.coeffs)})"


class SymPairTensor(SymTensorRankD):
    """(0,4)-tensor symmetric in slots (1,2) and in slots (3,4)."""

    def __init__(self, n: int, coeffs=None):
        conv = {}
        for key, v in (coeffs or {}).items():
            if len(key) == 4:
                i, j, k, l = key
                if i > j or k > l:
                    raise ValueError(f"non-canonical index quadruple {key}")
                conv[((i, j), (k, l))] = v
            else:
                conv[key] = v
        super().__init__(n, 2, conv)

    @classmethod
    def from_vector(cls, n, vec):
        t = SymTensorRankD.from_vector(n, 2, vec)
        return cls(n, t.coeffs)

    def scaled(self, c):
        c = _frac(c)
        return SymPairTensor(self.n, {k: v * c for k, v in self.coeffs.items()})

    def __add__(self, other):
        s = SymTensorRankD.__add__(self, other)
        return SymPairTensor(self.n, s.coeffs)

    @classmethod
    def from_polynomial(cls, n, terms):
        """Tensor whose momentum polynomial K(X,X,P,P) has the given terms.

        ``terms`` maps ((i,j),(k,l)) sorted pairs to the coefficient of
        x_i x_j p_k p_l.
        """
        out = {}
        for (a, b), c in terms.items():
            a, b = tuple(sorted(a)), tuple(sorted(b))
            c = _frac(c) / (arrangements(a) * arrangements(b))
            out[(a, b)] = out.get((a, b), Fraction(0)) + c
        return cls(n, out)


# ---------------------------------------------------------------------------
# Bianchi subspace
# ---------------------------------------------------------------------------

def _rref_fraction(rows, ncols):
    """Reduced row echelon form over Q with leftmost pivots."""
    A = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    return A[:r], pivots


def _primitive(vec):
    den = 1
    for x in vec:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, x)
    return [x // g for x in ints] if g else ints


@lru_cache(maxsize=None)
def _bianchi_data(n: int):
    """Basis matrix (rows = basis vectors in canonical coordinates) and free columns.

    The constraint K(X,X,X,P)=0 only couples canonical entries with the same
    index multiset, so the nullspace is computed block by block with exact
    rational elimination.  Within a block columns keep the global canonical
    order and pivots are chosen leftmost, which makes the basis canonical.
    """
    ps = pairs(n)
    np2 = len(ps)
    blocks = {}
    for a_i, a in enumerate(ps):
        for b_i, b in enumerate(ps):
            key = tuple(sorted(a + b))
            blocks.setdefault(key, []).append(a_i * np2 + b_i)
    rows, cols, vals = [], [], []
    free_cols = []
    k = 0
    for key in sorted(blocks):
        cidx = sorted(blocks[key])
        # constraint rows: coefficient of x^{triple} p_m in sum_k x_k d/dp_k f
        eqs = {}
        for ci, col in enumerate(cidx):
            (i, j), (kk, ll) = ps[col // np2], ps[col % np2]
            mult = arrangements((i, j)) * arrangements((kk, ll))
            for moved, kept in ((kk, ll), (ll, kk)):
                tkey = (tuple(sorted((i, j, moved))), kept)
                eqs.setdefault(tkey, [0] * len(cidx))[ci] += mult
        R, piv = _rref_fraction([eqs[t] for t in sorted(eqs)], len(cidx))
        for f in range(len(cidx)):
            if f in piv:
                continue
            vec = [Fraction(0)] * len(cidx)
            vec[f] = Fraction(1)
            for r, pc in enumerate(piv):
                vec[pc] = -R[r][f]
            ints = _primitive(vec)
            if ints[f] < 0:
                ints = [-x for x in ints]
            for ci, v in enumerate(ints):
                if v:
                    rows.append(k)
                    cols.append(cidx[ci])
                    vals.append(v)
            free_cols.append(cidx[f])
            k += 1
    order = np.argsort(free_cols, kind="stable")
    rank_of = np.empty(k, dtype=np.int64)
    rank_of[order] = np.arange(k)
    rows = [int(rank_of[r]) for r in rows]
    B = SparseIntMatrix.from_triplets(rows, cols, np.array(vals, dtype=np.int64), k, np2 * np2)
    free = np.array(sorted(free_cols), dtype=np.int64)
    scale = np.array([int(B.to_scipy()[i, free[i]]) for i in range(k)], dtype=np.int64) if k else np.zeros(0, np.int64)
    return B, free, scale


def bianchi_basis_matrix(n: int) -> SparseIntMatrix:
    """Basis of the Bianchi subspace as rows over canonical coordinates."""
    return _bianchi_data(n)[0]


def bianchi_basis(n: int):
    """Integer basis of the Bianchi subspace as SymPairTensors."""
    B = bianchi_basis_matrix(n)
    out = []
    for i in range(B.nrows):
        cols, vals = B.row(i)
        vec = np.zeros(B.width, dtype=object)
        vec[:] = 0
        vec[cols] = vals
        out.append(SymPairTensor.from_vector(n, vec))
    return out


class BianchiTensor:
    """Element of the Bianchi subspace given by coordinates in ``bianchi_basis(n)``."""

    def __init__(self, n: int, coords):
        self.n = int(n)
        coords = [_frac(c) for c in coords]
        if len(coords) != k2_space_dim(n):
            raise ValueError("coordinate vector has wrong length")
        self.coords = tuple(coords)

    def to_sympair(self) -> SymPairTensor:
        B = bianchi_basis_matrix(self.n)
        vec = np.zeros(B.width, dtype=object)
        vec[:] = Fraction(0)
        for i, c in enumerate(self.coords):
            if c:
                cols, vals = B.row(i)
                for col, v in zip(cols, vals):
                    vec[col] += c * int(v)
        return SymPairTensor.from_vector(self.n, vec)

    def canonical_vector(self):
        return self.to_sympair().to_vector()

    @classmethod
    def from_sympair(cls, T: SymPairTensor, check=True):
        """Coordinates of T, read off the free columns; T must lie in the subspace."""
        B, free, scale = _bianchi_data(T.n)
        vec = T.to_vector()
        coords = [vec[f] / int(s) for f, s in zip(free, scale)]
        out = cls(T.n, coords)
        if check and out.to_sympair() != T:
            raise ValueError("tensor does not satisfy the Bianchi-type constraint")
        return out

    def scaled(self, c):
        c = _frac(c)
        return BianchiTensor(self.n, [x * c for x in self.coords])

    def __eq__(self, other):
        return isinstance(other, BianchiTensor) and self.n == other.n and self.coords == other.coords

    def __repr__(self):
        return f"BianchiTensor(n={self.n}, nnz={sum(1 for c in self.coords if c)})"


def in_bianchi_subspace(T: SymPairTensor) -> bool:
    try:
        BianchiTensor.from_sympair(T)
    except ValueError:
        return False
    return True


# ---------------------------------------------------------------------------
# evaluation and symmetrization
# ---------------------------------------------------------------------------

def evaluate(K, X, P):
    """K(X,...,X,P,...,P) for a SymTensorRankD, SymPairTensor or BianchiTensor.

    Exact when X and P hold integers or Fractions, float otherwise.
    """
    if isinstance(K, BianchiTensor):
        K = K.to_sympair()
    if len(X) != K.n or len(P) != K.n:
        raise ValueError("dimension mismatch")
    exact = all(isinstance(v, (int, Fraction, np.integer)) for v in list(X) + list(P))
    total = Fraction(0) if exact else 0.0
    for (a, b), c in K.poly_terms().items():
        term = c if exact else float(c)
        for i in a:
            term *= X[i]
        for i in b:
            term *= P[i]
        total += term
    return total


def evaluate_slots(K, vectors):
    """Full multilinear evaluation K(v_1, ..., v_2d) by contraction of the dense array."""
    if isinstance(K, BianchiTensor):
        K = K.to_sympair()
    if len(vectors) != 2 * K.d:
        raise ValueError("wrong number of slot vectors")
    exact = all(isinstance(x, (int, Fraction, np.integer)) for v in vectors for x in v)
    A = K.full_array(exact=exact)
    for v in vectors:
        A = np.tensordot(A, np.array(v, dtype=object if exact else np.float64), axes=([0], [0]))
    return A[()] if isinstance(A, np.ndarray) else A


def symmetrize(T, a: int, b: int):
    """S_{a,b} T: average over permutations of the first a and of the last b slots."""
    T = np.asarray(T)
    if a < 0 or b < 0 or a + b != T.ndim:
        raise ValueError("slot counts must add up to the tensor order")
    exact = T.dtype == object
    acc = None
    for pa in itertools.permutations(range(a)):
        for pb in itertools.permutations(range(a, a + b)):
            t = np.transpose(T, pa + pb)
            acc = t.copy() if acc is None else acc + t
    norm = factorial(a) * factorial(b)
    if exact:
        return acc * Fraction(1, norm)
    return acc / norm


# ---------------------------------------------------------------------------
# JSON exchange
# ---------------------------------------------------------------------------

def tensor_to_json(T) -> str:
    """Exchange format {"n": n, "entries": [[i,j,k,l,"p/q"], ...]} (canonical only)."""
    if isinstance(T, BianchiTensor):
        T = T.to_sympair()
    entries = []
    for (a, b), c in sorted(T.coeffs.items()):
        entries.append(list(a) + list(b) + [str(c)])
    return json.dumps({"n": T.n, "entries": entries})


def tensor_from_json(text):
    """Parse the exchange format; non-canonical or malformed entries are rejected."""
    obj = json.loads(text) if isinstance(text, str) else text
    if not isinstance(obj, dict) or "n" not in obj or "entries" not in obj:
        raise ValueError("expected an object with 'n' and 'entries'")
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise ValueError("'n' must be a positive integer")
    entries = obj["entries"]
    if not entries:
        return SymPairTensor(n)
    width = len(entries[0])
    if width % 2 != 1 or width < 5:
        raise ValueError("entries must hold 2d indices and a value")
    d = (width - 1) // 2
    coeffs = {}
    for e in entries:
        if len(e) != width:
            raise ValueError("inconsistent entry length")
        idx = e[:-1]
        if not all(isinstance(i, int) and 0 <= i < n for i in idx):
            raise ValueError(f"bad index in entry {e}")
        a, b = tuple(idx[:d]), tuple(idx[d:])
        if list(a) != sorted(a) or list(b) != sorted(b):
            raise ValueError(f"non-canonical index tuple {idx}")
        if (a, b) in coeffs:
            raise ValueError(f"duplicate entry {idx}")
        coeffs[(a, b)] = Fraction(str(e[-1]))
    if d == 2:
        return SymPairTensor(n, coeffs)
    return SymTensorRankD(n, d, coeffs)
