"""Exact sparse integer linear algebra over Q.

Ranks are computed modulo word-size primes after splitting the matrix into
connected blocks (rows and columns linked by nonzero entries).  Tall blocks
are first compressed by a random integer matrix, which can only lower the
rank, so every modular rank is a certified lower bound on the rank over Q.
Nullspace bases are rebuilt from several modular reduced echelon forms by
Chinese remaindering and rational reconstruction, then checked by exact
integer multiplication; an exhibited nullspace certifies the upper bound.
"""

from __future__ import annotations

import os
import random
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from sympy import isprime

INT64_SAFE = 2**62
DENSE_LIMIT = 64


class CertificationError(RuntimeError):
    """Raised when a modular result cannot be certified over Q."""


def _to_int_array(values):
    values = list(values)
    big = any(abs(int(v)) >= INT64_SAFE for v in values)
    if big:
        return np.array([int(v) for v in values], dtype=object)
    return np.array([int(v) for v in values], dtype=np.int64)


class SparseIntMatrix:
    """Compressed sparse row integer matrix.

    ``data`` is int64 when every entry fits, otherwise an object array of
    Python ints.  Explicit zeros are removed and each row is sorted by column.
    """

    def __init__(self, indptr, indices, data, width):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = data
        self.width = int(width)

    @property
    def nrows(self):
        return len(self.indptr) - 1

    @property
    def nnz(self):
        return len(self.indices)

    @property
    def shape(self):
        return (self.nrows, self.width)

    @classmethod
    def from_triplets(cls, rows, cols, vals, nrows, width):
        """Build from COO triplets; duplicates are summed and zeros dropped."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if isinstance(vals, np.ndarray) and vals.dtype != object:
            vals = vals.astype(np.int64)
        else:
            vals = _to_int_array(vals)
        if len(rows):
            if rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= width:
                raise ValueError("triplet index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            new = np.ones(len(rows), dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            if vals.dtype == object:
                sums = np.array([sum(vals[a:b]) for a, b in zip(starts, list(starts[1:]) + [len(vals)])],
                                dtype=object)
            else:
                sums = np.add.reduceat(vals, starts)
            rows, cols, vals = rows[starts], cols[starts], sums
            keep = vals != 0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        indptr = np.zeros(nrows + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(indptr, cols, vals, width)

    @classmethod
    def from_rows(cls, rows, width):
        """Build from a list of ``{col: value}`` dicts or dense sequences."""
        r, c, v = [], [], []
        for i, row in enumerate(rows):
            items = row.items() if isinstance(row, dict) else enumerate(row)
            for j, x in items:
                if x:
                    r.append(i)
                    c.append(j)
                    v.append(int(x))
        return cls.from_triplets(r, c, _to_int_array(v) if v else np.zeros(0, np.int64), len(rows), width)

    @classmethod
    def from_dense(cls, A):
        A = np.asarray(A)
        rows, cols = np.nonzero(A)
        vals = A[rows, cols]
        if vals.dtype != object:
            vals = vals.astype(np.int64)
        return cls.from_triplets(rows, cols, vals, A.shape[0], A.shape[1])

    @classmethod
    def vstack(cls, mats):
        width = mats[0].width
        if any(m.width != width for m in mats):
            raise ValueError("width mismatch")
        indptr = [np.zeros(1, np.int64)]
        off = 0
        for m in mats:
            indptr.append(m.indptr[1:] + off)
            off += m.nnz
        obj = any(m.data.dtype == object for m in mats)
        data = np.concatenate([m.data.astype(object) if obj else m.data for m in mats]) if mats else np.zeros(0, np.int64)
        indices = np.concatenate([m.indices for m in mats]) if mats else np.zeros(0, np.int64)
        return cls(np.concatenate(indptr), indices, data, width)

    def row(self, i):
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b], self.data[a:b]

    def row_ids(self):
        return np.repeat(np.arange(self.nrows, dtype=np.int64), np.diff(self.indptr))

    def to_dense(self):
        A = np.zeros(self.shape, dtype=self.data.dtype if self.data.dtype == object else np.int64)
        if A.dtype == object:
            A[:] = 0
        A[self.row_ids(), self.indices] = self.data
        return A

    def max_abs(self):
        if self.nnz == 0:
            return 0
        return int(max(abs(int(self.data.max())), abs(int(self.data.min()))))

    def mod(self, p):
        """scipy CSR copy with entries reduced to [0, p)."""
        if self.data.dtype == object:
            d = np.array([int(x) % p for x in self.data], dtype=np.int64)
        else:
            d = self.data % p
        return sp.csr_matrix((d, self.indices, self.indptr), shape=self.shape)

    def to_scipy(self):
        if self.data.dtype == object:
            raise OverflowError("entries exceed int64")
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def select_rows(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        lens = self.indptr[rows + 1] - self.indptr[rows]
        indptr = np.concatenate([[0], np.cumsum(lens)])
        idx = np.concatenate([np.arange(self.indptr[r], self.indptr[r + 1]) for r in rows]) if len(rows) else np.zeros(0, np.int64)
        idx = idx.astype(np.int64)
        return SparseIntMatrix(indptr, self.indices[idx], self.data[idx], self.width)

    def submatrix(self, rows, cols):
        """Rows ``rows`` restricted to ``cols`` (renumbered 0..len(cols)-1)."""
        cols = np.asarray(cols, dtype=np.int64)
        colmap = np.full(self.width, -1, dtype=np.int64)
        colmap[cols] = np.arange(len(cols))
        sub = self.select_rows(rows)
        newc = colmap[sub.indices]
        keep = newc >= 0
        rid = sub.row_ids()[keep]
        return SparseIntMatrix.from_triplets(rid, newc[keep], sub.data[keep], len(rows), len(cols))

    def matvec_exact(self, vectors):
        """Exact product M @ B for an integer matrix B (width x k).

        Uses int64 when a bound rules out overflow and splits B into 30-bit
        limbs otherwise.  Returns an object or int64 array.
        """
        B = np.asarray(vectors)
        if B.ndim == 1:
            B = B[:, None]
        if B.shape[0] != self.width:
            raise ValueError("width mismatch")
        if self.nnz == 0:
            return np.zeros((self.nrows, B.shape[1]), dtype=np.int64)
        if self.data.dtype == object:
            return _dense_exact_product(self, B)
        M = self.to_scipy()
        rowsum = int(np.max(np.add.reduceat(np.abs(self.data), self.indptr[:-1][np.diff(self.indptr) > 0]))) if self.nnz else 0
        bmax = _max_abs(B)
        if rowsum * bmax < INT64_SAFE:
            return np.asarray(M @ B.astype(np.int64))
        if rowsum >= 2**31:
            return _dense_exact_product(self, B)
        limbs = _split_limbs(B, 30)
        total = np.zeros((self.nrows, B.shape[1]), dtype=object)
        for t, limb in enumerate(limbs):
            total = total + np.asarray(M @ limb).astype(object) * (1 << (30 * t))
        return total

    def __eq__(self, other):
        if not isinstance(other, SparseIntMatrix) or self.shape != other.shape:
            return False
        return (np.array_equal(self.indptr, other.indptr) and np.array_equal(self.indices, other.indices)
                and all(int(a) == int(b) for a, b in zip(self.data, other.data)))

    def __repr__(self):
        return f"SparseIntMatrix({self.nrows}x{self.width}, nnz={self.nnz})"


def _max_abs(B):
    if B.size == 0:
        return 0
    if B.dtype == object:
        return max(int(np.max(B)), -int(np.min(B)))
    return int(np.max(np.abs(B)))


def _split_limbs(B, bits):
    """Signed base-2**bits digits of an integer array, as int64 arrays."""
    Bo = B.astype(object)
    limbs = []
    base = 1 << bits
    while True:
        if all(int(x) == 0 for x in Bo.ravel()):
            break
        q = np.vectorize(lambda x: x // base if x >= 0 else -((-x) // base), otypes=[object])(Bo)
        r = Bo - q * base
        limbs.append(r.astype(np.int64))
        Bo = q
    return limbs or [np.zeros(B.shape, dtype=np.int64)]


def _dense_exact_product(M, B):
    out = np.zeros((M.nrows, B.shape[1]), dtype=object)
    Bo = B.astype(object)
    for i in range(M.nrows):
        cols, vals = M.row(i)
        acc = np.zeros(B.shape[1], dtype=object)
        for c, v in zip(cols, vals):
            acc = acc + int(v) * Bo[c]
        out[i] = acc
    return out


# ---------------------------------------------------------------------------
# primes and modular kernels
# ---------------------------------------------------------------------------

def prime_stream(seed, lo=2**30, hi=2**31):
    """Deterministic stream of distinct primes in [lo, hi) drawn from ``seed``."""
    rng = random.Random(seed)
    seen = set()
    while True:
        c = rng.randrange(lo, hi) | 1
        if c not in seen and isprime(c):
            seen.add(c)
            yield c


def rref_mod_p(A, p):
    """Reduced row echelon form of an int64 matrix modulo p < 2**31.

    Returns (R, pivots) with R holding the nonzero rows only.  Pivots are the
    leftmost possible columns, so the result is canonical.
    """
    A = np.array(A, dtype=np.int64) % p
    h, w = A.shape
    r = 0
    pivots = []
    for c in range(w):
        if r == h:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        i = r + nz[0]
        if i != r:
            A[[r, i]] = A[[i, r]]
        inv = pow(int(A[r, c]), -1, p)
        A[r, c:] = (A[r, c:] * inv) % p
        col = A[:, c].copy()
        col[r] = 0
        rows = np.flatnonzero(col)
        if rows.size:
            A[np.ix_(rows, np.arange(c, w))] = (A[np.ix_(rows, np.arange(c, w))]
                                               - (col[rows, None] * A[r, c:]) % p) % p
        pivots.append(c)
        r += 1
    return A[:r], pivots


def rank_mod_p(A, p):
    """Rank of a dense int64 matrix modulo p (row echelon, no back substitution)."""
    A = np.array(A, dtype=np.int64) % p
    h, w = A.shape
    r = 0
    for c in range(w):
        if r == h:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        i = r + nz[0]
        if i != r:
            A[[r, i]] = A[[i, r]]
        inv = pow(int(A[r, c]), -1, p)
        A[r, c:] = (A[r, c:] * inv) % p
        below = r + 1 + np.flatnonzero(A[r + 1:, c])
        if below.size:
            A[np.ix_(below, np.arange(c, w))] = (A[np.ix_(below, np.arange(c, w))]
                                                - (A[below, c][:, None] * A[r, c:]) % p) % p
        r += 1
    return r


def rational_reconstruct(a, m):
    """Return Fraction n/d with n/d = a mod m, |n|, d <= sqrt(m/2), or None."""
    a %= m
    bound = isqrt(m // 2)
    r0, r1 = m, a
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    if s1 < 0:
        r1, s1 = -r1, -s1
    if gcd(r1, s1) != 1:
        return None
    return Fraction(r1, s1)


# ---------------------------------------------------------------------------
# block structure and compression
# ---------------------------------------------------------------------------

def column_blocks(M: SparseIntMatrix):
    """Split columns into connected blocks; returns list of (rows, cols) arrays.

    Columns touched by no row form singleton blocks with no rows.
    """
    h, w = M.shape
    if M.nnz == 0:
        return [(np.zeros(0, np.int64), np.array([j])) for j in range(w)]
    rid = M.row_ids()
    graph = sp.coo_matrix((np.ones(M.nnz, dtype=np.int8), (rid, h + M.indices)), shape=(h + w, h + w))
    _, labels = connected_components(graph, directed=False)
    rlab, clab = labels[:h], labels[h:]
    rorder = np.argsort(rlab, kind="stable")
    corder = np.argsort(clab, kind="stable")
    blocks = {}
    for lab in np.unique(clab):
        blocks[lab] = None
    rs = np.split(rorder, np.flatnonzero(np.diff(rlab[rorder])) + 1) if h else []
    cs = np.split(corder, np.flatnonzero(np.diff(clab[corder])) + 1)
    rows_of = {int(rlab[r[0]]): r for r in rs if len(r)}
    out = []
    for c in cs:
        lab = int(clab[c[0]])
        out.append((rows_of.get(lab, np.zeros(0, np.int64)), c))
    out.sort(key=lambda rc: int(rc[1][0]))
    return out


def _compress(M: SparseIntMatrix, k, rng):
    """Exact integer matrix C @ M with C a random k x h matrix of small ints.

    Returns an object or int64 dense array.  If M is short already, its rows
    are returned densely without mixing.
    """
    h, w = M.shape
    if h <= k:
        return M.to_dense()
    C = rng.integers(-2**12, 2**12, size=(k, h), dtype=np.int64)
    if M.data.dtype != object:
        colsum = np.zeros(w, dtype=np.float64)
        np.add.at(colsum, M.indices, np.abs(M.data).astype(np.float64))
        if float(colsum.max(initial=0)) * 2**12 < 2**61:
            return np.asarray((M.to_scipy().T @ C.T).T)
    B = np.zeros((k, w), dtype=object)
    B[:] = 0
    Co = C.astype(object)
    for i in range(h):
        cols, vals = M.row(i)
        for c, v in zip(cols, vals):
            B[:, c] = B[:, c] + Co[:, i] * int(v)
    return B


def _reduce(Z, p):
    if Z.dtype == object:
        return np.array([[int(x) % p for x in row] for row in Z], dtype=np.int64).reshape(Z.shape)
    return Z % p


def threads():
    try:
        return max(1, int(os.environ.get("KILLING_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    t = threads()
    if t == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=t) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------

def _block_rank_mod(M, rows, cols, p, rng, extra=8):
    if len(rows) == 0:
        return 0
    sub = M.submatrix(rows, cols)
    Z = _compress(sub, len(cols) + extra, rng)
    return rank_mod_p(_reduce(Z, p), p)


def rank_modular(M: SparseIntMatrix, primes: int = 3, seed: int = 0, retries: int = 3):
    """Rank over Q from ranks modulo ``primes`` independent primes.

    Every modular rank is a lower bound for the rank over Q.  All primes must
    agree; on disagreement the computation is repeated with fresh primes, and
    after ``retries`` failures a CertificationError is raised.
    """
    if primes < 2:
        raise ValueError("primes must be >= 2")
    blocks = column_blocks(M)
    for attempt in range(retries):
        stream = prime_stream((seed, attempt).__hash__() & 0xFFFFFFFF if attempt else seed)
        ps = [next(stream) for _ in range(primes)]

        def one(p):
            rng = np.random.default_rng([seed, attempt, p])
            return sum(_block_rank_mod(M, r, c, p, rng) for r, c in blocks)

        ranks = _map(one, ps)
        if len(set(ranks)) == 1:
            return ranks[0]
    raise CertificationError(f"modular ranks disagree after {retries} attempts: {ranks}")


def bareiss_rank(rows):
    """Exact rank by fraction-free (Bareiss) elimination on Python ints."""
    A = [[int(x) for x in r] for r in rows]
    if not A:
        return 0
    h, w = len(A), len(A[0])
    r = 0
    prev = 1
    for c in range(w):
        piv = next((i for i in range(r, h) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(r + 1, h):
            for j in range(c + 1, w):
                A[i][j] = (A[r][c] * A[i][j] - A[i][c] * A[r][j]) // prev
            A[i][c] = 0
        prev = A[r][c]
        r += 1
        if r == h:
            break
    return r


def float_rank(M: SparseIntMatrix, rel_tol=1e-8, max_width=2000):
    """SVD rank with tolerance ``rel_tol * sigma_max``; a smoke test only."""
    if M.width > max_width:
        raise ValueError("float cross-check limited to width <= %d" % max_width)
    if M.nnz == 0:
        return 0
    if M.nrows > 3 * M.width:
        rng = np.random.default_rng(0)
        G = rng.standard_normal((M.width + 16, M.nrows))
        A = np.asarray((M.to_scipy().astype(np.float64).T @ G.T).T) if M.data.dtype != object else G @ M.to_dense().astype(float)
    else:
        A = M.to_dense().astype(np.float64)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


# ---------------------------------------------------------------------------
# nullspace
# ---------------------------------------------------------------------------

@dataclass
class NullspaceResult:
    """Certified rank and nullspace basis (rows of ``basis``)."""
    width: int
    rank: int
    basis: SparseIntMatrix
    primes_used: int = 0
    blocks: int = 0
    seed: int = 0
    pivots: list = field(default_factory=list)

    @property
    def dim(self):
        return self.basis.nrows


def _block_nullspace(sub: SparseIntMatrix, seed, max_primes=60, retries=3):
    """Certified nullspace of a single block. Returns (rank, int vectors, pivots, nprimes)."""
    h, w = sub.shape
    if h == 0:
        return 0, [np.eye(w, dtype=np.int64)[j].astype(object) for j in range(w)], [], 0
    for attempt in range(retries):
        rng = np.random.default_rng([seed, attempt, w, h])
        Z = _compress(sub, w + 8, rng)
        stream = prime_stream(hash((seed, attempt, w, h)) & 0xFFFFFFFF)
        best = None
        residues = []
        modulus = 1
        crt = None
        last = None
        used = 0
        for _ in range(max_primes):
            p = next(stream)
            used += 1
            R, piv = rref_mod_p(_reduce(Z, p), p)
            key = (len(piv), [-c for c in piv])
            if best is None or key > best:
                best = key
                pivots = piv
                free = [c for c in range(w) if c not in set(piv)]
                crt = None
                modulus = 1
                last = None
            elif key < best:
                continue
            r = len(pivots)
            if r == 0 or not free:
                entries = np.zeros((r, len(free)), dtype=object)
            else:
                entries = R[:r][:, free].astype(object)
            if crt is None:
                crt = entries.copy()
                modulus = p
            else:
                # x = crt mod modulus, x = entries mod p
                inv = pow(modulus, -1, p)
                t = ((entries - crt) % p) * inv % p
                crt = crt + modulus * t
                modulus *= p
            rec = _reconstruct_all(crt, modulus)
            if rec is None:
                continue
            if last is None or not _same(rec, last):
                last = rec
                continue
            vecs = _vectors_from_rref(rec, pivots, free, w)
            if _verify(sub, vecs):
                return r, vecs, pivots, used
            last = rec
        # fall through: retry with a fresh compression and primes
    raise CertificationError("nullspace verification failed after %d attempts" % retries)


def _reconstruct_all(crt, m):
    out = np.empty(crt.shape, dtype=object)
    for idx, a in np.ndenumerate(crt):
        f = rational_reconstruct(int(a), m)
        if f is None:
            return None
        out[idx] = f
    return out


def _same(a, b):
    return a.shape == b.shape and all(x == y for x, y in zip(a.ravel(), b.ravel()))


def _vectors_from_rref(rec, pivots, free, w):
    vecs = []
    for j, f in enumerate(free):
        col = [rec[i, j] for i in range(len(pivots))]
        den = 1
        for x in col:
            den = den * x.denominator // gcd(den, x.denominator)
        v = np.zeros(w, dtype=object)
        v[:] = 0
        v[f] = den
        for i, c in enumerate(pivots):
            v[c] = -int(col[i] * den)
        g = 0
        for x in v:
            g = gcd(g, int(x))
        if g > 1:
            v = v // g
        lead = next(int(x) for x in v if x != 0)
        if lead < 0:
            v = -v
        vecs.append(v)
    return vecs


def _verify(sub, vecs):
    if not vecs:
        return True
    B = np.stack(vecs, axis=1)
    res = sub.matvec_exact(B)
    return not np.any(res != 0)


def nullspace(M: SparseIntMatrix, seed: int = 0, max_primes: int = 60) -> NullspaceResult:
    """Certified rank and integer nullspace basis of M.

    Each basis vector is supported on one connected block and has been
    multiplied against M exactly.  The rank is width minus the basis size;
    the modular echelon form of each block gives the matching lower bound.
    """
    blocks = column_blocks(M)

    def solve(rc):
        rows, cols = rc
        sub = M.submatrix(rows, cols)
        return _block_nullspace(sub, seed, max_primes=max_primes)

    results = _map(solve, blocks)
    r_all, c_all, v_all = [], [], []
    rank = 0
    nprimes = 0
    pivots = []
    k = 0
    for (rows, cols), (r, vecs, piv, used) in zip(blocks, results):
        rank += r
        nprimes = max(nprimes, used)
        pivots.extend(int(cols[c]) for c in piv)
        for v in vecs:
            nz = np.flatnonzero(v != 0)
            r_all.extend([k] * len(nz))
            c_all.extend(int(cols[j]) for j in nz)
            v_all.extend(int(v[j]) for j in nz)
            k += 1
    # order basis vectors by their leading (free) column for determinism
    basis = SparseIntMatrix.from_triplets(r_all, c_all, _to_int_array(v_all) if v_all else np.zeros(0, np.int64), k, M.width)
    basis = _sort_rows_by_free(basis, set(pivots))
    return NullspaceResult(M.width, rank, basis, nprimes, len(blocks), seed, sorted(pivots))


def _sort_rows_by_free(B: SparseIntMatrix, pivset):
    keys = []
    for i in range(B.nrows):
        cols, _ = B.row(i)
        free = [int(c) for c in cols if int(c) not in pivset]
        keys.append(min(free) if free else -1)
    order = np.argsort(np.array(keys), kind="stable")
    return B.select_rows(order)


def residual(M: SparseIntMatrix, v):
    """Exact product M @ v for a single integer vector."""
    return M.matvec_exact(np.asarray(v, dtype=object).reshape(-1, 1))[:, 0]


# ---------------------------------------------------------------------------
# spans
# ---------------------------------------------------------------------------

def span_rank(vectors, primes: int = 3, seed: int = 0, certify: bool = False):
    """Rank of the stacked integer vectors.

    With ``certify`` the relations among the vectors are computed exactly
    and verified, so the rank is certified from both sides.
    """
    M = vectors if isinstance(vectors, SparseIntMatrix) else SparseIntMatrix.from_rows(list(vectors), len(vectors[0]))
    if M.nrows == 0:
        return 0
    if certify:
        T = transpose(M)
        rel = nullspace(T, seed=seed)
        return M.nrows - rel.dim
    return rank_modular(M, primes=primes, seed=seed)


def transpose(M: SparseIntMatrix) -> SparseIntMatrix:
    return SparseIntMatrix.from_triplets(M.indices, M.row_ids(), M.data, M.width, M.nrows)


def dedup_rows(M: SparseIntMatrix) -> SparseIntMatrix:
    """Drop zero rows and rows equal to an earlier row up to a rational factor."""
    seen = set()
    keep = []
    for i in range(M.nrows):
        cols, vals = M.row(i)
        if len(cols) == 0:
            continue
        v = [int(x) for x in vals]
        g = 0
        for x in v:
            g = gcd(g, x)
        if v[0] < 0:
            g = -g
        key = (tuple(int(c) for c in cols), tuple(x // g for x in v))
        if key in seen:
            continue
        seen.add(key)
        keep.append(i)
    return M.select_rows(keep)


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def write_triplets(M: SparseIntMatrix, path):
    """Binary snapshot: width, row count, then (row, col, signed bytes) records."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<qq", M.width, M.nrows))
        rid = M.row_ids()
        for r, c, v in zip(rid, M.indices, M.data):
            v = int(v)
            nb = (v.bit_length() + 8) // 8
            fh.write(struct.pack("<qqi", int(r), int(c), nb))
            fh.write(v.to_bytes(nb, "little", signed=True))


def read_triplets(path) -> SparseIntMatrix:
    with open(path, "rb") as fh:
        width, nrows = struct.unpack("<qq", fh.read(16))
        r, c, v = [], [], []
        while True:
            head = fh.read(20)
            if not head:
                break
            ri, ci, nb = struct.unpack("<qqi", head)
            r.append(ri)
            c.append(ci)
            v.append(int.from_bytes(fh.read(nb), "little", signed=True))
    return SparseIntMatrix.from_triplets(r, c, _to_int_array(v) if v else np.zeros(0, np.int64), nrows, width)
