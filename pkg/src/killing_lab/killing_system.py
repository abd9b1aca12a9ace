"""Linear systems for top-slot Killing tensors and their solution spaces.

Every integrability condition is a polynomial identity in (X, P) that is
linear in the unknown constant tensor K.  Writing K through its canonical
entries K[alpha, beta] (alpha, beta sorted multi-indices), each identity is
a sum of terms coef * K(Z_1..Z_d ; W_1..W_d) with slot vectors Z, W drawn
from X, P, Y = R(P,X)X and V = R(X,P)P.  The contraction equals
sum_{alpha,beta} K[alpha,beta] G_Z(alpha) G_W(beta), where G(alpha) sums
the slot products over all orderings of alpha.  Each (X,P)-monomial of the
identity gives one integer row.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np
import scipy.sparse as sp

from .catalog import SymmetricSpaceModel
from .linalg import NullspaceResult, SparseIntMatrix, nullspace, rref_mod_p, span_rank, _to_int_array
from .poly import VecPoly, curvature_vecpoly, group_sum, unit_key
from .tensor_core import (BianchiTensor, SymPairTensor, SymTensorRankD, _bianchi_data, arrangements,
                          bianchi_basis_matrix, k2_space_dim, multisets)

CHUNK_TERMS = 6_000_000


# ---------------------------------------------------------------------------
# slot polynomials and group expansions
# ---------------------------------------------------------------------------

def _slot_vectors(space: SymmetricSpaceModel, types):
    n = space.n
    X, P = VecPoly.X(n), VecPoly.P(n)
    out = {}
    for t in set(types):
        if t == "X":
            v = X
        elif t == "P":
            v = P
        elif t == "Y":  # Jacobi operator R_X P = R(P,X)X
            v = curvature_vecpoly(space.R_int, P, X, X)
        elif t == "V":  # R(X,P)P
            v = curvature_vecpoly(space.R_int, X, P, P)
        else:
            raise ValueError(f"unknown slot type {t!r}")
        out[t] = v.components()
    return out


def _outer(a, b):
    xk = (a[0][:, None] + b[0][None, :]).ravel()
    pk = (a[1][:, None] + b[1][None, :]).ravel()
    c = (a[2][:, None] * b[2][None, :]).ravel()
    return group_sum(xk, pk, c)


_ONE = (np.zeros(1, np.uint64), np.zeros(1, np.uint64), np.ones(1, np.int64))


def _power_table(comps, m, n):
    """gamma -> arrangements(gamma) * prod_{i in gamma} Z_i for sorted gamma of size m."""
    table = {(): _ONE}
    for size in range(1, m + 1):
        new = {}
        for g in multisets(n, size):
            prev = table[g[:-1]]
            new[g] = _outer(prev, comps[g[-1]])
        table.update(new)
    return {g: (v[0], v[1], v[2] * arrangements(g)) for g, v in table.items() if len(g) == m}


def _splits(alpha, sizes):
    if len(sizes) == 1:
        yield (alpha,)
        return
    seen = set()
    for comb in itertools.combinations(range(len(alpha)), sizes[0]):
        g = tuple(alpha[i] for i in comb)
        if g in seen:
            continue
        seen.add(g)
        rest = tuple(alpha[i] for i in range(len(alpha)) if i not in comb)
        for tail in _splits(rest, sizes[1:]):
            yield (g,) + tail


def group_family(space, types, vectors=None):
    """Expansion G(alpha) for all sorted alpha of length len(types).

    Returns (owner, xk, pk, c): term arrays tagged by the index of alpha.
    """
    n = space.n
    d = len(types)
    vectors = vectors or _slot_vectors(space, types)
    kinds = sorted(set(types), key=types.index)
    sizes = [types.count(t) for t in kinds]
    tables = {t: _power_table(vectors[t], s, n) for t, s in zip(kinds, sizes)}
    own, xs, ps, cs = [], [], [], []
    for ai, alpha in enumerate(multisets(n, d)):
        for split in _splits(alpha, sizes):
            acc = _ONE
            for t, g in zip(kinds, split):
                acc = _outer(acc, tables[t][g])
                if len(acc[2]) == 0:
                    break
            if len(acc[2]):
                own.append(np.full(len(acc[2]), ai, dtype=np.int64))
                xs.append(acc[0])
                ps.append(acc[1])
                cs.append(acc[2])
    if not own:
        e = np.zeros(0, np.uint64)
        return np.zeros(0, np.int64), e, e, np.zeros(0, np.int64)
    return group_sum(np.concatenate(xs), np.concatenate(ps), np.concatenate(cs), tag=np.concatenate(own))


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Identity:
    """sum of coef * K(types1 ; types2) = 0, tagged with a name."""
    name: str
    terms: tuple  # of (coef, types1, types2)


def quadratic_identities(include_eq22=True):
    ids = [Identity("quad33", ((1, "XX", "PV"), (-1, "PP", "XY")))]
    if include_eq22:
        ids.append(Identity("quad44", ((1, "XX", "VV"), (-1, "PP", "YY"))))
    return ids


def topslot_identities(d):
    ids = []
    for s in range(d + 1):
        g1 = "X" * (d - 1) + "P"
        terms = [(d, g1, "P" * (d - s) + "Y" * s)]
        if s > 0:
            terms.append((s, "X" * d, "P" * (d - s) + "Y" * (s - 1) + "V"))
        ids.append(Identity(f"topint_s{s}", tuple(terms)))
    return ids


def rank1_identities(d):
    return [
        Identity("rank1_young", ((1, "X" * (d - 1) + "P", "P" * d),)),
        Identity("rank1_curv", ((1, "X" * (d - 1) + "Y", "P" * d), (-1, "X" * d, "P" * (d - 1) + "V"))),
    ]


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass
class LinearSystem:
    """Integer rows over the unknown coordinates, with per-row provenance."""
    matrix: SparseIntMatrix
    provenance: list  # (identity name, x exponents, p exponents) per row
    unknowns: str  # "bianchi" or "symd"
    n: int
    d: int
    space_name: str = ""
    scale_factor: Fraction = Fraction(1)
    raw_rows: int = 0

    @property
    def width(self):
        return self.matrix.width

    @property
    def row_count(self):
        return self.matrix.nrows

    def row_tag(self, i):
        name, xk, pk = self.provenance[i]
        from .poly import exponents_from_key
        return name, exponents_from_key(xk, self.n), exponents_from_key(pk, self.n)


def _assemble_identity(space, ident: Identity, d, fams):
    """Canonical-coordinate triplets (row key arrays, col, coef) for one identity."""
    n = space.n
    nd = len(multisets(n, d))
    pieces = []
    for coef, t1, t2 in ident.terms:
        pieces.append((coef, fams[t1], fams[t2]))
    # chunk over alpha so that each outer product stays bounded
    size2 = max(len(f2[0]) for _, _, f2 in pieces) or 1
    per_alpha = max(max(len(f1[0]) for _, f1, _ in pieces) / nd, 1)
    step = max(1, int(CHUNK_TERMS / (size2 * per_alpha)))
    out = []
    for a0 in range(0, nd, step):
        a1 = min(nd, a0 + step)
        cols, xs, ps, cs = [], [], [], []
        for coef, f1, f2 in pieces:
            o1, x1, p1, c1 = f1
            lo, hi = np.searchsorted(o1, [a0, a1])
            if hi == lo or len(f2[0]) == 0:
                continue
            o2, x2, p2, c2 = f2
            cols.append((o1[lo:hi, None] * nd + o2[None, :]).ravel())
            xs.append((x1[lo:hi, None] + x2[None, :]).ravel())
            ps.append((p1[lo:hi, None] + p2[None, :]).ravel())
            cs.append((c1[lo:hi, None] * (coef * c2)[None, :]).ravel())
        if not cols:
            continue
        col, x, p, c = group_sum(np.concatenate(xs), np.concatenate(ps), np.concatenate(cs),
                                 tag=np.concatenate(cols))
        out.append((col, x, p, c))
    if not out:
        e = np.zeros(0, np.uint64)
        return np.zeros(0, np.int64), e, e, np.zeros(0, np.int64)
    return tuple(np.concatenate([o[i] for o in out]) for i in range(4))


def _check_magnitude(fams):
    m = 0
    for f in fams.values():
        if len(f[3]):
            m = max(m, int(np.max(np.abs(f[3]))))
    return m


def _families_for(space, identities, d, extra_slots=None):
    extra_slots = extra_slots or {}
    types = sorted({t for ident in identities for _, a, b in ident.terms for t in a + b} - set(extra_slots))
    vectors = _slot_vectors(space, types)
    vectors.update(extra_slots)
    fams = {}
    for ident in identities:
        for _, a, b in ident.terms:
            for g in (a, b):
                if g not in fams:
                    fams[g] = group_family(space, g, vectors)
    m = _check_magnitude(fams)
    if float(m) ** 2 * 64 > 2.0**62:
        raise OverflowError("slot coefficients too large for int64 assembly")
    return fams


def _canonical_rows(space, identities, d, extra_slots=None):
    """Sparse canonical-coordinate matrix and provenance for a list of identities.

    ``extra_slots`` maps additional one-letter slot types to per-component
    (xk, pk, c) arrays.
    """
    fams = _families_for(space, identities, d, extra_slots)
    nd = len(multisets(space.n, d))
    rows_all, cols_all, vals_all, prov = [], [], [], []
    offset = 0
    for ident in identities:
        col, x, p, c = _assemble_identity(space, ident, d, fams)
        if len(c) == 0:
            continue
        order = np.lexsort((p, x))
        new = np.ones(len(order), dtype=bool)
        new[1:] = (x[order][1:] != x[order][:-1]) | (p[order][1:] != p[order][:-1])
        rid = np.empty(len(order), dtype=np.int64)
        rid[order] = np.cumsum(new) - 1
        nrows = int(new.sum())
        firsts = order[new]
        prov.extend((ident.name, int(a), int(b)) for a, b in zip(x[firsts], p[firsts]))
        rows_all.append(rid + offset)
        cols_all.append(col)
        vals_all.append(c)
        offset += nrows
    if not rows_all:
        M = sp.csr_matrix((0, nd * nd), dtype=np.int64)
        return M, prov
    M = sp.csr_matrix((np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
                      shape=(offset, nd * nd), dtype=np.int64)
    M.sum_duplicates()
    return M, prov


def _dedup(M: sp.csr_matrix, prov):
    """Normalize rows by content and sign, drop zero rows and exact duplicates."""
    M = M.tocsr()
    M.eliminate_zeros()
    M.sort_indices()
    h = M.shape[0]
    lens = np.diff(M.indptr)
    nz = np.flatnonzero(lens > 0)
    if len(nz) == 0:
        return sp.csr_matrix((0, M.shape[1]), dtype=np.int64), []
    data = M.data.copy()
    starts = M.indptr[nz]
    g = np.gcd.reduceat(np.abs(data), starts) if len(data) else np.zeros(0, np.int64)
    sign = np.sign(data[starts])
    rid = np.repeat(np.arange(h), lens)
    fac = np.zeros(h, dtype=np.int64)
    fac[nz] = g * sign
    data = data // fac[rid]
    # two independent row hashes, then exact confirmation inside hash groups
    rng = np.random.default_rng(12345)
    wc = rng.integers(1, 2**31, size=M.shape[1], dtype=np.int64)
    wc2 = rng.integers(1, 2**31, size=M.shape[1], dtype=np.int64)
    hs1 = np.zeros(h, dtype=np.int64)
    hs2 = np.zeros(h, dtype=np.int64)
    mask = (1 << 61) - 1
    t1 = ((data % 1000003) * wc[M.indices]) & mask
    t2 = ((data % 999983 + lens[rid] * 7) * wc2[M.indices]) & mask
    np.add.at(hs1, rid, t1)
    np.add.at(hs2, rid, t2)
    keyrows = nz
    order = np.lexsort((hs2[keyrows], hs1[keyrows]))
    srt = keyrows[order]
    keep = []
    indptr, indices = M.indptr, M.indices
    i = 0
    while i < len(srt):
        j = i + 1
        while j < len(srt) and hs1[srt[j]] == hs1[srt[i]] and hs2[srt[j]] == hs2[srt[i]]:
            j += 1
        reps = []
        for r in srt[i:j]:
            a, b = indptr[r], indptr[r + 1]
            if any(np.array_equal(indices[a:b], indices[indptr[q]:indptr[q + 1]])
                   and np.array_equal(data[a:b], data[indptr[q]:indptr[q + 1]]) for q in reps):
                continue
            reps.append(r)
        keep.extend(reps)
        i = j
    keep = np.array(sorted(keep), dtype=np.int64)
    N = sp.csr_matrix((data, M.indices.copy(), M.indptr.copy()), shape=M.shape)[keep]
    return N, [prov[k] for k in keep]


def _to_sparse_int(M: sp.csr_matrix) -> SparseIntMatrix:
    M = M.tocsr()
    M.sort_indices()
    return SparseIntMatrix(M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data.astype(np.int64), M.shape[1])


@lru_cache(maxsize=None)
def _bianchi_T(n):
    B = bianchi_basis_matrix(n).to_scipy().astype(np.int64)
    return B.T.tocsr()


def _build(space, identities, d, unknowns):
    M, prov = _canonical_rows(space, identities, d)
    raw = M.shape[0]
    if unknowns == "bianchi":
        M = (M @ _bianchi_T(space.n)).tocsr()
    M, prov = _dedup(M, prov)
    return LinearSystem(_to_sparse_int(M), prov, unknowns, space.n, d, space.name,
                        Fraction(space.scale_factor), raw)


def build_quadratic_system(space: SymmetricSpaceModel, include_eq22: bool | None = None) -> LinearSystem:
    """Quadratic top-slot system over Bianchi coordinates.

    The first identity K(X,X,P,V) = K(P,P,X,Y) has bidegree (3,3); the
    second, K(X,X,V,V) = K(P,P,Y,Y), has bidegree (4,4).  By default the
    second is included for spaces of higher rank and skipped for rank-one
    spaces.
    """
    if include_eq22 is None:
        include_eq22 = not space.rank_one
    return _build(space, quadratic_identities(include_eq22), 2, "bianchi")


def build_topslot_system(space: SymmetricSpaceModel, d: int, levels=None) -> LinearSystem:
    """Rows of the d+1 top-slot identities over SymTensorRankD coordinates.

    ``levels`` restricts to a subset of s values (all by default).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    ids = topslot_identities(d)
    if levels is not None:
        ids = [ids[s] for s in levels]
    return _build(space, ids, d, "symd")


def build_rank1_system(space: SymmetricSpaceModel, d: int, which=None) -> LinearSystem:
    """Two-identity system valid on rank-one spaces normalized to curvature in [1, 4].

    ``which`` selects identities by name ("rank1_young", "rank1_curv"); both by default.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if not space.rank_one or not space.normalized:
        raise ValueError("rank-one system requires a normalized rank-one space")
    ids = rank1_identities(d)
    if which is not None:
        ids = [i for i in ids if i.name in which]
        if not ids:
            raise ValueError("no identity selected")
    return _build(space, ids, d, "symd")


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

@dataclass
class Solution:
    system: LinearSystem
    result: NullspaceResult

    @property
    def rank(self):
        return self.result.rank

    @property
    def dim(self):
        return self.result.dim

    @property
    def basis(self) -> SparseIntMatrix:
        return self.result.basis

    def tensors(self):
        """Basis as BianchiTensor (quadratic) or SymTensorRankD objects."""
        out = []
        s = self.system
        for i in range(self.basis.nrows):
            cols, vals = self.basis.row(i)
            vec = [0] * s.width
            for c, v in zip(cols, vals):
                vec[int(c)] = int(v)
            if s.unknowns == "bianchi":
                out.append(BianchiTensor(s.n, vec))
            else:
                out.append(SymTensorRankD.from_vector(s.n, s.d, vec))
        return out


def _identity_rows(system: LinearSystem):
    names = []
    for name, _, _ in system.provenance:
        if not names or names[-1] != name:
            names.append(name)
    groups = []
    for nm in names:
        groups.append(np.array([i for i, (n_, _, _) in enumerate(system.provenance) if n_ == nm], dtype=np.int64))
    return names, groups


def _restrict(M: SparseIntMatrix, basis: SparseIntMatrix) -> SparseIntMatrix:
    """Exact integer product M @ basis.T (columns = nullspace coordinates)."""
    A = M.to_scipy()
    B = basis.to_scipy()
    rowsum = np.asarray(abs(A).sum(axis=1)).ravel()
    bound = float(rowsum.max(initial=0)) * float(basis.max_abs())
    if bound >= 2.0**62:
        raise OverflowError("restricted system exceeds int64; solve unstaged")
    return _to_sparse_int((A @ B.T).tocsr())


def solve(system: LinearSystem, seed: int = 0, staged: bool | None = None, max_primes: int = 60) -> Solution:
    """Certified rank and integer nullspace basis of the system.

    With ``staged`` (default for SymTensorRankD unknowns) the first identity
    is solved alone and the remaining rows are restricted to its nullspace;
    the composed basis is verified against every row exactly.  ``max_primes``
    caps the primes used for rational reconstruction per block.
    """
    if staged is None:
        staged = system.unknowns == "symd"
    names, groups = _identity_rows(system)
    if not staged or len(names) < 2:
        return Solution(system, nullspace(system.matrix, seed=seed, max_primes=max_primes))
    first = nullspace(system.matrix.select_rows(groups[0]), seed=seed, max_primes=max_primes)
    rest = system.matrix.select_rows(np.concatenate(groups[1:]))
    if first.dim == 0:
        return Solution(system, first)
    inner = nullspace(_restrict(rest, first.basis), seed=seed, max_primes=max_primes)
    if inner.dim:
        B = _compose(inner.basis, first.basis)
        if np.any(system.matrix.matvec_exact(_dense_cols(B)) != 0):
            raise RuntimeError("staged nullspace failed exact verification")
    else:
        B = SparseIntMatrix.from_triplets([], [], np.zeros(0, np.int64), 0, system.width)
    res = NullspaceResult(system.width, system.width - B.nrows, B, max(first.primes_used, inner.primes_used),
                          first.blocks + inner.blocks, seed, [])
    return Solution(system, res)


def _compose(inner: SparseIntMatrix, outer: SparseIntMatrix) -> SparseIntMatrix:
    """Exact product inner @ outer of integer sparse matrices."""
    rownnz = np.diff(inner.indptr).max(initial=0)
    if inner.data.dtype != object and outer.data.dtype != object and \
            float(inner.max_abs()) * float(outer.max_abs()) * max(int(rownnz), 1) < 2.0**62:
        return _to_sparse_int((inner.to_scipy() @ outer.to_scipy()).tocsr())
    rows = []
    for i in range(inner.nrows):
        acc = {}
        cols, vals = inner.row(i)
        for c, v in zip(cols, vals):
            oc, ov = outer.row(int(c))
            for cc, vv in zip(oc, ov):
                acc[int(cc)] = acc.get(int(cc), 0) + int(v) * int(vv)
        rows.append(acc)
    r = [i for i, a in enumerate(rows) for k, v in a.items() if v]
    c = [k for a in rows for k, v in a.items() if v]
    v = [v for a in rows for k, v in a.items() if v]
    return SparseIntMatrix.from_triplets(r, c, _to_int_array(v), inner.nrows, outer.width)


def _dense_cols(B: SparseIntMatrix):
    D = np.zeros((B.width, B.nrows), dtype=object)
    D[:] = 0
    for i in range(B.nrows):
        cols, vals = B.row(i)
        for c, v in zip(cols, vals):
            D[int(c), i] = int(v)
    return D


def membership(K, system: LinearSystem) -> bool:
    """True iff every row of the system annihilates K exactly."""
    v = _coordinates(K, system)
    if len(v) != system.width:
        raise ValueError("width mismatch")
    den = 1
    for x in v:
        den = den * Fraction(x).denominator // gcd(den, Fraction(x).denominator)
    iv = np.array([int(Fraction(x) * den) for x in v], dtype=object).reshape(-1, 1)
    return not np.any(system.matrix.matvec_exact(iv) != 0)


def _coordinates(K, system):
    if isinstance(K, BianchiTensor):
        return list(K.coords) if system.unknowns == "bianchi" else list(K.to_sympair().to_vector())
    if isinstance(K, SymTensorRankD):
        if system.unknowns == "bianchi":
            return list(BianchiTensor.from_sympair(SymPairTensor(K.n, K.coeffs)).coords)
        return list(K.to_vector())
    return list(K)


# ---------------------------------------------------------------------------
# decomposable tensors
# ---------------------------------------------------------------------------

def product_tensor(A, B):
    """Four times the symmetric entry tensor of (X,X,P,P) -> <AX,P><BX,P>.

    The polynomial is sum A[c,a] B[d,b] x_a x_b p_c p_d; symmetrizing both
    slot pairs also makes the result symmetric under A <-> B.
    """
    M = np.einsum("ca,db->abcd", np.asarray(A, dtype=np.int64), np.asarray(B, dtype=np.int64))
    return M + M.transpose(1, 0, 2, 3) + M.transpose(0, 1, 3, 2) + M.transpose(1, 0, 3, 2)


def _canonical_from_full(T, n):
    ps = multisets(n, 2)
    ii = np.array([p[0] for p in ps])
    jj = np.array([p[1] for p in ps])
    return T[ii[:, None], jj[:, None], ii[None, :], jj[None, :]].reshape(-1)


def bianchi_coords_int(canon_vec, n):
    """Integer Bianchi coordinates (up to a common positive factor) of a canonical integer vector."""
    _, free, scale = _bianchi_data(n)
    L = 1
    for s in scale:
        L = L * int(s) // gcd(L, int(s))
    return [int(canon_vec[f]) * (L // int(s)) for f, s in zip(free, scale)]


def decomposable_generators(space: SymmetricSpaceModel, gens=None):
    """Integer Bianchi coordinate vectors of the symmetric products of isotropy generators."""
    gens = list(space.isotropy_gens) if gens is None else list(gens)
    n = space.n
    out = []
    for i in range(len(gens)):
        for j in range(i, len(gens)):
            T = product_tensor(gens[i], gens[j])
            out.append(bianchi_coords_int(_canonical_from_full(T, n), n))
    return out


def decomposable_span(space: SymmetricSpaceModel, seed: int = 0, certify: bool = True):
    """(generators, dimension) of the span of decomposable quadratic tensors."""
    vecs = decomposable_generators(space)
    if not vecs:
        return vecs, 0
    M = SparseIntMatrix.from_rows([np.array(v, dtype=np.int64) for v in vecs], k2_space_dim(space.n))
    return vecs, span_rank(M, seed=seed, certify=certify)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class SolutionReport:
    space_name: str
    n: int
    d: int
    unknown_dim: int
    row_count: int
    system_rank: int
    solution_dim: int
    decomposable_dim: int | None
    indecomposable_dim: int | None
    scale_factor: str
    arithmetic_mode: str
    elapsed: float
    raw_row_count: int = 0
    extra: dict = field(default_factory=dict)

    def as_dict(self, timing=False):
        d = {k: getattr(self, k) for k in ("space_name", "n", "d", "unknown_dim", "row_count", "raw_row_count",
                                           "system_rank", "solution_dim", "decomposable_dim",
                                           "indecomposable_dim", "scale_factor", "arithmetic_mode")}
        d["extra"] = self.extra
        if timing:
            d["elapsed"] = self.elapsed
        return d


def _rows_annihilate(system: LinearSystem, vecs):
    if len(vecs) == 0:
        return True
    B = vecs.T if isinstance(vecs, np.ndarray) else np.array(vecs, dtype=object).T
    return not np.any(system.matrix.matvec_exact(B) != 0)


def indecomposability_report(space: SymmetricSpaceModel, include_eq22=None, seed: int = 0):
    """Build, solve, compare with the decomposable span, and check membership."""
    t0 = time.perf_counter()
    system = build_quadratic_system(space, include_eq22)
    sol = solve(system, seed=seed)
    gens, ddim = decomposable_span(space, seed=seed)
    if not _rows_annihilate(system, gens):
        raise AssertionError("a decomposable tensor fails the system; assembly is inconsistent")
    indec = sol.dim - ddim
    if indec < 0:
        raise AssertionError("decomposable span larger than the solution space")
    rep = SolutionReport(space.name, space.n, 2, system.width, system.row_count, sol.rank, sol.dim, ddim,
                         indec, str(space.scale_factor), "modular+exact-verification",
                         time.perf_counter() - t0, system.raw_rows)
    return rep, sol


# ---------------------------------------------------------------------------
# exact verification of heavy identities without monomial assembly
# ---------------------------------------------------------------------------

_SLOT_DEG = {"X": (1, 0), "P": (0, 1), "Y": (2, 1), "V": (1, 2)}  # (X-degree, P-degree)


def identity_bidegree(ident: Identity, d):
    coef, a, b = ident.terms[0]
    return (sum(_SLOT_DEG[t][0] for t in a + b), sum(_SLOT_DEG[t][1] for t in a + b))


def _homogeneous_lattice(n, D):
    """All integer points with nonnegative entries summing to D."""
    pts = []
    for ms in multisets(n, D):
        v = [0] * n
        for i in ms:
            v[i] += 1
        pts.append(v)
    return np.array(pts, dtype=np.int64)


def _slot_monos(space, xs):
    """Per slot type: P-degree and exact int64 monomial coefficients at the points ``xs``.

    Arrays have shape (points, n, monomials); row i holds component i.
    X -> x_i, P -> p_i, Y -> (R_x P)_i, V -> R(x,P)P_i.
    """
    n = space.n
    R = space.R_int.astype(np.int64)
    xs = np.asarray(xs, dtype=np.int64).reshape(-1, n)
    B = len(xs)
    Mx = np.einsum("abci,zb,zc->zia", R, xs, xs)
    W = np.einsum("baci,zb->ziac", R, xs)
    a, c = np.array(multisets(n, 2), dtype=np.int64).reshape(-1, 2).T
    Vm = W[:, :, a, c] + np.where(a != c, W[:, :, c, a], 0)
    eye = np.broadcast_to(np.eye(n, dtype=np.int64), (B, n, n))
    return {"X": (0, xs[:, :, None].copy()), "P": (1, eye), "Y": (1, Mx), "V": (2, Vm)}


@lru_cache(maxsize=None)
def _mono_product_map(n, e1, e2):
    """Sparse 0/1 matrix taking flattened (m1 x m2) products to degree e1+e2 monomials."""
    m1, m2 = multisets(n, e1), multisets(n, e2)
    index = {m: i for i, m in enumerate(multisets(n, e1 + e2))}
    cols = np.array([index[tuple(sorted(a + b))] for a in m1 for b in m2], dtype=np.int64)
    return sp.csr_matrix((np.ones(len(cols), dtype=np.int64), (np.arange(len(cols)), cols)),
                         shape=(len(cols), len(index)))


@lru_cache(maxsize=None)
def _perm_data(n, d):
    ms = np.array(multisets(n, d), dtype=np.int64).reshape(-1, d)
    mult = np.array([int(np.prod([math.factorial(list(a).count(v)) for v in set(a)])) for a in multisets(n, d)],
                    dtype=np.int64)
    return ms, list(itertools.permutations(range(d))), mult


def _group_monos(forms, types, n):
    """G(alpha)(P) at each point as exact int64 monomial rows, shape (points, alphas, monomials).

    G(alpha) sums prod_k f_{types[k]}(alpha_{sigma(k)}) over all orderings sigma,
    divided by the multiplicities of alpha.  The factors commute, so the sum
    only depends on which type sits at each position of alpha: each distinct
    arrangement of the types occurs prod(type multiplicity)! times.
    """
    ms, _, mult = _perm_data(n, len(types))
    weight = math.prod(math.factorial(types.count(t)) for t in set(types))
    B = next(iter(forms.values()))[1].shape[0]
    acc = None
    for tau in sorted(set(itertools.permutations(types))):
        cur, e = np.ones((B, len(ms), 1), dtype=np.int64), 0
        for k, t in enumerate(tau):
            deg, arr = forms[t]
            rows = arr[:, ms[:, k]]
            outer = (cur[:, :, :, None] * rows[:, :, None, :]).reshape(B * len(ms), -1)
            if e and deg:
                outer = np.asarray(outer @ _mono_product_map(n, e, deg))
            cur = outer.reshape(B, len(ms), -1)
            e += deg
        acc = cur if acc is None else acc + cur
    acc = acc * weight
    assert np.all(acc % mult[None, :, None] == 0)
    return e, acc // mult[None, :, None]


def _small_primes(count, seed=0):
    import sympy
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        c = int(rng.integers(2**21, 2**22))
        c = int(sympy.nextprime(c))
        if c < 2**22 and c not in out:
            out.append(c)
    return out


def lattice_membership(space, ident: Identity, d: int, vectors, seed: int = 0):
    """Exactly decide whether every vector (canonical coordinates) satisfies ``ident``.

    The identity polynomial F(X,P) is homogeneous of degree D in X.  It
    vanishes iff F(x,.) = 0 for every x in the lattice {x in N^n : sum x = D},
    which is unisolvent for such forms.  At each lattice point F(x,.) is
    computed with P symbolic modulo primes below 2^22 in float64 BLAS (exact
    at that size), and enough primes are used to exceed a coefficient bound.
    Returns a list of booleans, one per vector.
    """
    n = space.n
    nd = len(multisets(n, d))
    V = np.array([[int(c) for c in v] for v in vectors], dtype=object).reshape(len(vectors), nd, nd)
    k = V.shape[0]
    D, E = identity_bidegree(ident, d)
    lattice = _homogeneous_lattice(n, D)
    # a priori bound on |coefficients| of F(x, .) over the lattice
    vnorm = np.array([sum(abs(int(c)) for c in V[j].ravel()) for j in range(k)], dtype=float)
    bound = 0.0
    xmax = float(D)
    Rsum = float(np.abs(space.R_int).sum(axis=(0, 1, 2)).max())
    slot_norm = {"X": xmax, "P": 1.0, "Y": Rsum * xmax * xmax, "V": Rsum * xmax}
    fact = float(math.factorial(d))
    for coef, a, b in ident.terms:
        g1 = fact * np.prod([slot_norm[t] for t in a])
        g2 = fact * np.prod([slot_norm[t] for t in b])
        if max(g1, g2) >= 2.0**62:
            raise OverflowError("group forms exceed int64 at this lattice size")
        bound += abs(coef) * g1 * g2
    bound *= float(vnorm.max(initial=0)) if k else 0.0
    nprimes = 1
    while (2.0**21) ** nprimes <= 2 * bound + 1:
        nprimes += 1
    primes = _small_primes(nprimes, seed)
    if nd * float(max(primes)) ** 2 >= 2.0**53:
        raise OverflowError("float64 products are not exact at this tensor size")
    bad = np.zeros(k, dtype=bool)
    Vq = {}
    for q in primes:
        Vm = np.array([[[int(c) % q for c in row] for row in V[j]] for j in range(k)], dtype=np.float64)
        Vq[q] = Vm.transpose(1, 0, 2).reshape(nd, k * nd)  # (alpha, j*beta)
    pmaps = {}
    batch = max(1, int(2e7 // (nd * nd * max(k, 1) * 8)))
    for start in range(0, len(lattice), batch):
        xs = lattice[start:start + batch]
        B = len(xs)
        forms = _slot_monos(space, xs)
        groups = [(coef, _group_monos(forms, a, n), _group_monos(forms, b, n)) for coef, a, b in ident.terms]
        for q in primes:
            total = None
            for coef, (e1, G1), (e2, G2) in groups:
                g1, g2 = (G1 % q).astype(np.float64), (G2 % q).astype(np.float64)
                m1, m2 = g1.shape[2], g2.shape[2]
                # T[z, j, u, beta] = sum_alpha g1[z, alpha, u] V[j, alpha, beta]
                T = np.fmod(g1.transpose(0, 2, 1).reshape(B * m1, nd) @ Vq[q], q)
                T = T.reshape(B, m1, k, nd).transpose(0, 2, 1, 3).reshape(B, k * m1, nd)
                T = np.fmod(np.matmul(T, g2), q).reshape(B * k, m1 * m2)
                key = (e1, e2)
                if key not in pmaps:
                    pm = _mono_product_map(n, e1, e2) if e1 and e2 else None
                    pmaps[key] = None if pm is None else pm.astype(np.float64).tocsc()
                pm = pmaps[key]
                F = T if pm is None else np.asarray((pm.T @ T.T).T)
                F = np.fmod((coef % q) * np.fmod(F, q), q).reshape(B, k, -1)
                total = F if total is None else np.fmod(total + F, q)
            bad |= np.any(total != 0, axis=(0, 2))
    return [not b for b in bad]


# ---------------------------------------------------------------------------
# rank-one versus top-slot comparison
# ---------------------------------------------------------------------------

def _slot_term_counts(space):
    """Largest number of (X,P) monomials in one component of each slot type."""
    R = space.R_int.astype(np.int64)
    n = space.n
    iu = np.triu_indices(n)
    Ysym = R + R.transpose(0, 2, 1, 3)  # symmetrize in the two X slots
    Vsym = R.transpose(1, 0, 2, 3) + R.transpose(1, 2, 0, 3)  # (b, a, c, i), symmetric in a, c
    y = max(int(np.count_nonzero(Ysym[:, iu[0], iu[1], i])) for i in range(n))
    v = max(int(np.count_nonzero(Vsym[:, iu[0], iu[1], i])) for i in range(n))
    return {"X": 1, "P": 1, "Y": max(y, 1), "V": max(v, 1)}


def identity_cost(space, ident: Identity, d: int) -> float:
    """Rough count of monomial products needed to assemble ``ident`` symbolically."""
    counts = _slot_term_counts(space)
    nd = len(multisets(space.n, d))
    perms = math.factorial(d)
    total = 0.0
    for coef, a, b in ident.terms:
        ga = perms * float(np.prod([counts[t] for t in a]))
        gb = perms * float(np.prod([counts[t] for t in b]))
        total += nd * nd * ga * gb
    return total


@lru_cache(maxsize=None)
def _symd_index(n, d):
    return {m: i for i, m in enumerate(multisets(n, d))}


def isotropy_action_matrix(A, n: int, d: int):
    """Integer matrix of K -> sum_i K(.., A Z_i, ..) on canonical coordinates of SymTensorRankD."""
    A = np.asarray(A)
    ms = multisets(n, d)
    index = _symd_index(n, d)
    rows, cols, vals = [], [], []
    for i, alpha in enumerate(ms):
        for k, a in enumerate(alpha):
            for c in np.flatnonzero(A[:, a]):
                beta = tuple(sorted(alpha[:k] + (int(c),) + alpha[k + 1:]))
                rows.append(i)
                cols.append(index[beta])
                vals.append(int(A[c, a]))
    nd = len(ms)
    D = sp.csr_matrix((np.array(vals, dtype=np.int64), (rows, cols)), shape=(nd, nd))
    I = sp.identity(nd, dtype=np.int64, format="csr")
    return (sp.kron(D, I) + sp.kron(I, D)).tocsr()


def _basis_rows(sol: Solution):
    """Dense basis rows, int64 when the entries allow it and object otherwise."""
    B = sol.basis
    small = B.data.dtype != object
    out = np.zeros((B.nrows, sol.system.width), dtype=np.int64 if small else object)
    for i in range(B.nrows):
        cols, vals = B.row(i)
        out[i, cols.astype(np.int64)] = vals if small else [int(v) for v in vals]
    return out


def _apply_exact(L, vecs):
    """Exact product of an integer sparse matrix with the rows of ``vecs``."""
    rowsum = float(np.abs(L).sum(axis=1).max()) if L.nnz else 0.0
    if vecs.dtype != object and rowsum * float(np.abs(vecs).max(initial=0)) < 2.0**62:
        return np.asarray((L @ vecs.T).T)
    Lc = L.tocoo()
    out = np.zeros(vecs.shape, dtype=object)
    V = vecs.astype(object)
    for r, c, v in zip(Lc.row, Lc.col, Lc.data):
        out[:, r] += int(v) * V[:, c]
    return out


def _inverse_mod_p(C, p):
    """Inverse of a square integer matrix modulo p (raises if singular)."""
    k = C.shape[0]
    R, piv = rref_mod_p(np.hstack([np.asarray(C, dtype=np.int64) % p, np.eye(k, dtype=np.int64)]), p)
    if piv[:k] != list(range(k)) or len(piv) < k:
        raise ZeroDivisionError("matrix is singular modulo p")
    return R[:k, k:]


def _matmul_mod(A, B, p):
    """A @ B mod p for entries below p < 2^20, in float64 (exact at that size)."""
    out = np.zeros((A.shape[0], B.shape[1]))
    step = max(1, int(2.0**52 // (float(p) * p)))
    for k0 in range(0, A.shape[1], step):
        out = np.fmod(out + A[:, k0:k0 + step].astype(np.float64) @ B[k0:k0 + step].astype(np.float64), p)
    return out.astype(np.int64)


def _echelon_rank_grow(basis, candidates, p):
    """Rows of ``candidates`` (mod p) that enlarge the span of ``basis``; returns (basis, new rows)."""
    new = []
    for v in candidates:
        v = v % p
        if basis.shape[0]:
            stacked = np.vstack([basis, v[None, :]])
        else:
            stacked = v[None, :]
        R, piv = rref_mod_p(stacked, p)
        if len(piv) > basis.shape[0]:
            basis = R
            new.append(v)
    return basis, new


def module_generators(space, sol: Solution, max_generators: int = 8, seed: int = 0, p: int = 1048573):
    """Few integer vectors whose isotropy-module closure is the whole solution space.

    The solution space must be invariant under the isotropy algebra; this is
    checked exactly.  The closure is then grown in coordinates with respect
    to the basis, modulo p: a random projection picks columns on which the
    basis is invertible mod p, so the computed rank is a lower bound for the
    rank of the true closure.  Returns (generators, closure_rank).
    """
    s = sol.system
    Bx = _basis_rows(sol)
    k = sol.dim
    Ls = [isotropy_action_matrix(A, s.n, s.d) for A in space.isotropy_gens]
    images = []
    for A, L in zip(space.isotropy_gens, Ls):
        if not space.isotropy_invariant(A):
            raise ValueError("isotropy generator does not preserve the curvature")
        LB = _apply_exact(L, Bx)
        if not _rows_annihilate(s, LB):
            raise RuntimeError("solution space is not isotropy invariant")
        images.append(LB)
    if k == 0:
        return [], 0
    rng = np.random.default_rng(seed)
    G = rng.integers(0, p, size=(s.width, k + 8))

    def reduce(V):
        return np.array([[int(x) % p for x in row] for row in V], dtype=np.int64) if V.dtype == object else V % p

    BG = _matmul_mod(reduce(Bx), G, p)
    _, piv = rref_mod_p(BG, p)
    if len(piv) < k:
        raise RuntimeError("random projection lost rank; retry with another seed")
    cols = np.array(piv[:k])
    Cinv = _inverse_mod_p(BG[:, cols], p)
    rho = [_matmul_mod(_matmul_mod(reduce(LB), G[:, cols], p), Cinv, p) for LB in images]
    basis = np.zeros((0, k), dtype=np.int64)
    gens = []
    while basis.shape[0] < k and len(gens) < max_generators:
        c = rng.integers(-1, 2, size=k)
        basis, new = _echelon_rank_grow(basis, [c % p], p)
        if not new:
            continue
        gens.append(np.array([int(x) for x in c], dtype=object) @ Bx.astype(object))
        frontier = np.array(new)
        while frontier.shape[0] and basis.shape[0] < k:
            cand = np.vstack([_matmul_mod(frontier, r, p) for r in rho])
            # cheap pre-filter: reduce all candidates against the current basis at once
            R = basis
            before = R.shape[0]
            stacked, piv = rref_mod_p(np.vstack([R, cand]), p)
            if len(piv) == before:
                break
            basis = stacked
            frontier = stacked
    return gens, basis.shape[0]


@dataclass
class ComparisonReport:
    space_name: str
    d: int
    rank1_dim: int
    topslot_dim: int
    assembled_levels: list
    verified_levels: list
    generators: int
    rank1_in_topslot: bool
    topslot_in_rank1: bool

    @property
    def equal(self):
        return self.rank1_in_topslot and self.topslot_in_rank1 and self.rank1_dim == self.topslot_dim


def compare_rank1_topslot(space, d: int, budget: float = 1e8, seed: int = 0) -> ComparisonReport:
    """Decide whether the rank-one and top-slot nullspaces coincide, by exact membership.

    Levels whose symbolic assembly cost is within ``budget`` are assembled;
    the others are checked on isotropy-module generators of the rank-one
    nullspace with ``lattice_membership``.  The top-slot nullspace lies in
    the nullspace of the assembled levels, so if that equals the rank-one
    nullspace and the remaining levels hold on it, both inclusions follow.
    """
    ids = topslot_identities(d)
    light = [s for s, I in enumerate(ids) if identity_cost(space, I, d) <= budget]
    heavy = [s for s in range(len(ids)) if s not in light]
    if 0 not in light:
        raise ValueError("budget too small for the first top-slot level")
    sol1 = solve(build_rank1_system(space, d), seed=seed)
    topL = build_topslot_system(space, d, levels=light)
    solL = solve(topL, seed=seed)
    B1, BL = _basis_rows(sol1), _basis_rows(solL)
    r1_in_L = _rows_annihilate(topL, B1)
    L_in_r1 = _rows_annihilate(sol1.system, BL)
    gens = []
    r1_in_top = r1_in_L
    if heavy and r1_in_L:
        gens, crank = module_generators(space, sol1, seed=seed)
        if crank < sol1.dim:
            raise RuntimeError("isotropy closure of the generators is smaller than the nullspace")
        for s in heavy:
            r1_in_top = r1_in_top and all(lattice_membership(space, ids[s], d, gens, seed=seed))
    top_dim = solL.dim if (not heavy or (r1_in_top and L_in_r1)) else -1
    return ComparisonReport(space.name, d, sol1.dim, top_dim, light, heavy, len(gens), bool(r1_in_top),
                            bool(L_in_r1))
