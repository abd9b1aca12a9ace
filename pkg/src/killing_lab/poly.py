"""Sparse polynomials in phase-space variables (X, P) with exact coefficients.

A monomial x^a p^b is packed into two uint64 keys with 4 bits per variable,
so exponents up to 15 and up to 16 variables of each kind are supported and
monomial multiplication is key addition.  Coefficients are integer
numerators (int64, promoted to Python ints on overflow risk) over a common
positive denominator.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np

BITS = 4
MAXEXP = (1 << BITS) - 1
MAXVARS = 64 // BITS
_SAFE = 2**62


def unit_key(i):
    return np.uint64(1) << np.uint64(BITS * i)


def key_from_exponents(exps):
    k = 0
    for i, e in enumerate(exps):
        if e > MAXEXP:
            raise OverflowError("exponent too large for packed keys")
        k |= int(e) << (BITS * i)
    return np.uint64(k)


def exponents_from_key(key, n):
    key = int(key)
    return tuple((key >> (BITS * i)) & MAXEXP for i in range(n))


def key_degree(keys, n):
    """Total degree of each packed key."""
    keys = np.asarray(keys, dtype=np.uint64)
    deg = np.zeros(keys.shape, dtype=np.int64)
    mask = np.uint64(MAXEXP)
    for i in range(n):
        deg += ((keys >> np.uint64(BITS * i)) & mask).astype(np.int64)
    return deg


def key_exponent(keys, i):
    return ((np.asarray(keys, dtype=np.uint64) >> np.uint64(BITS * i)) & np.uint64(MAXEXP)).astype(np.int64)


def _as_coef_array(c):
    c = np.asarray(c)
    if c.dtype == object:
        return c
    return c.astype(np.int64)


def _maxabs(c):
    if c.size == 0:
        return 0
    if c.dtype == object:
        return max(abs(int(x)) for x in c)
    return int(np.max(np.abs(c)))


def group_sum(xk, pk, c, tag=None):
    """Combine equal (tag, xk, pk) entries, dropping zeros; returns sorted arrays."""
    if len(xk) == 0:
        out = (xk, pk, c) if tag is None else (tag, xk, pk, c)
        return out
    keys = (pk, xk) if tag is None else (pk, xk, tag)
    order = np.lexsort(keys)
    xk, pk, c = xk[order], pk[order], c[order]
    if tag is not None:
        tag = tag[order]
    new = np.ones(len(xk), dtype=bool)
    new[1:] = (xk[1:] != xk[:-1]) | (pk[1:] != pk[:-1])
    if tag is not None:
        new[1:] |= tag[1:] != tag[:-1]
    starts = np.flatnonzero(new)
    if c.dtype == object:
        ends = list(starts[1:]) + [len(c)]
        sums = np.array([sum(c[a:b]) for a, b in zip(starts, ends)], dtype=object)
    else:
        sums = np.add.reduceat(c, starts)
    keep = sums != 0
    if tag is None:
        return xk[starts][keep], pk[starts][keep], sums[keep]
    return tag[starts][keep], xk[starts][keep], pk[starts][keep], sums[keep]


class PolyXP:
    """Polynomial in x_0..x_{n-1}, p_0..p_{n-1} with rational coefficients."""

    __slots__ = ("n", "xk", "pk", "c", "den")

    def __init__(self, n, xk, pk, c, den=1, normalize=True):
        if n > MAXVARS:
            raise ValueError(f"at most {MAXVARS} variables per kind are supported")
        self.n = int(n)
        self.xk = np.asarray(xk, dtype=np.uint64)
        self.pk = np.asarray(pk, dtype=np.uint64)
        self.c = _as_coef_array(c)
        self.den = int(den)
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        if normalize:
            self._normalize()

    def _normalize(self):
        self.xk, self.pk, self.c = group_sum(self.xk, self.pk, self.c)
        if self.c.dtype == object and _maxabs(self.c) < _SAFE:
            self.c = self.c.astype(np.int64)
        self._reduce_den()

    def _reduce_den(self):
        if self.den == 1:
            return
        if len(self.c) == 0:
            self.den = 1
            return
        if self.c.dtype == object:
            g = 0
            for v in self.c:
                g = gcd(g, int(v))
        else:
            g = int(np.gcd.reduce(np.abs(self.c)))
        g = gcd(g, self.den)
        if g > 1:
            self.c = self.c // g
            self.den //= g

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n):
        e = np.zeros(0, dtype=np.uint64)
        return cls(n, e, e, np.zeros(0, dtype=np.int64), 1, normalize=False)

    @classmethod
    def constant(cls, n, value):
        v = Fraction(value)
        return cls(n, [0], [0], np.array([v.numerator], dtype=object), v.denominator)

    @classmethod
    def x(cls, n, i):
        return cls(n, [unit_key(i)], [0], [1], 1, normalize=False)

    @classmethod
    def p(cls, n, i):
        return cls(n, [0], [unit_key(i)], [1], 1, normalize=False)

    @classmethod
    def from_dict(cls, n, terms):
        """``terms`` maps (x_exponents, p_exponents) to rational coefficients."""
        if not terms:
            return cls.zero(n)
        fr = [Fraction(v) for v in terms.values()]
        den = 1
        for f in fr:
            den = den * f.denominator // gcd(den, f.denominator)
        xk = [key_from_exponents(a) for a, _ in terms]
        pk = [key_from_exponents(b) for _, b in terms]
        c = np.array([int(f * den) for f in fr], dtype=object)
        return cls(n, np.array(xk, dtype=np.uint64), np.array(pk, dtype=np.uint64), c, den)

    @classmethod
    def linear_x(cls, n, v):
        """<v, X> for a rational vector v."""
        return cls.from_dict(n, {(_e(n, i), _e(n, None)): v[i] for i in range(n) if v[i] != 0})

    @classmethod
    def linear_p(cls, n, v):
        return cls.from_dict(n, {(_e(n, None), _e(n, i)): v[i] for i in range(n) if v[i] != 0})

    @classmethod
    def bilinear(cls, n, A):
        """<A X, P> = sum_ij A[i,j] x_j p_i."""
        terms = {}
        A = np.asarray(A)
        for i in range(n):
            for j in range(n):
                if A[i, j] != 0:
                    terms[(_e(n, j), _e(n, i))] = Fraction(A[i, j]) if not isinstance(A[i, j], Fraction) else A[i, j]
        return cls.from_dict(n, terms)

    # -- basic properties -------------------------------------------------
    def __len__(self):
        return len(self.c)

    def is_zero(self):
        return len(self.c) == 0

    def coef_fractions(self):
        return [Fraction(int(v), self.den) for v in self.c]

    def to_dict(self):
        return {(exponents_from_key(a, self.n), exponents_from_key(b, self.n)): Fraction(int(v), self.den)
                for a, b, v in zip(self.xk, self.pk, self.c)}

    def x_degrees(self):
        return key_degree(self.xk, self.n)

    def p_degrees(self):
        return key_degree(self.pk, self.n)

    def select(self, mask):
        return PolyXP(self.n, self.xk[mask], self.pk[mask], self.c[mask], self.den, normalize=False)

    def x_part(self, deg):
        """Terms of X-degree exactly ``deg``."""
        return self.select(self.x_degrees() == deg)

    def truncate_x(self, maxdeg):
        return self.select(self.x_degrees() <= maxdeg)

    # -- arithmetic -------------------------------------------------------
    def _check(self, other):
        if self.n != other.n:
            raise ValueError("variable count mismatch")

    def __add__(self, other):
        if not isinstance(other, PolyXP):
            other = PolyXP.constant(self.n, other)
        self._check(other)
        den = self.den * other.den // gcd(self.den, other.den)
        a = _scale_coefs(self.c, den // self.den)
        b = _scale_coefs(other.c, den // other.den)
        c = _concat_coefs(a, b)
        return PolyXP(self.n, np.concatenate([self.xk, other.xk]), np.concatenate([self.pk, other.pk]), c, den)

    def __neg__(self):
        return PolyXP(self.n, self.xk, self.pk, -self.c, self.den, normalize=False)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, q):
        q = Fraction(q)
        if q == 0:
            return PolyXP.zero(self.n)
        c = _scale_coefs(self.c, q.numerator)
        return PolyXP(self.n, self.xk, self.pk, c, self.den * q.denominator)

    def __mul__(self, other):
        if not isinstance(other, PolyXP):
            return self.scale(other)
        self._check(other)
        if self.is_zero() or other.is_zero():
            return PolyXP.zero(self.n)
        return _multiply(self, other)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PolyXP):
            return NotImplemented
        return (self - other).is_zero()

    def dx(self, i):
        return self._deriv(i, True)

    def dp(self, i):
        return self._deriv(i, False)

    def _deriv(self, i, on_x):
        keys = self.xk if on_x else self.pk
        e = key_exponent(keys, i)
        mask = e > 0
        if not np.any(mask):
            return PolyXP.zero(self.n)
        newk = keys[mask] - unit_key(i)
        c = _mul_coefs_int(self.c[mask], e[mask])
        if on_x:
            return PolyXP(self.n, newk, self.pk[mask], c, self.den, normalize=False)
        return PolyXP(self.n, self.xk[mask], newk, c, self.den, normalize=False)

    def evaluate(self, X, P):
        """Value at (X, P); exact for integer/Fraction input, float otherwise."""
        exact = all(isinstance(v, (int, Fraction, np.integer)) for v in list(X) + list(P))
        if exact:
            tot = Fraction(0)
            for a, b, v in zip(self.xk, self.pk, self.c):
                t = Fraction(int(v))
                for i, e in enumerate(exponents_from_key(a, self.n)):
                    if e:
                        t *= Fraction(X[i]) ** e
                for i, e in enumerate(exponents_from_key(b, self.n)):
                    if e:
                        t *= Fraction(P[i]) ** e
                tot += t
            return tot / self.den
        X = np.asarray(X, dtype=np.float64)
        P = np.asarray(P, dtype=np.float64)
        vals = np.ones(len(self.c))
        for i in range(self.n):
            ex = key_exponent(self.xk, i)
            ep = key_exponent(self.pk, i)
            vals *= X[i] ** ex * P[i] ** ep
        return float(np.dot(vals, self.c.astype(np.float64))) / self.den

    def __repr__(self):
        return f"PolyXP(n={self.n}, terms={len(self)})"


def _e(n, i):
    return tuple(1 if j == i else 0 for j in range(n))


def _scale_coefs(c, k):
    k = int(k)
    if k == 1:
        return c
    if c.dtype != object and _maxabs(c) * abs(k) < _SAFE:
        return c * k
    return c.astype(object) * k


def _mul_coefs_int(c, e):
    if c.dtype != object and _maxabs(c) * 16 < _SAFE:
        return c * e
    return c.astype(object) * e.astype(object)


def _concat_coefs(a, b):
    if a.dtype == object or b.dtype == object:
        return np.concatenate([a.astype(object), b.astype(object)])
    return np.concatenate([a, b])


def _multiply(f: PolyXP, g: PolyXP, chunk=4_000_000):
    """Product by outer expansion, chunked over the terms of the longer factor."""
    if len(f) < len(g):
        f, g = g, f
    big = _maxabs(f.c) * _maxabs(g.c) * min(len(f), len(g)) >= _SAFE
    fc = f.c.astype(object) if big else f.c
    gc = g.c.astype(object) if big else g.c
    step = max(1, chunk // max(1, len(g)))
    parts = []
    for s in range(0, len(f), step):
        sl = slice(s, s + step)
        xk = (f.xk[sl, None] + g.xk[None, :]).ravel()
        pk = (f.pk[sl, None] + g.pk[None, :]).ravel()
        c = (fc[sl, None] * gc[None, :]).ravel()
        parts.append(group_sum(xk, pk, c))
    xk = np.concatenate([p[0] for p in parts])
    pk = np.concatenate([p[1] for p in parts])
    c = _concat_coefs_many([p[2] for p in parts])
    return PolyXP(f.n, xk, pk, c, f.den * g.den)


def _concat_coefs_many(cs):
    if any(c.dtype == object for c in cs):
        return np.concatenate([c.astype(object) for c in cs])
    return np.concatenate(cs)


def poisson(f: PolyXP, g: PolyXP, max_x_degree=None) -> PolyXP:
    """{f, g} = sum_i df/dx_i dg/dp_i - df/dp_i dg/dx_i.

    With ``max_x_degree`` only terms of X-degree <= max_x_degree are formed.
    """
    f._check(g)
    total = PolyXP.zero(f.n)
    for i in range(f.n):
        for a, b, sign in ((f.dx(i), g.dp(i), 1), (f.dp(i), g.dx(i), -1)):
            if a.is_zero() or b.is_zero():
                continue
            if max_x_degree is not None:
                a = a.truncate_x(max_x_degree - int(b.x_degrees().min()))
                b = b.truncate_x(max_x_degree - int(a.x_degrees().min())) if not a.is_zero() else b
                if a.is_zero() or b.is_zero():
                    continue
                prod = (a * b).truncate_x(max_x_degree)
            else:
                prod = a * b
            total = total + (prod if sign > 0 else -prod)
    return total


# ---------------------------------------------------------------------------
# vector-valued polynomials
# ---------------------------------------------------------------------------

class VecPoly:
    """n-vector of polynomials stored as flat term arrays with a component index."""

    __slots__ = ("n", "comp", "xk", "pk", "c")

    def __init__(self, n, comp, xk, pk, c, normalize=True):
        self.n = n
        self.comp = np.asarray(comp, dtype=np.int64)
        self.xk = np.asarray(xk, dtype=np.uint64)
        self.pk = np.asarray(pk, dtype=np.uint64)
        self.c = _as_coef_array(c)
        if normalize:
            self.comp, self.xk, self.pk, self.c = group_sum(self.xk, self.pk, self.c, tag=self.comp)

    @classmethod
    def X(cls, n):
        return cls(n, np.arange(n), [unit_key(i) for i in range(n)], np.zeros(n, np.uint64), np.ones(n, np.int64))

    @classmethod
    def P(cls, n):
        return cls(n, np.arange(n), np.zeros(n, np.uint64), [unit_key(i) for i in range(n)], np.ones(n, np.int64))

    def component(self, i) -> PolyXP:
        m = self.comp == i
        return PolyXP(self.n, self.xk[m], self.pk[m], self.c[m], 1, normalize=False)

    def components(self):
        """List of (xk, pk, c) arrays per component."""
        order = np.argsort(self.comp, kind="stable")
        bounds = np.searchsorted(self.comp[order], np.arange(self.n + 1))
        out = []
        for i in range(self.n):
            sl = order[bounds[i]:bounds[i + 1]]
            out.append((self.xk[sl], self.pk[sl], self.c[sl]))
        return out


def curvature_vecpoly(R_int, A: VecPoly, B: VecPoly, C: VecPoly) -> VecPoly:
    """Integer-curvature trilinear map: sum R_int[a,b,c,d] A_a B_b C_c as a VecPoly."""
    n = A.n
    Rn = np.asarray(R_int)
    idx = np.argwhere(Rn != 0)
    vals = Rn[Rn != 0].astype(np.int64)
    ca, cb, cc = A.components(), B.components(), C.components()
    comp, xs, ps, cs = [], [], [], []
    # group R entries by (a, b, c)
    for (a, b, c, d), v in zip(idx, vals):
        xa, pa, qa = ca[a]
        xb, pb, qb = cb[b]
        xc, pc, qc = cc[c]
        if len(qa) == 0 or len(qb) == 0 or len(qc) == 0:
            continue
        x = (xa[:, None, None] + xb[None, :, None] + xc[None, None, :]).ravel()
        p = (pa[:, None, None] + pb[None, :, None] + pc[None, None, :]).ravel()
        q = (qa[:, None, None] * qb[None, :, None] * qc[None, None, :]).ravel() * v
        comp.append(np.full(len(x), d, dtype=np.int64))
        xs.append(x)
        ps.append(p)
        cs.append(q)
    if not comp:
        e = np.zeros(0, np.uint64)
        return VecPoly(n, np.zeros(0, np.int64), e, e, np.zeros(0, np.int64))
    return VecPoly(n, np.concatenate(comp), np.concatenate(xs), np.concatenate(ps), np.concatenate(cs))
