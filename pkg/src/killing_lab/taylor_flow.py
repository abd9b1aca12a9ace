"""Series in normal coordinates, the Killing recursion, duality and geodesic checks.

Normal coordinates X on a symmetric space and the fibre coordinates P give
the Hamiltonian H = sum_m c_m <R_X^m P, P>, with R_X P = R(P,X)X.  A
polynomial K(X,P) is the function of a Killing tensor iff {H, K} = 0; the
X-degree N-1 part of that bracket is the N-th recursion equation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, gcd

import numpy as np
import sympy
from scipy.integrate import solve_ivp

from .catalog import SymmetricSpaceModel
from .poly import PolyXP, VecPoly, curvature_vecpoly, exponents_from_key, key_exponent, poisson, unit_key
from .tensor_core import BianchiTensor, SymTensorRankD, multisets


# ---------------------------------------------------------------------------
# series constants
# ---------------------------------------------------------------------------

def _bernoulli(k):
    return Fraction(sympy.Rational(sympy.bernoulli(k)).p, sympy.Rational(sympy.bernoulli(k)).q)


@lru_cache(maxsize=None)
def bernoulli_c(m: int) -> Fraction:
    """Coefficient c_m of <R_X^m P, P> in the Hamiltonian series."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return Fraction((-1) ** (m + 1) * (2 * m - 1)) * Fraction(2) ** (2 * m - 1) * _bernoulli(2 * m) / factorial(2 * m)


@lru_cache(maxsize=None)
def metric_coefficient(m: int) -> Fraction:
    """Coefficient of R_X^m in the metric g(X) = sin^2(sqrt t)/t at t = R_X."""
    return Fraction(2 ** (2 * m + 1) * (-1) ** m, factorial(2 * m + 2))


@lru_cache(maxsize=None)
def odd_field_coefficient(m: int) -> Fraction:
    """Coefficient of R_X^m in sqrt(t) cot(sqrt(t))."""
    return Fraction((-1) ** m * 2 ** (2 * m)) * _bernoulli(2 * m) / factorial(2 * m)


# ---------------------------------------------------------------------------
# polynomial building blocks
# ---------------------------------------------------------------------------

def _vec_dot_P(v: VecPoly, scale=Fraction(1)) -> PolyXP:
    """sum_i v_i p_i as a PolyXP."""
    keys = np.array([unit_key(i) for i in range(v.n)], dtype=np.uint64)
    q = Fraction(scale)
    c = v.c.astype(object) * q.numerator
    return PolyXP(v.n, v.xk, v.pk + keys[v.comp], c, q.denominator)


def _vec_dot_const(v: VecPoly, w, scale=Fraction(1)) -> PolyXP:
    w = [Fraction(x) for x in w]
    den = 1
    for x in w:
        den = den * x.denominator // gcd(den, x.denominator)
    wi = np.array([int(x * den) for x in w], dtype=object)
    q = Fraction(scale) / den
    c = v.c.astype(object) * wi[v.comp] * q.numerator
    return PolyXP(v.n, v.xk, v.pk, c, q.denominator)


def jacobi_powers(space: SymmetricSpaceModel, m_max: int):
    """Integer vector polynomials R_int-version of R_X^m P for m = 0..m_max.

    The true R_X^m P equals space.R_scale**m times entry m.
    """
    n = space.n
    X = VecPoly.X(n)
    out = [VecPoly.P(n)]
    for _ in range(m_max):
        out.append(curvature_vecpoly(space.R_int, out[-1], X, X))
    return out


def jacobi_form(space, m: int) -> PolyXP:
    """<R_X^m P, P> with exact curvature scale."""
    return _vec_dot_P(jacobi_powers(space, m)[m], Fraction(space.R_scale) ** m)


def hamiltonian_series(space: SymmetricSpaceModel, order: int) -> PolyXP:
    """sum_{m <= order} c_m <R_X^m P, P>."""
    if order < 0:
        raise ValueError("order must be >= 0")
    pw = jacobi_powers(space, order)
    H = PolyXP.zero(space.n)
    for m in range(order + 1):
        H = H + _vec_dot_P(pw[m], bernoulli_c(m) * Fraction(space.R_scale) ** m)
    return H


def metric_series(space: SymmetricSpaceModel, X, order: int):
    """Exact matrix sum_{m <= order} a_m R_X^m at a rational point X."""
    J = space.jacobi_matrix([Fraction(x) for x in X], exact=True)
    n = space.n
    out = np.zeros((n, n), dtype=object)
    out[:] = Fraction(0)
    Pm = np.eye(n, dtype=object) * Fraction(1)
    for m in range(order + 1):
        out = out + Pm * metric_coefficient(m)
        Pm = Pm.dot(J)
    return out


def killing_vector_even(space: SymmetricSpaceModel, A) -> PolyXP:
    """<A X, P> for an isotropy generator A."""
    return PolyXP.bilinear(space.n, np.asarray(A, dtype=object))


def killing_vector_odd(space: SymmetricSpaceModel, v, order: int) -> PolyXP:
    """<v, sum_{m <= order} b_m R_X^m P>, i.e. terms up to X-degree 2*order."""
    if order < 0:
        raise ValueError("order must be >= 0")
    pw = jacobi_powers(space, order)
    K = PolyXP.zero(space.n)
    for m in range(order + 1):
        K = K + _vec_dot_const(pw[m], v, odd_field_coefficient(m) * Fraction(space.R_scale) ** m)
    return K


def tensor_poly(T) -> PolyXP:
    """K(X^d, P^d) for a SymTensorRankD or BianchiTensor."""
    if isinstance(T, BianchiTensor):
        T = T.to_sympair()
    n = T.n
    terms = {}
    for (a, b), c in T.poly_terms().items():
        ea = tuple(a.count(i) for i in range(n))
        eb = tuple(b.count(i) for i in range(n))
        terms[(ea, eb)] = c
    return PolyXP.from_dict(n, terms)


def normalized(K: PolyXP) -> PolyXP:
    """K scaled so that its largest monomial coefficient has absolute value 1."""
    if K.is_zero():
        return K
    top = max(abs(int(c)) for c in K.c)
    return K.scale(Fraction(K.den, top))


def x_degree_split(K: PolyXP):
    """{N: X-degree-N part} for a polynomial."""
    degs = K.x_degrees()
    return {int(N): K.select(degs == N) for N in np.unique(degs)}


# ---------------------------------------------------------------------------
# the recursion
# ---------------------------------------------------------------------------

@dataclass
class RecursionCheck:
    ok: bool
    checked_through: int
    first_failure: int | None
    failures: list


def _as_poly(term, d):
    if isinstance(term, PolyXP):
        return term
    if isinstance(term, (SymTensorRankD, BianchiTensor)):
        return tensor_poly(term)
    raise TypeError("coefficients must be PolyXP or tensors")


def recursion_equation(space, coeffs: dict, N: int, jforms=None) -> PolyXP:
    """{1/2|P|^2, K_N} + sum_{m>=1} c_m {<R_X^m P,P>, K_{N-2m}} for a degree -> poly map."""
    n = space.n
    E = PolyXP.zero(n)
    half = jforms[0] if jforms else jacobi_form(space, 0).scale(Fraction(1, 2))
    if N in coeffs:
        E = E + poisson(half, coeffs[N])
    for m in range(1, N // 2 + 1):
        K = coeffs.get(N - 2 * m)
        if K is None or K.is_zero():
            continue
        f = jforms[m] if jforms and m < len(jforms) else jacobi_form(space, m)
        E = E + poisson(f, K).scale(bernoulli_c(m))
    return E


def killing_recursion_check(space: SymmetricSpaceModel, coeffs, d: int, b: int, order: int,
                            complete: bool = False) -> RecursionCheck:
    """Check the recursion equations N = 1..order for the series sum_s K_{b+2s}.

    ``coeffs[s]`` is K_{b+2s}(X^{b+2s}, P^d) as a PolyXP or a tensor, or None
    for a zero coefficient.  Unless
    ``complete`` declares the remaining coefficients zero, equations are only
    trusted up to the highest supplied X-degree and a larger ``order`` is
    refused.
    """
    if b not in (0, 1):
        raise ValueError("b must be 0 or 1")
    polys = {b + 2 * s: _as_poly(t, d) for s, t in enumerate(coeffs) if t is not None}
    for N, K in polys.items():
        if not K.is_zero():
            degs = K.x_degrees()
            if np.any(degs != N) or np.any(K.p_degrees() != d):
                raise ValueError(f"coefficient of index {N} has the wrong bidegree")
    top = max(polys) if polys else b
    if not complete and order > top:
        raise ValueError(f"series truncated at X-degree {top}; cannot check beyond order {top}")
    jforms = [jacobi_form(space, 0).scale(Fraction(1, 2))] + [jacobi_form(space, m) for m in range(1, order // 2 + 1)]
    failures = []
    for N in range(1, order + 1):
        if (N - b) % 2:
            continue
        E = recursion_equation(space, polys, N, jforms)
        if not E.is_zero():
            failures.append(N)
    return RecursionCheck(not failures, order, failures[0] if failures else None, failures)


def dualize(coeffs, b: int = 0):
    """Multiply the s-th coefficient by (-1)^s; pairs with the model R -> -R."""
    out = []
    for s, t in enumerate(coeffs):
        if s % 2 == 0 or t is None:
            out.append(t)
        elif isinstance(t, PolyXP):
            out.append(-t)
        else:
            out.append(t.scaled(-1))
    return out


def series_product(a, b_, max_degree, ba=0, bb=0):
    """Coefficient list of the product of two series, truncated at X-degree max_degree.

    ``ba`` and ``bb`` are the parities of the factors; the product has parity
    (ba + bb) mod 2 and its coefficient list starts at that degree.
    """
    n = _as_poly(a[0], 0).n if isinstance(a[0], PolyXP) else a[0].n
    out = {}
    for i, f in enumerate(a):
        for j, g in enumerate(b_):
            N = ba + 2 * i + bb + 2 * j
            if N <= max_degree:
                out[N] = out.get(N, PolyXP.zero(n)) + f * g
    start = (ba + bb) % 2
    return [out.get(N, PolyXP.zero(n)) for N in range(start, max_degree + 1, 2)]


def odd_field_series(space, v, max_degree):
    """Coefficient list [K_0, K_2, ...] of the field <v, sqrt(t)cot(sqrt(t))|_{t=R_X} P>.

    The X-degrees are even, so the list has parity b = 0; terms up to
    X-degree ``max_degree`` are kept.
    """
    pw = jacobi_powers(space, max_degree // 2)
    return [_vec_dot_const(pw[m], v, odd_field_coefficient(m) * Fraction(space.R_scale) ** m)
            for m in range(max_degree // 2 + 1)]


# ---------------------------------------------------------------------------
# batched recursion check for top-slot tensors
# ---------------------------------------------------------------------------

def _gradient_slots(f: PolyXP):
    """(dx f, dp f) as VecPolys with integer coefficients times 1/f.den."""
    n = f.n
    parts = {}
    for name, op in (("Gx", f.dx), ("Gp", f.dp)):
        comp, xs, ps, cs = [], [], [], []
        for i in range(n):
            g = op(i)
            comp.append(np.full(len(g), i, dtype=np.int64))
            xs.append(g.xk)
            ps.append(g.pk)
            cs.append(g.c * (f.den // g.den) if g.den != f.den else g.c)
        parts[name] = VecPoly(n, np.concatenate(comp), np.concatenate(xs), np.concatenate(ps),
                              np.concatenate(cs).astype(np.int64)).components()
    return parts


def topslot_recursion_rows(space: SymmetricSpaceModel, d: int, m: int):
    """Rows (canonical SymTensorRankD coordinates) of K_d -> {<R_X^m P,P>, K_d(X^d,P^d)}.

    The gradient of <R_X^m P, P> comes from generic differentiation of the
    integer-curvature polynomial, not from curvature identities.  m = 0 uses
    |P|^2.  Returns a scipy CSR matrix.
    """
    from .killing_system import Identity, _canonical_rows
    f = _vec_dot_P(jacobi_powers(space, m)[m])
    slots = _gradient_slots(f)
    # {f, K} = sum_i df/dx_i dK/dp_i - df/dp_i dK/dx_i
    #        = d K(X^d ; P^{d-1}, Gx) - d K(X^{d-1}, Gp ; P^d)
    ident = Identity(f"bracket_m{m}", ((d, "X" * d, "P" * (d - 1) + "A"), (-d, "X" * (d - 1) + "B", "P" * d)))
    M, _ = _canonical_rows(space, [ident], d, extra_slots={"A": slots["Gx"], "B": slots["Gp"]})
    return M


@dataclass
class BatchRecursionCheck:
    ok: bool
    order: int
    failures: list  # (N, index of failing basis vector)


def topslot_recursion_check_batch(space, vectors, d: int, order: int) -> BatchRecursionCheck:
    """Recursion check through ``order`` for top-slot tensors given as canonical integer vectors.

    For a single top-slot term K_d the equations with N = d + 2m reduce to
    {<R_X^m P,P>, K_d} = 0 for every 2m <= order - d, and all other N are void.
    """
    V = np.array([[int(x) for x in v] for v in vectors], dtype=object).T if vectors else None
    failures = []
    for m in range(0, (order - d) // 2 + 1):
        M = topslot_recursion_rows(space, d, m)
        if V is None:
            continue
        from .killing_system import _to_sparse_int
        res = _to_sparse_int(M).matvec_exact(V)
        bad = np.flatnonzero(np.any(res != 0, axis=0))
        failures.extend((d + 2 * m, int(j)) for j in bad)
    return BatchRecursionCheck(not failures, order, failures)


# ---------------------------------------------------------------------------
# closed-form rank-one Hamiltonian and geodesic flow
# ---------------------------------------------------------------------------

SERIES_SWITCH = 1e-2
_PSI_TERMS = 10


def _psi_series(t):
    return sum(float(bernoulli_c(m)) * t ** (m - 1) for m in range(1, _PSI_TERMS + 1))


def _dpsi_series(t):
    return sum((m - 1) * float(bernoulli_c(m)) * t ** (m - 2) for m in range(2, _PSI_TERMS + 1))


def psi(t):
    """(t - sin^2 r) / (2 t sin^2 r) with r = sqrt(t)."""
    if t < SERIES_SWITCH ** 2:
        return _psi_series(t)
    r = np.sqrt(t)
    return 1.0 / (2.0 * np.sin(r) ** 2) - 1.0 / (2.0 * t)


def dpsi(t):
    if t < SERIES_SWITCH ** 2:
        return _dpsi_series(t)
    r = np.sqrt(t)
    return -np.cos(r) / (2.0 * r * np.sin(r) ** 3) + 1.0 / (2.0 * t * t)


def sigma(t):
    return 1.0 / (6.0 * np.cos(np.sqrt(t)) ** 2)


def dsigma(t):
    r = np.sqrt(t)
    return np.sinc(r / np.pi) / (6.0 * np.cos(r) ** 3)


class ChartExitError(RuntimeError):
    """The trajectory reached the cut locus |X| = pi/2 of the chart."""

    def __init__(self, s):
        super().__init__(f"trajectory left the normal chart at s={s:.6g}")
        self.s = s


def _check_rank_one(space: SymmetricSpaceModel):
    if not space.rank_one:
        raise ValueError("closed-form Hamiltonian needs a rank-one space")
    rng = np.random.default_rng(7)
    X = rng.standard_normal(space.n)
    X /= np.linalg.norm(X)
    ev = np.linalg.eigvalsh(space.jacobi_matrix(X))
    if not all(min(abs(e - 0), abs(e - 1), abs(e - 4)) < 1e-9 for e in ev):
        raise ValueError("closed-form Hamiltonian needs curvature normalized to [1, 4]")


def rank1_hamiltonian(space: SymmetricSpaceModel, X, P, _checked=False):
    """H(X,P) = 1/2|P|^2 + psi(t) Q0 + sigma(t) Q1 with t = |X|^2.

    Q0 = |X|^2|P|^2 - <X,P>^2 and Q1 = R(P,X,X,P) - Q0.
    """
    if not _checked:
        _check_rank_one(space)
    X = np.asarray(X, dtype=float)
    P = np.asarray(P, dtype=float)
    t = float(X @ X)
    if np.sqrt(t) >= np.pi / 2:
        raise ValueError("|X| must be below pi/2")
    Q0 = t * (P @ P) - (X @ P) ** 2
    S = float(P @ space.jacobi_matrix(X) @ P)
    return 0.5 * (P @ P) + psi(t) * Q0 + sigma(t) * (S - Q0)


def rank1_gradient(space, X, P, Rf=None):
    """(dH/dX, dH/dP) of the closed-form Hamiltonian."""
    Rf = space.R_float if Rf is None else Rf
    t = float(X @ X)
    xp = float(X @ P)
    pp = float(P @ P)
    Q0 = t * pp - xp * xp
    JX = np.einsum("abcd,b,c->da", Rf, X, X)  # R_X as a matrix
    JP = JX @ P
    S = float(P @ JP)
    dQ0x = 2 * X * pp - 2 * xp * P
    dQ0p = 2 * t * P - 2 * xp * X
    dSx = np.einsum("abcd,a,c,d->b", Rf, P, X, P) + np.einsum("abcd,a,b,d->c", Rf, P, X, P)
    dSp = 2 * JP
    ps, ss = psi(t), sigma(t)
    dps, dss = dpsi(t), dsigma(t)
    Q1 = S - Q0
    gx = 2 * X * (dps * Q0 + dss * Q1) + ps * dQ0x + ss * (dSx - dQ0x)
    gp = P + ps * dQ0p + ss * (dSp - dQ0p)
    return gx, gp


def evaluate_many(K: PolyXP, Xs, Ps):
    """Float values of K at rows of Xs and Ps."""
    Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
    Ps = np.atleast_2d(np.asarray(Ps, dtype=float))
    vals = np.ones((Xs.shape[0], len(K)))
    for i in range(K.n):
        ex = key_exponent(K.xk, i)
        ep = key_exponent(K.pk, i)
        if np.any(ex):
            vals *= Xs[:, i:i + 1] ** ex[None, :]
        if np.any(ep):
            vals *= Ps[:, i:i + 1] ** ep[None, :]
    return vals @ (K.c.astype(np.float64) / K.den)


@dataclass
class FlowResult:
    max_deviation: float
    energy_drift: float
    s_max: float
    samples: int
    max_radius: float
    trajectory: np.ndarray | None = None


def geodesic_flow(space, X0, P0, s_max=1.0, samples=201, rtol=1e-13, atol=1e-14):
    """Integrate Hamilton's equations of the closed-form Hamiltonian with DOP853."""
    _check_rank_one(space)
    n = space.n
    Rf = space.R_float

    def rhs(s, y):
        X, P = y[:n], y[n:]
        gx, gp = rank1_gradient(space, X, P, Rf)
        return np.concatenate([gp, -gx])

    def leave(s, y):
        return np.pi / 2 - 1e-6 - np.linalg.norm(y[:n])
    leave.terminal = True

    y0 = np.concatenate([np.asarray(X0, float), np.asarray(P0, float)])
    ts = np.linspace(0.0, s_max, samples)
    sol = solve_ivp(rhs, (0.0, s_max), y0, method="DOP853", t_eval=ts, rtol=rtol, atol=atol, events=leave)
    if sol.status == 1:
        raise ChartExitError(float(sol.t_events[0][0]))
    if sol.status != 0:
        raise RuntimeError(sol.message)
    return sol.t, sol.y.T


def integrate_and_check(space, K: PolyXP, X0, P0, s_max=1.0, samples=201, tol=None) -> FlowResult:
    """Max |K(X(s),P(s)) - K(X0,P0)| along the geodesic flow of the closed-form Hamiltonian."""
    n = space.n
    ts, Y = geodesic_flow(space, X0, P0, s_max, samples)
    vals = evaluate_many(K, Y[:, :n], Y[:, n:])
    energy = np.array([rank1_hamiltonian(space, y[:n], y[n:], _checked=True) for y in Y])
    res = FlowResult(float(np.max(np.abs(vals - vals[0]))), float(np.max(np.abs(energy - energy[0]))),
                     s_max, len(ts), float(np.max(np.linalg.norm(Y[:, :n], axis=1))))
    return res


def random_start(space, rng, radius=0.2):
    """Random (X0, P0) with |X0| <= radius and unit speed."""
    n = space.n
    X = rng.standard_normal(n)
    X *= radius * rng.uniform(0.2, 1.0) / np.linalg.norm(X)
    P = rng.standard_normal(n)
    h = rank1_hamiltonian(space, X, P)
    return X, P / np.sqrt(2 * h)
