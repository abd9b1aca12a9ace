"""One test per acceptance criterion; each records a PASS/FAIL line shown in the terminal summary."""
import resource
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE, quadratic, space, topslot
from killing_lab import compare_rank1_topslot, indecomposability_report, membership, resolve
from killing_lab import albert
from killing_lab.hpm import _integer_rows, topslot_generators
from killing_lab.killing_system import _basis_rows, build_quadratic_system, solve
from killing_lab.linalg import span_rank
from killing_lab.taylor_flow import (bernoulli_c, dualize, evaluate_many, geodesic_flow, killing_recursion_check,
                                     killing_vector_even, metric_coefficient, normalized, odd_field_coefficient,
                                     odd_field_series, random_start, series_product, tensor_poly,
                                     topslot_recursion_check_batch)
from killing_lab.tensor_core import BianchiTensor, SymPairTensor, in_bianchi_subspace

TESTS = Path(__file__).parent


def _check(num, title, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def _peak_rss_gb():
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 2 ** 20


@pytest.mark.slow
def test_criterion_01_op2_headline():
    t0 = time.perf_counter()
    rep, _ = indecomposability_report(resolve("op2"))
    elapsed = time.perf_counter() - t0
    got = (rep.unknown_dim, rep.solution_dim, rep.decomposable_dim, rep.indecomposable_dim)
    mem = _peak_rss_gb()
    ok = got == (5440, 676, 666, 10) and elapsed <= 1800 and mem <= 8
    _check(1, "OP2 unknowns/solutions/decomposables/indecomposables", ok,
           f"{got}, {elapsed:.0f} s, peak {mem:.2f} GB")


def test_criterion_02_hp2_decomposable():
    t0 = time.perf_counter()
    rep, _ = indecomposability_report(resolve("hpm:2"))
    elapsed = time.perf_counter() - t0
    ok = rep.solution_dim == rep.decomposable_dim and rep.indecomposable_dim == 0 and elapsed <= 60
    _check(2, "HP2 solutions are decomposable", ok,
           f"solution {rep.solution_dim}, decomposable {rep.decomposable_dim}, {elapsed:.1f} s")


def test_criterion_03_hp3_indecomposables():
    rep, sol = quadratic("hpm:3")
    gens = _integer_rows([T for _, T in topslot_generators(3)])
    fam_i = _integer_rows([T for _, T in topslot_generators(3, ("i",))])
    in_null = not np.any(sol.system.matrix.matvec_exact(np.array(gens, dtype=object).T))
    basis = [list(r) for r in _basis_rows(sol)]
    union = span_rank(basis + gens, certify=True)
    fam_rank = span_rank(gens, certify=True)
    i_rank = span_rank(fam_i, certify=True)
    ok = (rep.indecomposable_dim > 0 and in_null and union == rep.solution_dim and fam_rank == rep.solution_dim
          and i_rank < rep.solution_dim)
    _check(3, "HP3 has indecomposables; families (i)-(iv) span the solutions", ok,
           f"solution {rep.solution_dim}, decomposable {rep.decomposable_dim}, "
           f"indecomposable {rep.indecomposable_dim}, union rank {union}, families {fam_rank}, (i) alone {i_rank}")


def test_criterion_04_cp2_s3_decomposable():
    dims = {sid: quadratic(sid)[0].indecomposable_dim for sid in ("cpm:2", "sphere:3")}
    _check(4, "CP2 and S3 have no indecomposables", all(v == 0 for v in dims.values()), str(dims))


@pytest.mark.slow
@pytest.mark.parametrize("sid,d", [("cpm:2", 2), ("cpm:2", 3), ("hpm:2", 2), ("hpm:2", 3)])
def test_criterion_05_rank1_equals_topslot(sid, d):
    t0 = time.perf_counter()
    r = compare_rank1_topslot(space(sid), d)
    _check(5, f"rank-one and top-slot nullspaces coincide on {sid}, d={d}", r.equal,
           f"dims {r.rank1_dim}/{r.topslot_dim}, assembled levels {r.assembled_levels}, "
           f"lattice levels {r.verified_levels}, {time.perf_counter() - t0:.0f} s")


def test_criterion_06_second_identity_redundant():
    out = {}
    for sid in ("cpm:2", "hpm:2"):
        M = space(sid)
        out[sid] = (solve(build_quadratic_system(M, include_eq22=True)).dim,
                    solve(build_quadratic_system(M, include_eq22=False)).dim)
    _check(6, "second quadratic identity is redundant on rank-one spaces", all(a == b for a, b in out.values()),
           str(out))


def test_criterion_07_series_constants():
    got = ([bernoulli_c(m) for m in range(3)], [metric_coefficient(m) for m in (1, 2)],
           [odd_field_coefficient(m) for m in range(3)])
    F = Fraction
    expect = ([F(1, 2), F(1, 6), F(1, 30)], [F(-1, 3), F(2, 45)], [F(1), F(-1, 3), F(-1, 45)])
    _check(7, "series constants", got == expect, " ".join(str(x) for part in got for x in part))


SMALL_N = [sid for sid in ("sphere:2", "sphere:3", "sphere:4", "cpm:2", "cpm:3", "hpm:1", "hpm:2")]
TOPSLOT_D3 = ["sphere:2", "sphere:3", "sphere:4", "cpm:2", "hpm:1"]


def test_criterion_08_topslot_single_term():
    assert all(space(sid).n <= 8 for sid in SMALL_N)
    checked, failed = 0, []
    for sid in SMALL_N:
        quad = [T.canonical_vector() for T in quadratic(sid)[1].tensors()]
        assert all(Fraction(c).denominator == 1 for v in quad for c in v)
        quad = [[int(c) for c in v] for v in quad]
        cases = [(2, quad), (1, _basis_rows(topslot(sid, 1)[1]))]
        if sid in TOPSLOT_D3:
            cases.append((3, _basis_rows(topslot(sid, 3)[1])))
        for d, B in cases:
            res = topslot_recursion_check_batch(space(sid), list(B), d, d + 6)
            checked += len(B)
            if not res.ok:
                failed.append((sid, d, res.failures[:3]))
    _check(8, "top-slot tensors pass the recursion through order d+6", not failed and checked > 0,
           f"{checked} basis tensors over {len(SMALL_N)} spaces, failures {failed}")


def _max_deviation(M, tensors, starts, s_max=1.0):
    Ks = [normalized(tensor_poly(T)) for T in tensors]
    worst = 0.0
    for X0, P0 in starts:
        _, Y = geodesic_flow(M, X0, P0, s_max)
        for K in Ks:
            v = evaluate_many(K, Y[:, :M.n], Y[:, M.n:])
            worst = max(worst, float(np.max(np.abs(v - v[0]))))
    return worst


def _perturbed(T):
    """T plus max|coefficient| on the x0^2 p1^2 entry of its pair-symmetric form."""
    coeffs = dict(T.to_sympair().coeffs)
    key = ((0, 0), (1, 1))
    coeffs[key] = coeffs.get(key, 0) + max(abs(c) for c in coeffs.values())
    return SymPairTensor(T.n, coeffs)


@pytest.mark.slow
def test_criterion_09_conservation():
    rng = np.random.default_rng(0)
    parts = {}
    for sid in ("cpm:2", "hpm:2"):
        M = space(sid)
        sol = quadratic(sid)[1]
        starts = [random_start(M, rng) for _ in range(20)]
        parts[sid] = _max_deviation(M, sol.tensors(), starts)
    M = space("hpm:2")
    T = quadratic("hpm:2")[1].tensors()[0]
    bad = _perturbed(T)
    system = quadratic("hpm:2")[1].system
    assert not in_bianchi_subspace(bad) or not membership(BianchiTensor.from_sympair(bad), system)
    negative = _max_deviation(M, [bad], [random_start(M, rng) for _ in range(5)])
    emb = 0.0
    for _ in range(10):
        A = albert.random_trace_free(rng)
        X0 = albert.random_cayley_point(rng)
        V0 = albert.random_tangent(X0, rng)
        emb = max(emb, albert.embedded_geodesic_check(A, X0, V0, s_max=np.pi))
    ok = parts["cpm:2"] <= 1e-8 and parts["hpm:2"] <= 1e-8 and emb <= 1e-8 and negative > 1e-4
    _check(9, "Killing polynomials are conserved along geodesics", ok,
           f"cpm:2 {parts['cpm:2']:.1e}, hpm:2 {parts['hpm:2']:.1e}, embedded OP2 {emb:.1e}, "
           f"perturbed {negative:.1e}")


def test_criterion_10_duality():
    s3, c2, s2 = space("sphere:3"), space("cpm:2"), space("sphere:2")
    f2 = odd_field_series(s2, [1, 0], 6)
    samples = [
        ("sphere:3 top-slot", s3, [None, quadratic("sphere:3")[1].tensors()[0]], 2, 0, True),
        ("cpm:2 top-slot", c2, [None, quadratic("cpm:2")[1].tensors()[3]], 2, 0, True),
        ("sphere:3 odd field", s3, odd_field_series(s3, [1, 2, 0], 6), 1, 0, False),
        ("cpm:2 even field", c2, [killing_vector_even(c2, c2.isotropy_gens[0])], 1, 1, True),
        ("sphere:2 odd field squared", s2, series_product(f2, f2, 6), 2, 0, False),
    ]
    results = {}
    for name, M, co, d, b, complete in samples:
        assert killing_recursion_check(M, co, d, b, 6, complete=complete).ok
        results[name] = killing_recursion_check(M.scaled(-1), dualize(co, b), d, b, 6, complete=complete).ok
    _check(10, "dual series satisfy the recursion for the sign-flipped curvature", all(results.values()),
           ", ".join(f"{k}: {v}" for k, v in results.items()))


PROPERTY_TESTS = [
    "test_catalog.py::test_curvature_symmetries_and_invariance",
    "test_catalog.py::test_curvature_identities_random_tuples",
    "test_albert.py::test_clifford_relations",
    "test_albert.py::test_octonion_norm_multiplicative",
    "test_albert.py::test_octonion_alternative_and_conjugation",
    "test_tensor_core.py::test_young_lemma_bruteforce",
    "test_tensor_core.py::test_young_lemma_random_tensors",
    "test_taylor_flow.py::test_poisson_jacobi_antisymmetry_bilinearity",
    "test_hpm.py::test_sp1_invariance_of_ambient_families",
    "test_hpm.py::test_bracket_relation_random",
]


def test_criterion_11_property_suites():
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(TESTS / t) for t in PROPERTY_TESTS]],
                          capture_output=True, text=True, cwd=TESTS.parent)
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    _check(11, "exact property suites", proc.returncode == 0 and elapsed <= 300, f"{tail}, {elapsed:.0f} s")
