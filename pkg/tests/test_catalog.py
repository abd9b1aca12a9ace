import json
from fractions import Fraction

import numpy as np
import pytest

from killing_lab import indecomposability_report
from killing_lab.catalog import (CATALOG, catalog_table, make_cpm, make_from_structure_constants, make_hpm,
                                 make_op2, make_sphere, resolve)

ROOT_DATA = __file__.rsplit("/tests/", 1)[0] + "/data/spaces/"
RANK_ONE = ["sphere:2", "sphere:3", "sphere:4", "cpm:2", "cpm:3", "hpm:1", "hpm:2", "hpm:3", "op2"]


@pytest.mark.parametrize("sid", CATALOG)
def test_curvature_symmetries_and_invariance(sid, get_space):
    M = get_space(sid)
    assert M.check_symmetries()


@pytest.mark.parametrize("sid", [s for s in CATALOG if s != "op2"])
def test_curvature_identities_random_tuples(sid, get_space):
    # exact checks on random integer vectors
    M = get_space(sid)
    rng = np.random.default_rng(11)
    for _ in range(200 // M.n):
        X, Y, Z, V = ([int(v) for v in rng.integers(-3, 4, M.n)] for _ in range(4))
        assert M.R4(X, Y, Z, V) == -M.R4(Y, X, Z, V)
        assert M.R4(X, Y, Z, V) == -M.R4(X, Y, V, Z)
        assert M.R4(X, Y, Z, V) == M.R4(Z, V, X, Y)
        assert M.R4(X, Y, Z, V) + M.R4(Y, Z, X, V) + M.R4(Z, X, Y, V) == 0


@pytest.mark.parametrize("sid", CATALOG)
def test_isotropy_generators_skew(sid, get_space):
    M = get_space(sid)
    rng = np.random.default_rng(12)
    for A in M.isotropy_gens:
        assert np.array_equal(A, -A.T)
        X = rng.integers(-5, 6, M.n)
        assert int(X @ A @ X) == 0


@pytest.mark.parametrize("sid", RANK_ONE)
def test_rank_one_spectrum(sid, get_space):
    M = get_space(sid)
    rng = np.random.default_rng(13)
    for _ in range(3):
        X = rng.standard_normal(M.n)
        X /= np.linalg.norm(X)
        ev = np.sort(np.linalg.eigvalsh(M.jacobi_matrix(X)))
        assert abs(ev[0]) < 1e-10
        assert all(min(abs(e - 1), abs(e - 4)) < 1e-10 for e in ev[1:])


def test_sectional_curvature_in_range():
    rng = np.random.default_rng(14)
    for sid in ("cpm:2", "hpm:2", "op2"):
        M = resolve(sid)
        for _ in range(20):
            X, P = rng.standard_normal((2, M.n))
            P -= (P @ X) / (X @ X) * X
            X /= np.linalg.norm(X)
            P /= np.linalg.norm(P)
            k = M.sectional_form(X, P)
            assert 1 - 1e-10 <= k <= 4 + 1e-10


def test_sphere_examples():
    M = make_sphere(3)
    X, P = [1, 0, 0], [0, 1, 0]
    assert list(M.curvature(P, X, X)) == [0, 1, 0]
    assert not any(M.curvature(X, X, [1, 2, 3]))
    assert len(M.isotropy_gens) == 3


def test_cpm_examples():
    M = make_cpm(2)
    J = M.complex_structures[0]
    X = np.array([1, 0, 0, 0])
    assert M.sectional_form(list(X), [int(v) for v in J @ X]) == 4
    # unit P orthogonal to X and JX
    P = [0, 0, 1, 0]
    assert int(np.array(P) @ J @ X) == 0
    assert M.sectional_form(list(X), P) == 1
    ev = np.sort(np.linalg.eigvalsh(M.jacobi_matrix(X.astype(float))))
    assert np.allclose(ev, [0, 1, 1, 4])


def test_hpm_examples():
    M = make_hpm(2)
    assert M.isotropy_dim == 13
    X = np.zeros(8, dtype=np.int64)
    X[0] = 1
    J1 = M.complex_structures[0]
    assert M.sectional_form(list(X), [int(v) for v in J1 @ X]) == 4
    ev = np.linalg.eigvalsh(M.jacobi_matrix(X.astype(float)))
    assert np.sum(np.abs(ev - 4) < 1e-10) == 3


def test_op2_examples():
    M = make_op2()
    assert len(M.isotropy_gens) == 36
    assert M.isotropy_dim == 36
    for A in M.isotropy_gens:
        assert np.array_equal(A, -A.T)
    X = np.zeros(16)
    X[3] = 1.0
    ev = np.sort(np.linalg.eigvalsh(M.jacobi_matrix(X)))
    assert np.allclose(ev, [0] + [1] * 8 + [4] * 7)


def test_op2_quoted_sign_spectrum():
    # the opposite sign on the Clifford sum gives eigenvalues 2 (x7) and 5 (x8), not a multiple of (1, 4)
    M = make_op2(sum_sign=1)
    X = np.zeros(16)
    X[0] = 1.0
    ev = np.sort(np.linalg.eigvalsh(M.jacobi_matrix(X)))
    assert np.allclose(ev, [0] + [2] * 7 + [5] * 8)


def test_file_model_matches_sphere2():
    M = resolve("file:" + ROOT_DATA + "so3_s2.json")
    S = make_sphere(2)
    assert np.array_equal(M.R_exact, S.R_exact)


def test_file_model_su2_matches_sphere3():
    M = resolve("file:" + ROOT_DATA + "su2xsu2_diag.json")
    S = make_sphere(3)
    R, Rs = M.R_exact, S.R_exact
    c = R[0, 1, 1, 0] / Rs[0, 1, 1, 0]
    assert c > 0 and np.all(R == Rs * c)
    a, _ = indecomposability_report(M)
    b, _ = indecomposability_report(S)
    assert (a.solution_dim, a.decomposable_dim) == (b.solution_dim, b.decomposable_dim)


def test_abelian_model_is_flat():
    table = {"h_dim": 0, "m_dim": 3, "brackets": [], "inner_product": ["1", "1", "1"]}
    M = make_from_structure_constants(json.dumps(table), name="flat3")
    assert not np.any(M.R_int)


def test_scaled_model():
    base = make_cpm(2)
    M = base.scaled(Fraction(1, 4))
    assert M.scale_factor == Fraction(1, 4)
    for X, P in (([1, 0, 0, 0], [0, 1, 0, 0]), ([1, 2, 0, -1], [0, 1, 3, 1])):
        assert M.sectional_form(X, P) == base.sectional_form(X, P) / 4
    with pytest.raises(ValueError):
        M.scaled(0)


def test_resolve_errors():
    for bad in ("nope:2", "sphere:x", "", "file:"):
        with pytest.raises(KeyError):
            resolve(bad)


def test_catalog_table():
    rows = catalog_table()
    ids = [r["id"] for r in rows]
    assert ids[:len(CATALOG)] == list(CATALOG)
    by_id = {r["id"]: r for r in rows}
    assert by_id["op2"]["n"] == 16 and by_id["op2"]["isotropy_dim"] == 36
    assert by_id["hpm:2"]["isotropy_dim"] == 13


def test_content_hash_stable():
    assert make_cpm(2).content_hash() == make_cpm(2).content_hash()
    assert make_cpm(2).content_hash() != make_cpm(3).content_hash()
