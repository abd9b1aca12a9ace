import json

import pytest

from killing_lab.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from killing_lab.tensor_core import tensor_to_json


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_catalog_json_and_csv(capsys):
    code, out, _ = _run(["catalog"], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["schema"] == 1
    assert any(r["id"] == "op2" and r["isotropy_dim"] == 36 for r in rep["rows"])
    code, out, _ = _run(["catalog", "--format", "csv"], capsys)
    assert code == EXIT_OK and out.splitlines()[0].startswith("hint,id")


@pytest.mark.parametrize("sid", ["sphere:3", "hpm:2"])
def test_solve_decomposable(sid, capsys):
    code, out, _ = _run(["solve", "--space", sid, "--rank", "2"], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["indecomposable_dim"] == 0
    assert rep["solution_dim"] == rep["decomposable_dim"]
    assert rep["schema"] == 1 and rep["seed"] == 0 and len(rep["content_hash"]) == 40


def test_solve_rerun_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["solve", "--space", "cpm:2", "--out", str(a)]) == EXIT_OK
    assert main(["solve", "--space", "cpm:2", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_solve_rank3_shortcut(capsys):
    code, out, _ = _run(["solve", "--space", "cpm:2", "--rank", "3", "--rank1-shortcut"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["solution_dim"] == 20


def test_usage_errors(capsys):
    assert _run(["solve", "--space", "nowhere:3"], capsys)[0] == EXIT_USAGE
    assert _run(["solve", "--space", "sphere:3", "--rank", "0"], capsys)[0] == EXIT_USAGE
    assert _run(["solve"], capsys)[0] == EXIT_USAGE
    assert _run(["frobnicate"], capsys)[0] == EXIT_USAGE
    assert _run(["verify", "--space", "cpm:2"], capsys)[0] == EXIT_USAGE
    assert _run(["solve", "--space", "file:/no/such/file.json"], capsys)[0] == EXIT_USAGE
    assert _run(["verify", "--space", "cpm:2", "--from-nullspace", "99"], capsys)[0] == EXIT_USAGE


def test_verify_from_nullspace(capsys):
    code, out, _ = _run(["verify", "--space", "cpm:2", "--from-nullspace", "0", "--geodesics", "20"], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["passed"] and rep["max_deviation"] <= 1e-8


def test_verify_perturbed_tensor_fails(tmp_path, capsys):
    from conftest import quadratic
    _, sol = quadratic("hpm:2")
    T = sol.tensors()[0].to_sympair()
    coeffs = dict(T.coeffs)
    key = ((0, 0), (1, 1))
    coeffs[key] = coeffs.get(key, 0) + max(abs(c) for c in coeffs.values())
    from killing_lab.tensor_core import SymPairTensor
    path = tmp_path / "perturbed.json"
    path.write_text(tensor_to_json(SymPairTensor(8, coeffs)))
    code, out, err = _run(["verify", "--space", "hpm:2", "--tensor", str(path), "--geodesics", "3"], capsys)
    assert code == EXIT_FAIL
    assert json.loads(out)["max_deviation"] > 1e-4


def test_verify_embedded(capsys):
    code, out, _ = _run(["verify", "--space", "op2-embedded", "--ka-random", "--geodesics", "2"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["max_deviation"] <= 1e-8
