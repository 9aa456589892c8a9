"""File codecs: matrix text format, distribution JSON, descriptors."""

import json

import numpy as np
import pytest

from hashprop.formats import (
    ParseError,
    bc_code_from_obj,
    bc_problem_from_obj,
    distribution_from_obj,
    distribution_to_obj,
    emit_matrix,
    ensemble_from_obj,
    load_bc_code,
    load_matrix,
    parse_matrix,
    parse_symbols,
)
from hashprop.gf import FieldMatrix


def test_matrix_round_trip():
    m = FieldMatrix.from_dense(3, [[0, 1, 2], [2, 0, 0]])
    assert parse_matrix(emit_matrix(m)) == m
    empty = FieldMatrix.zeros(2, 2, 3)
    assert parse_matrix(emit_matrix(empty)) == empty


def test_matrix_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError, match="line 1"):
        parse_matrix("")
    with pytest.raises(ParseError, match="line 1"):
        parse_matrix("2 2\n")
    with pytest.raises(ParseError, match="line 2"):
        parse_matrix("2 2 2\n0 0\n")
    with pytest.raises(ParseError, match="line 2"):
        parse_matrix("2 2 2\n0 5 1\n")
    with pytest.raises(ParseError, match="line 3.*sorted"):
        parse_matrix("2 2 2\n1 0 1\n0 0 1\n")
    with pytest.raises(ParseError, match="line 3.*duplicate"):
        parse_matrix("2 2 2\n0 0 1\n0 0 1\n")
    with pytest.raises(ParseError, match="residue"):
        parse_matrix("2 2 2\n0 0 3\n")


def test_load_matrix_missing_file(tmp_path):
    with pytest.raises(ParseError, match="nope.txt"):
        load_matrix(str(tmp_path / "nope.txt"))
    path = tmp_path / "m.txt"
    m = FieldMatrix.from_dense(2, [[1, 0], [0, 1]])
    path.write_text(emit_matrix(m))
    assert load_matrix(str(path)) == m


def test_distribution_json_round_trip():
    obj = {"sizes": [2, 2], "probs": [0.4, 0.1, 0.2, 0.3]}
    d = distribution_from_obj(obj)
    assert d.shape == (2, 2)
    assert d[0, 1] == pytest.approx(0.1)
    back = distribution_to_obj(d)
    assert back["sizes"] == [2, 2]
    assert back["probs"] == pytest.approx(obj["probs"])


def test_distribution_json_errors():
    with pytest.raises(ParseError):
        distribution_from_obj({"sizes": [2]})
    with pytest.raises(ParseError):
        distribution_from_obj({"sizes": [2], "probs": [0.5]})
    with pytest.raises(ParseError):
        distribution_from_obj({"sizes": [2], "probs": [0.5, 0.6]})


def test_ensemble_descriptor():
    ens, filt, seed = ensemble_from_obj(
        {"family": "sparse", "q": 2, "l": 3, "n": 4, "tau": 2, "seed": 7}
    )
    assert ens.family == "sparse" and ens.tau == 2 and seed == 7
    assert filt.w_min == 1
    ens, filt, seed = ensemble_from_obj(
        {"family": "uniform", "q": 2, "l": 1, "n": 2, "w_min": 2}
    )
    assert filt.w_min == 2 and seed is None
    with pytest.raises(ParseError):
        ensemble_from_obj({"family": "sparse", "q": 2, "l": 1, "n": 2})
    with pytest.raises(ParseError):
        ensemble_from_obj({"family": "magic", "q": 2, "l": 1, "n": 2})
    with pytest.raises(ParseError):
        ensemble_from_obj({"q": 2, "l": 1, "n": 2})


def _problem_obj():
    channel = np.zeros((2, 2, 4))
    for x in range(4):
        channel[x >> 1, x & 1, x] = 1.0
    return {
        "y_sizes": [2, 2],
        "x_size": 4,
        "channel": channel.reshape(-1).tolist(),
        "mu_u": {"sizes": [2, 2], "probs": [0.25] * 4},
        "f": [0, 1, 2, 3],
    }


def test_bc_problem_from_obj():
    p = bc_problem_from_obj(_problem_obj())
    assert p.k == 2 and p.deterministic
    obj = _problem_obj()
    del obj["f"]
    with pytest.raises(ParseError):
        bc_problem_from_obj(obj)
    obj["f_stochastic"] = np.eye(4)[[0, 1, 2, 3]].reshape(-1).tolist()
    p2 = bc_problem_from_obj(obj)
    assert not p2.deterministic


def test_bc_code_round_trip(tmp_path):
    a = FieldMatrix.from_dense(2, [[1, 0]])
    ap = FieldMatrix.from_dense(2, [[1, 1]])
    (tmp_path / "a.txt").write_text(emit_matrix(a))
    (tmp_path / "ap.txt").write_text(emit_matrix(ap))
    obj = {"receivers": [
        {"A": "a.txt", "A_prime": "ap.txt", "syndrome": [0]},
        {"A": "a.txt", "A_prime": "ap.txt", "syndrome": [1]},
    ]}
    code_path = tmp_path / "code.json"
    code_path.write_text(json.dumps(obj))
    code = load_bc_code(str(code_path))
    assert code.k == 2 and code.syndromes == ((0,), (1,))
    with pytest.raises(ParseError):
        bc_code_from_obj({})
    with pytest.raises(ParseError):
        bc_code_from_obj({"receivers": [{"A": "a.txt"}]}, base_dir=str(tmp_path))


def test_parse_symbols():
    assert parse_symbols("0120") == (0, 1, 2, 0)
    assert parse_symbols("10,2,0") == (10, 2, 0)
    assert parse_symbols("") == ()
    with pytest.raises(ParseError):
        parse_symbols("a,b")
