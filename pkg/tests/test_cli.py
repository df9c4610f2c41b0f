from __future__ import annotations

import json
import re

import numpy as np
import pytest

from nilgeom import catalog
from nilgeom.cli import main
from nilgeom.io import InputError, algebra_to_dict, load_algebra, load_lattice, save_algebra


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


# --- io -----------------------------------------------------------------------

def test_algebra_file_round_trip(tmp_path):
    alg = catalog.two_block(1, "3/2")
    save_algebra(alg, tmp_path / "a.json")
    back = load_algebra(str(tmp_path / "a.json"))
    assert np.array_equal(back.J, alg.J)
    assert back.rational_maps == alg.rational_maps
    assert '"3/2"' in json.dumps(algebra_to_dict(back))


def test_structure_constant_file(tmp_path):
    path = write_json(tmp_path / "h.json", {"dim_v": 2, "dim_z": 1,
                                            "structure_constants": [{"i": 0, "j": 1, "k": 0, "c": 1}]})
    assert np.array_equal(load_algebra(path).J, catalog.heisenberg(1).J)


@pytest.mark.parametrize("payload", [
    {"dim_v": 2},
    {"dim_v": 2, "dim_z": 1, "j_maps": [[[0, 1]]]},
    {"dim_v": 2, "dim_z": 1},
    [1, 2, 3],
])
def test_malformed_algebra_files(tmp_path, payload):
    with pytest.raises(InputError):
        load_algebra(write_json(tmp_path / "bad.json", payload))


def test_lattice_file(tmp_path):
    alg = catalog.heisenberg(1)
    path = write_json(tmp_path / "l.json", {"generators": [{"v": [1, 0], "z": [0]}, {"v": [0, 1], "z": ["1/2"]},
                                                           {"v": [0, 0], "z": [1]}]})
    L = load_lattice(path, alg)
    assert L.generators[1].z == pytest.approx([0.5])
    assert len(load_lattice("standard", alg)) == 3
    with pytest.raises(InputError):
        load_lattice(write_json(tmp_path / "m.json", {"generators": [{"v": [1, 0, 0]}]}), alg)


# --- classify -----------------------------------------------------------------

def test_classify_heisenberg(capsys):
    code, out, _ = run(capsys, "classify", "--algebra", "heisenberg:1")
    rep = json.loads(out)
    assert code == 0
    assert rep["heisenberg_type"] and rep["nonsingular"] == "TRUE_CERTIFIED" and rep["strongly_in_resonance"]


def test_classify_two_block_file(capsys, tmp_path):
    save_algebra(catalog.two_block(1, 2), tmp_path / "a.json")
    out = tmp_path / "r.json"
    assert main(["classify", "--algebra", str(tmp_path / "a.json"), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["in_resonance"] and not rep["strongly_in_resonance"]
    assert rep["seed"] == 0x5EED


def test_classify_malformed_and_missing(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "classify", "--algebra", str(bad))
    assert code == 2 and "malformed" in err
    code, _, err = run(capsys, "classify", "--algebra", str(tmp_path / "nope.json"))
    assert code == 2 and "not found" in err


# --- geodesic -----------------------------------------------------------------

def test_geodesic_batch_with_oracle(capsys, tmp_path):
    req = tmp_path / "req.jsonl"
    rows = [
        {"algebra_ref": "heisenberg:2", "u": [0.6, 0, 0, 0, 0.8], "t_list": [0, 1, 10]},
        {"algebra_ref": "heisenberg:2", "u": [0.6, 0, 0.8, 0, 0], "t_list": [2]},
        {"algebra_ref": "heisenberg:1", "u": [0, 1, 0], "t_list": []},
    ]
    req.write_text("\n".join(json.dumps(r) for r in rows))
    code, out, err = run(capsys, "geodesic", "--requests", str(req), "--oracle")
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    assert [r["row"] for r in lines] == [0, 1]
    dev = float(re.search(r"max_oracle_deviation=(\S+)", err).group(1))
    assert dev <= 1e-8
    assert lines[0]["diagnostics"]["oracle_max_deviation"] <= 1e-8
    # z = 0 row is a straight line
    assert lines[1]["points"][0] == pytest.approx([1.2, 0, 1.6, 0, 0])
    assert lines[1]["diagnostics"]["branch"] == "one-parameter-subgroup"
    assert np.linalg.norm(lines[0]["velocities"][2]) == pytest.approx(1.0)


def test_geodesic_empty_t_list(capsys, tmp_path):
    req = tmp_path / "req.jsonl"
    req.write_text(json.dumps({"u": [0, 1, 0], "t_list": []}))
    code, out, _ = run(capsys, "geodesic", "--algebra", "heisenberg:1", "--requests", str(req))
    assert code == 0 and out == ""


def test_geodesic_non_unit_row(capsys, tmp_path):
    req = tmp_path / "req.jsonl"
    req.write_text(json.dumps({"u": [0, 1, 0], "t_list": [1]}) + "\n" + json.dumps({"u": [1, 1, 0], "t_list": [1]}))
    code, _, err = run(capsys, "geodesic", "--algebra", "heisenberg:1", "--requests", str(req))
    assert code == 3 and "row 1" in err


def test_geodesic_malformed_row(capsys, tmp_path):
    req = tmp_path / "req.jsonl"
    req.write_text('{"u": [0, 1, 0], "t_list": [1]}\n{oops')
    code, _, err = run(capsys, "geodesic", "--algebra", "heisenberg:1", "--requests", str(req))
    assert code == 2 and "row 1" in err


def test_geodesic_with_base(capsys, tmp_path):
    req = tmp_path / "req.jsonl"
    req.write_text(json.dumps({"u": {"v": [1, 0], "z": [0]}, "base": {"x": [0, 1], "z": [0]}, "t_list": [1]}))
    code, out, _ = run(capsys, "geodesic", "--algebra", "heisenberg:1", "--requests", str(req))
    # exp(e2) exp(e1) = exp(e1 + e2 - z/2)
    assert code == 0 and json.loads(out)["points"][0] == pytest.approx([1, 1, -0.5])


# --- derivations --------------------------------------------------------------

@pytest.mark.parametrize("ref, line", [
    ("example-2.14", "inner=4 aid=6"),
    ("abelian:3", "inner=0 aid=0"),
    ("heisenberg:2", "inner=4 aid=4"),
])
def test_derivations_dimensions(capsys, ref, line):
    code, out, _ = run(capsys, "derivations", "--algebra", ref, "--exact")
    assert code == 0 and out.strip() == line


def test_derivations_gamma_and_bases(capsys, tmp_path):
    out = tmp_path / "d.json"
    code, text, _ = run(capsys, "derivations", "--algebra", "example-2.14", "--lattice", "standard",
                        "--out", str(out))
    assert code == 0 and text.strip() == "inner=4 aid=6 gamma_aid=6"
    rep = json.loads(out.read_text())
    assert rep["gamma_almost_inner"]["dimension"] == 6
    assert len(rep["almost_inner"]["basis"]) == 6


def test_derivations_gamma_needs_lattice(capsys):
    code, _, err = run(capsys, "derivations", "--algebra", "example-2.14", "--gamma")
    assert code == 4 and "lattice" in err


# --- deform -------------------------------------------------------------------

def test_deform_nontrivial_family(capsys, tmp_path):
    out = tmp_path / "f.json"
    code, _, err = run(capsys, "deform", "--algebra", "example-2.14", "--lattice", "standard",
                       "--derivation-index", "4", "--t", "1/4,1/2", "--out", str(out))
    rep = json.loads(out.read_text())
    assert code == 0 and rep["label"] == "NONTRIVIAL" and err.startswith("NONTRIVIAL")
    assert [m["comparison"] for m in rep["members"]] == ["EQUAL", "EQUAL"]


def test_deform_inner_phi_file(capsys, tmp_path):
    phi = write_json(tmp_path / "phi.json", {"matrix": [[1, 0, 0, 0], [0, 0, 0, 0]]})  # X1 -> Z1
    code, out, _ = run(capsys, "deform", "--algebra", "example-2.14", "--lattice", "standard", "--phi", phi)
    assert code == 0 and json.loads(out)["label"] == "TRIVIAL"


def test_deform_non_aid_shear(capsys, tmp_path):
    phi = write_json(tmp_path / "shear.json", {"matrix": [[0, 0, 0, 0], [0, 1, 0, 0]]})  # X2 -> Z2
    code, _, err = run(capsys, "deform", "--algebra", "example-2.14", "--lattice", "standard", "--phi", phi)
    assert code == 5 and "not almost inner" in err


def test_deform_errors(capsys, tmp_path):
    assert run(capsys, "deform", "--algebra", "example-2.14", "--derivation-index", "4")[0] == 4
    assert run(capsys, "deform", "--algebra", "example-2.14", "--lattice", "standard",
               "--derivation-index", "9")[0] == 3
    assert run(capsys, "deform", "--algebra", "example-2.14", "--lattice", "standard")[0] == 2
    phi = write_json(tmp_path / "phi.json", {"matrix": [[1, 0], [0, 0]]})
    assert run(capsys, "deform", "--algebra", "example-2.14", "--lattice", "standard", "--phi", phi)[0] == 2


# --- enumerate / spectrum / validate --------------------------------------------

def test_enumerate_and_spectrum(capsys):
    code, out, _ = run(capsys, "enumerate", "--algebra", "heisenberg:1", "--lattice", "standard", "--radius", "1")
    assert code == 0 and len(out.splitlines()) == 27
    code, out, _ = run(capsys, "spectrum", "--algebra", "example-2.14", "--lattice", "standard", "--radius", "1")
    assert code == 0 and out.splitlines()[0] == "word,lower,omega_star" and len(out.splitlines()) == 729


def test_validate_command(capsys, tmp_path):
    assert run(capsys, "validate", "--algebra", "example-2.14")[0] == 0
    bad = write_json(tmp_path / "a.json", {"dim_v": 2, "dim_z": 1, "j_maps": [[[0, 1], [1, 0]]]})
    assert run(capsys, "validate", "--algebra", bad)[0] == 3


def test_bad_seed_and_tolerance_are_parse_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["classify", "--algebra", "heisenberg:1", "--tol", "-1"])
    assert e.value.code == 2
