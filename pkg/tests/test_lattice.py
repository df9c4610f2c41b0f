from __future__ import annotations

import io
import math

import numpy as np
import pytest

from nilgeom import catalog
from nilgeom.algebra import AlgebraElement, multiply_coords
from nilgeom.lattice import (
    LatticeBasis,
    approximate_direction,
    central_indices,
    certify,
    enumerate_arrays,
    enumerate_group_elements,
    standard_lattice,
    validate_lattice,
    word_logs,
    write_enumeration_csv,
)


def keyset(logs):
    return {tuple(np.round(r, 8) + 0.0) for r in logs}


def test_standard_lattice_is_valid():
    for alg in (catalog.heisenberg(2), catalog.six_dim(), catalog.two_block(1, 2)):
        L = standard_lattice(alg)
        rep = validate_lattice(alg, L)
        assert rep.ok, rep.issues
        assert central_indices(alg, L) == list(range(alg.dim_v, alg.dim))
    assert certify(catalog.six_dim(), standard_lattice(catalog.six_dim())).rational


def test_irrational_bracket_is_rejected():
    alg = catalog.heisenberg(1)
    L = LatticeBasis.from_vectors([[math.sqrt(2), 0, 0], [0, 1, 0], [0, 0, 1]], 2)
    rep = validate_lattice(alg, L)
    assert not rep.ok and "non-rational" in rep.issues[0]


def test_rank_deficient_lattice_is_rejected():
    alg = catalog.heisenberg(1)
    rep = validate_lattice(alg, LatticeBasis.from_vectors([[1, 0, 0], [0, 0, 1]], 2))
    assert not rep.ok and "V-projections" in rep.issues[0]
    rep = validate_lattice(alg, LatticeBasis.from_vectors([[1, 0, 0], [0, 1, 0]], 2))
    assert not rep.ok and "central" in rep.issues[-1]


def test_bracket_coordinates_reported():
    alg = catalog.heisenberg(1)
    L = LatticeBasis.from_vectors([[1, 0, 0], [0, 1, 0], [0, 0, 0.5]], 2)
    rep = validate_lattice(alg, L)
    assert rep.ok and rep.bracket_coordinates[(0, 1)] == [2]
    assert rep.to_dict()["bracket_coordinates"] == {"0,1": ["2"]}


def test_radius_one_count():
    alg = catalog.heisenberg(1)
    els = enumerate_group_elements(alg, standard_lattice(alg), 1)
    assert len(els) == 26
    assert all(np.linalg.norm(e.log.as_vector()) > 0 for e in els)


def test_word_logs_use_bch():
    alg = catalog.heisenberg(1)
    # exp(e1) exp(e2) = exp(e1 + e2 + z/2)
    assert word_logs(alg, standard_lattice(alg), [[1, 1, 0]])[0] == pytest.approx([1, 1, 0.5])


def test_symmetric_enumeration_is_closed_under_inverse():
    alg = catalog.six_dim()
    logs, _, inv = enumerate_arrays(alg, standard_lattice(alg), 1, symmetric=True)
    keys = keyset(logs)
    assert all(tuple(np.round(-r, 8) + 0.0) in keys for r in logs)
    assert inv.any()


def test_products_of_small_words_lie_in_a_larger_ball():
    alg = catalog.heisenberg(1)
    L = standard_lattice(alg)
    small, _, _ = enumerate_arrays(alg, L, 1)
    big = keyset(enumerate_arrays(alg, L, 3)[0])
    rng = np.random.default_rng(0)
    idx = rng.integers(0, len(small), size=(60, 2))
    prods = multiply_coords(alg, small[idx[:, 0]], small[idx[:, 1]])
    assert all(tuple(np.round(p, 8) + 0.0) in big for p in prods if np.linalg.norm(p) > 1e-12)


def test_enumeration_csv():
    alg = catalog.heisenberg(1)
    els = enumerate_group_elements(alg, standard_lattice(alg), 1, symmetric=True)
    buf = io.StringIO()
    write_enumeration_csv(els, buf, alg.dim_v)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "word,v0,v1,z0"
    assert len(lines) == 1 + len(els)
    assert any(line.startswith("inv(") for line in lines[1:])


def test_approximate_direction():
    alg = catalog.heisenberg(1)
    res = approximate_direction(alg, standard_lattice(alg), [1.0, 0.0], eps=1e-6)
    assert res.found and res.k == 1 and res.central_norm < 1e-12
    # generator with a fractional central part needs k = 3
    L = LatticeBasis.from_vectors([[1, 0, 1 / 3], [0, 1, 0], [0, 0, 1]], 2)
    res = approximate_direction(alg, L, [1.0, 0.0], eps=1e-6)
    assert res.found and res.k == 3
    assert res.xi.v == pytest.approx([3.0, 0.0])
    assert not approximate_direction(alg, L, [1.0, 0.0], eps=1e-6, k_max=2).found
    with pytest.raises(ValueError):
        approximate_direction(alg, L, [0.5, 0.0], eps=0.1)


def test_lattice_basis_helpers():
    L = LatticeBasis((AlgebraElement(np.array([1.0]), np.array([0.0])),))
    assert len(L) == 1 and L.as_array().shape == (1, 2)
    assert LatticeBasis(()).as_array().shape == (0, 0)
