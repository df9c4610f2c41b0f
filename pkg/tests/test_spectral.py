from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilgeom import catalog
from nilgeom.algebra import j_of
from nilgeom.spectral import (
    Nonsingularity,
    Resonance,
    classify,
    exp_skew,
    integer_relation,
    irrationality_witness,
    is_heisenberg_type,
    is_nonsingular,
    kernel_map,
    kernel_map_batch,
    rational_approximation,
    resonance_class,
    skew_eigenstructure,
    z_samples,
)


def random_skew(rng, n):
    A = rng.standard_normal((n, n))
    return A - A.T


def test_eigenstructure_reconstructs_matrix():
    rng = np.random.default_rng(0)
    J = random_skew(rng, 7)
    spec = skew_eigenstructure(J)
    assert spec.kernel_basis.shape[1] == 1
    rebuilt = np.zeros_like(J)
    for i, th in enumerate(spec.thetas):
        P = spec.projector(i)
        # on each plane J^2 = -theta^2
        assert np.allclose(J @ J @ P, -th**2 * P, atol=1e-10)
        rebuilt += J @ P
    assert np.allclose(rebuilt, J, atol=1e-10)


def test_eigenstructure_clusters_equal_frequencies():
    J = j_of(catalog.heisenberg(3), [2.0])
    spec = skew_eigenstructure(J)
    assert spec.thetas == pytest.approx([2.0])
    assert spec.plane_bases[0].shape[1] == 6


def test_inverse_on_kernel_complement():
    rng = np.random.default_rng(1)
    J = random_skew(rng, 5)
    spec = skew_eigenstructure(J)
    x = rng.standard_normal(5)
    x2 = x - spec.kernel_projector() @ x
    assert J @ spec.inv_apply(x2) == pytest.approx(x2, abs=1e-10)


def test_non_skew_input_rejected():
    with pytest.raises(ValueError):
        skew_eigenstructure(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-20, 20))
def test_exp_skew_is_orthogonal_and_a_flow(seed, t):
    rng = np.random.default_rng(seed)
    J = random_skew(rng, 6)
    Q = exp_skew(J, t)
    assert np.allclose(Q.T @ Q, np.eye(6), atol=1e-10)
    assert np.allclose(exp_skew(J, t) @ exp_skew(J, 0.7), exp_skew(J, t + 0.7), atol=1e-9)


def test_exp_skew_against_series():
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    Q = exp_skew(J, math.pi / 3)
    assert Q == pytest.approx(np.array([[0.5, -math.sqrt(3) / 2], [math.sqrt(3) / 2, 0.5]]))


def test_kernel_map_is_orthogonal_complement_of_image():
    alg = catalog.six_dim()
    km = kernel_map(alg, np.array([1.0, 0, 0, 0]))  # [X1, V] = span(Z1, Z2)
    assert km.basis.shape[1] == 0
    km = kernel_map(alg, np.array([0, 1.0, 0, 0]))  # [X2, V] = span(Z1)
    assert km.basis.shape[1] == 1 and abs(km.basis[1, 0]) == pytest.approx(1.0)
    P = kernel_map_batch(alg, np.array([[0, 1.0, 0, 0], [0, 0, 0, 0]]))
    assert P[0] == pytest.approx(np.diag([0.0, 1.0]))
    assert P[1] == pytest.approx(np.eye(2))


def test_heisenberg_type():
    assert is_heisenberg_type(catalog.heisenberg(2)).is_heisenberg
    assert not is_heisenberg_type(catalog.two_block(1, 2)).is_heisenberg
    assert not is_heisenberg_type(catalog.six_dim()).is_heisenberg


def test_nonsingular_verdicts():
    assert is_nonsingular(catalog.heisenberg(1)).verdict is Nonsingularity.TRUE_CERTIFIED
    bad = is_nonsingular(catalog.six_dim())
    assert bad.verdict is Nonsingularity.FALSE and bad.witness is not None
    assert is_nonsingular(catalog.two_block(1, 2)).verdict is Nonsingularity.TRUE_SAMPLED


def test_resonance_classes():
    z = np.array([1.0, 0.0])
    assert resonance_class(catalog.two_block(1, 2), z).kind is Resonance.RESONANT
    rc = resonance_class(catalog.two_block(1, 3), z)
    assert rc.kind is Resonance.STRONGLY_RESONANT
    assert rc.half_period == pytest.approx(math.pi)
    assert resonance_class(catalog.two_block(1, math.sqrt(2)), z).kind is Resonance.NON_RESONANT
    # heisenberg: one frequency, no kernel
    assert resonance_class(catalog.heisenberg(1), [2.0]).half_period == pytest.approx(math.pi / 2)
    # a kernel prevents e^{tJ} = -Id
    assert resonance_class(catalog.six_dim(), [0.0, 1.0]).kind is Resonance.RESONANT
    with pytest.raises(ValueError):
        resonance_class(catalog.heisenberg(1), [0.0])


def test_rational_approximation():
    assert rational_approximation(2 / 3) == pytest.approx(2 / 3)
    assert rational_approximation(math.sqrt(2)) is None


def test_integer_relation():
    rel = integer_relation([math.sqrt(2), 2 * math.sqrt(2) + 1], coeff_bound=5)
    assert not rel.independent
    assert rel.coefficients == (1, 2, -1)
    assert integer_relation([math.sqrt(2), math.sqrt(3)], coeff_bound=20).independent
    big = integer_relation([math.sqrt(2), math.sqrt(3), math.sqrt(5), math.pi], coeff_bound=40)
    assert big.method == "pslq" and big.independent
    assert irrationality_witness(catalog.two_block(1, 2), [1.0, 0.0], coeff_bound=5).kind == "RELATION"


def test_z_samples_are_unit_and_seeded():
    a, n = z_samples(3, seed=4)
    b, _ = z_samples(3, seed=4)
    assert n == 6 + 6
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0)
    assert np.array_equal(a, b)


def test_classify_reports():
    rep = classify(catalog.heisenberg(1)).to_dict()
    assert rep["heisenberg_type"] and rep["strongly_in_resonance"]
    assert rep["nonsingular"] == "TRUE_CERTIFIED"
    rep = classify(catalog.two_block(1, 2)).to_dict()
    assert rep["in_resonance"] and not rep["strongly_in_resonance"] and not rep["heisenberg_type"]
    assert rep["details"]["resonance"]["sampled"]
    rep = classify(catalog.two_block(1, math.sqrt(2)), seed=1)
    assert not rep.in_resonance
