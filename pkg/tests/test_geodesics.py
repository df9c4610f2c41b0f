from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilgeom import catalog
from nilgeom.algebra import AlgebraElement, GroupPointExp, MetricTwoStepAlgebra, PreconditionError
from nilgeom.geodesics import (
    ClosedFormGeodesic,
    GeodesicInitial,
    closed_geodesic_witness,
    default_steps,
    geodesic_closed_form,
    geodesic_ode_oracle,
    heisenberg_geodesic,
    integrate_geodesics,
    translation_data,
    velocity_frame,
)

U_FIXTURE = np.array([0.5, 0.1, -0.3, 0.2, 0.6, 0.4]) / np.linalg.norm([0.5, 0.1, -0.3, 0.2, 0.6, 0.4])


def fixture_algebra():
    # two frequencies on V = R^4, two central directions
    return MetricTwoStepAlgebra.from_structure_constants(
        4, 2, [(0, 1, 0, 1), (2, 3, 0, 2), (0, 2, 1, 1), (1, 3, 1, -1)], label="fixture")


def init_from(alg, u, base=None):
    base = GroupPointExp.identity(alg) if base is None else base
    return GeodesicInitial(base, AlgebraElement.from_vector(u, alg.dim_v))


# frozen from RK4 with 2e5 steps
@pytest.mark.parametrize("alg_factory, t, expected", [
    (fixture_algebra, 2.5, [0.78045707535854, 0.9937445726639, 0.12254385702438,
                            -0.34438881846238, 1.95953807519682, 1.26526315862343]),
    (catalog.six_dim, 4.0, [0.75164301046796, -1.31643888149148, 0.47074831063775,
                            1.00036918939918, 3.45542485524586, 1.9333155974763]),
])
def test_frozen_points(alg_factory, t, expected):
    alg = alg_factory()
    init = init_from(alg, U_FIXTURE)
    for variant in ("stable", "corrected"):
        p = geodesic_closed_form(alg, init, t, variant)
        assert p.as_vector() == pytest.approx(expected, abs=1e-11)


def test_heisenberg_three_dim_by_hand():
    # x = (a, 0), z = c:  X = a/c (sin ct, 1 - cos ct),  Z = ct + a^2/(2c) (t - sin(ct)/c)
    alg = catalog.heisenberg(1)
    a, c = 0.6, 0.8
    init = init_from(alg, [a, 0.0, c])
    for t in (0.3, 1.0, 7.5):
        X = a / c * np.array([math.sin(c * t), 1 - math.cos(c * t)])
        Z = c * t + a * a / (2 * c) * (t - math.sin(c * t) / c)
        expected = np.concatenate([X, [Z]])
        assert geodesic_closed_form(alg, init, t).as_vector() == pytest.approx(expected, abs=1e-13)
        assert heisenberg_geodesic(alg, init, t).as_vector() == pytest.approx(expected, abs=1e-13)


def test_heisenberg_formula_preconditions():
    with pytest.raises(PreconditionError):
        heisenberg_geodesic(catalog.six_dim(), init_from(catalog.six_dim(), U_FIXTURE), 1.0)
    alg = catalog.heisenberg(1)
    with pytest.raises(ValueError):
        heisenberg_geodesic(alg, init_from(alg, [1.0, 0.0, 0.0]), 1.0)


def test_non_unit_velocity_rejected():
    alg = catalog.heisenberg(1)
    with pytest.raises(ValueError, match="unit"):
        init_from(alg, [1.0, 1.0, 0.0])


def test_zero_central_part_gives_straight_line():
    alg = catalog.heisenberg(2)
    u = np.array([0.6, 0.0, 0.8, 0.0, 0.0])
    geo = ClosedFormGeodesic(alg, init_from(alg, u))
    assert geo.branch == "one-parameter-subgroup"
    assert geo(3.0).as_vector() == pytest.approx(3.0 * u)


def test_pure_central_velocity():
    alg = catalog.six_dim()
    u = np.array([0, 0, 0, 0, 0.6, 0.8])
    assert geodesic_closed_form(alg, init_from(alg, u), 2.0).as_vector() == pytest.approx(2.0 * u)


def test_printed_variant_is_not_a_geodesic():
    alg = fixture_algebra()
    init = init_from(alg, U_FIXTURE)
    printed = ClosedFormGeodesic(alg, init, variant="printed")
    oracle = geodesic_ode_oracle(alg, init, 2.0)
    assert np.linalg.norm(printed(2.0).as_vector() - oracle.as_vector()) > 1e-3
    with pytest.raises(ValueError):
        ClosedFormGeodesic(alg, init, variant="nope")


def test_tiny_frequency_stays_accurate():
    # a frequency 1e-3 next to O(1) frequencies: the frequency-sum grouping loses
    # digits here, the default evaluation does not
    eps = 1e-3
    alg = MetricTwoStepAlgebra(4, 1, (np.array([[0, -eps, 0, 0], [eps, 0, 0, 0],
                                                [0, 0, 0, -2.0], [0, 0, 2.0, 0]]),))
    u = np.array([0.4, 0.3, 0.5, 0.1, 0.7])
    u /= np.linalg.norm(u)
    init = init_from(alg, u)
    ref = integrate_geodesics(alg, u[None], 10.0, 40_000)[-1, 0]
    assert np.linalg.norm(geodesic_closed_form(alg, init, 10.0).as_vector() - ref) < 1e-10


def test_left_translation():
    alg = catalog.six_dim()
    base = GroupPointExp(np.array([1.0, -2.0, 0.5, 0.0]), np.array([0.3, 0.0]))
    init = init_from(alg, U_FIXTURE, base)
    assert geodesic_closed_form(alg, init, 1.3).as_vector() == pytest.approx(
        geodesic_ode_oracle(alg, init, 1.3).as_vector(), abs=1e-10)
    assert geodesic_closed_form(alg, init, 0.0).as_vector() == pytest.approx(base.as_vector())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.0, 6.0))
def test_closed_form_matches_oracle_on_random_algebras(seed, t):
    rng = np.random.default_rng(seed)
    alg = catalog.random_rational_algebra(rng, int(rng.integers(2, 7)), int(rng.integers(1, 4)))
    u = rng.standard_normal(alg.dim)
    init = init_from(alg, u / np.linalg.norm(u))
    a = geodesic_closed_form(alg, init, t).as_vector()
    b = geodesic_ode_oracle(alg, init, t, steps=max(10, int(2000 * t))).as_vector()
    assert np.linalg.norm(a - b) < 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5.0, 5.0))
def test_velocity_is_unit_and_matches_derivative(seed, t):
    rng = np.random.default_rng(seed)
    alg = catalog.random_rational_algebra(rng, 5, 2)
    u = rng.standard_normal(alg.dim)
    init = init_from(alg, u / np.linalg.norm(u))
    v = velocity_frame(alg, init, t)
    assert v.norm() == pytest.approx(1.0, abs=1e-10)
    # sigma(t)^{-1} sigma(t + h) ~ exp(h v)
    geo = ClosedFormGeodesic(alg, init)
    h = 1e-5
    from nilgeom.algebra import group_multiply

    step = group_multiply(alg, geo(t).inverse(), geo(t + h)).as_vector() / h
    assert step == pytest.approx(v.as_vector(), abs=1e-4)


def test_rk4_order_and_recording():
    alg = fixture_algebra()
    us = U_FIXTURE[None, :]
    ref = geodesic_closed_form(alg, init_from(alg, U_FIXTURE), 3.0).as_vector()
    e1 = np.linalg.norm(integrate_geodesics(alg, us, 3.0, 60)[-1, 0] - ref)
    e2 = np.linalg.norm(integrate_geodesics(alg, us, 3.0, 120)[-1, 0] - ref)
    assert 12 < e1 / e2 < 20
    rec = integrate_geodesics(alg, us, 3.0, 300, record=[0, 100, 300])
    assert rec.shape == (3, 1, 6) and np.allclose(rec[0], 0)
    assert default_steps(10.0) == 10_000
    with pytest.raises(ValueError):
        integrate_geodesics(alg, us, 1.0, 0)


def test_translation_data_and_witness():
    alg = catalog.six_dim()
    w = AlgebraElement(np.array([0.0, 1.0, 0.0, 0.0]), np.array([2.0, 3.0]))
    td = translation_data(alg, w)
    # [X2, V] = span(Z1) so only the Z2 part survives
    assert td.z_star_star == pytest.approx([0.0, 3.0])
    assert td.omega_star == pytest.approx(math.sqrt(10.0))
    assert td.lower == pytest.approx(1.0)
    wit = closed_geodesic_witness(alg, w)
    assert wit.residual < 1e-10
    with pytest.raises(ValueError):
        closed_geodesic_witness(alg, AlgebraElement(np.zeros(4), np.zeros(2)))


def test_central_element_witness():
    alg = catalog.heisenberg(1)
    wit = closed_geodesic_witness(alg, AlgebraElement(np.zeros(2), np.array([1.0])))
    assert wit.translation.omega_star == pytest.approx(1.0)
    assert wit.translation.lower == 0.0 and wit.residual < 1e-12
