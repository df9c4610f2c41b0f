"""Geodesics of left-invariant metrics on 2-step nilpotent groups.

A unit-speed geodesic through the identity with initial velocity ``x + z``
has left-invariant-frame velocity ``e^{tJ(z)} x + z``.  Writing
``sigma(t) = exp(X(t) + Z(t))`` the BCH rule turns this into

    X' = e^{tJ} x,        Z' = z + [X, e^{tJ} x] / 2,

which integrates in closed form (:class:`ClosedFormGeodesic`) and is also
integrated numerically by :func:`geodesic_ode_oracle` as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlgebraElement,
    GroupPointExp,
    MetricTwoStepAlgebra,
    PreconditionError,
    _check_v,
    _check_z,
    bracket_v,
    group_multiply,
    image_matrix,
    j_of,
)
from .spectral import SkewSpectrum, is_heisenberg_type, kernel_map, skew_eigenstructure

UNIT_TOL = 1e-10
DEGENERATE_TOL = 1e-12
STEPS_PER_UNIT = 1000


@dataclass(frozen=True, eq=False)
class GeodesicInitial:
    """Start point ``base`` and unit initial velocity ``u`` (left-invariant frame)."""

    base: GroupPointExp
    u: AlgebraElement

    def __post_init__(self):
        n = self.u.norm()
        if abs(n - 1.0) > UNIT_TOL:
            raise ValueError(f"initial velocity must be a unit vector, |u| = {n!r}")

    @classmethod
    def at_identity(cls, alg: MetricTwoStepAlgebra, u: AlgebraElement) -> "GeodesicInitial":
        return cls(GroupPointExp.identity(alg), u)

    @classmethod
    def normalized(cls, alg: MetricTwoStepAlgebra, w, base: GroupPointExp | None = None) -> "GeodesicInitial":
        w = np.asarray(w, dtype=float)
        w = w / np.linalg.norm(w)
        base = GroupPointExp.identity(alg) if base is None else base
        return cls(base, AlgebraElement.from_vector(w, alg.dim_v))


def _expi_dd1(a):
    """``(e^{ia} - 1) / (ia)``, accurate for small ``a`` (real input)."""
    a = np.asarray(a, dtype=float)
    half = np.sin(a / 2)
    return np.sinc(a / np.pi) + 1j * half * np.sinc(a / (2 * np.pi))


def _exp_dd2(p, q):
    """Divided difference of ``exp`` at the imaginary nodes ``ip, iq``."""
    return np.exp(1j * p) * _expi_dd1(q - p)


def _exp_dd3(p0, p1, p2, terms: int = 20):
    """Divided difference of ``exp`` at the imaginary nodes ``ip0, ip1, ip2``.

    Clustered nodes (spread <= 1) use the series ``sum_m h_m(y)/(m+2)!`` in
    the offsets ``y`` from the centre, ``h_m`` being complete homogeneous
    symmetric polynomials; spread-out nodes use the recursion, dividing by
    the widest gap so no cancellation is amplified.
    """
    P = np.stack(np.broadcast_arrays(*(np.asarray(p, dtype=float) for p in (p0, p1, p2))))
    lo, mid, hi = np.sort(P, axis=0)
    spread = hi - lo
    centre = (hi + lo) / 2
    y = 1j * (P - centre)
    h1 = np.ones_like(y[0])
    h2 = np.ones_like(y[0])
    h3 = np.ones_like(y[0])
    series = np.zeros_like(y[0])
    fact = 2.0
    for m in range(terms):
        if m:
            h1 = h1 * y[0]
            h2 = h2 * y[1] + h1
            h3 = h3 * y[2] + h2
            fact *= m + 2
        series = series + h3 / fact
    series = np.exp(1j * centre) * series
    gap = np.where(spread > 1.0, spread, 1.0)
    recursive = (_exp_dd2(mid, hi) - _exp_dd2(lo, mid)) / (1j * gap)
    return np.where(spread > 1.0, recursive, series)


class ClosedFormGeodesic:
    """Closed-form evaluation of one geodesic, with the spectral data precomputed.

    Split ``x = x1 + sum_i xi_i`` with ``x1`` in ``ker J`` and ``xi_i`` in the
    invariant plane where ``J`` rotates at rate ``theta_i``.  Then
    ``e^{sJ} x = sum_k e^{lambda_k s} u_k`` with ``lambda = 0`` for ``x1`` and
    ``lambda = +-i theta_i``, ``u = (xi_i -+ i J xi_i / theta_i) / 2``, so

        X(t) = sum_k u_k int_0^t e^{lambda_k s} ds
        Z(t) = t z + 1/2 sum_{k,l} [u_k, u_l] int_0^t int_0^s e^{lambda_k r + lambda_l s} dr ds

    and both scalar integrals are divided differences of ``e^{tx}``
    (at ``0, lambda_k`` and at ``0, lambda_l, lambda_k + lambda_l``).  This
    ``variant="stable"`` evaluation stays accurate for tiny or nearly equal
    frequencies.

    ``variant="corrected"`` evaluates the same solution regrouped over the
    frequencies, with ``J^{-1}`` taken plane-wise on ``ker(J)^perp``:

        X(t) = t x1 + (e^{tJ} - Id) J^{-1} x2
        Z(t) = t z1(t) + z2(t)
        z1(t) = z + [x1, (e^{tJ} + Id) J^{-1} x2]/2 + sum_i [J^{-1} xi_i, xi_i]/2
        z2(t) = [x1, (Id - e^{tJ}) J^{-2} x2] + [e^{tJ} J^{-1} x2, J^{-1} x2]/2
                - 1/2 sum_{i != j} ([e^{tJ} J xi_i, e^{tJ} J^{-1} xi_j]
                                   - [e^{tJ} xi_i, e^{tJ} xi_j]) / (theta_j^2 - theta_i^2)
                + 1/2 sum_{i != j} ([J xi_i, J^{-1} xi_j] - [xi_i, xi_j]) / (theta_j^2 - theta_i^2)

    It loses accuracy like ``eps / theta^3`` when some frequency is small.
    ``variant="printed"`` swaps in ``-[e^{tJ} J^{-1} x2, J^{-1} x2]/2`` and
    ``[e^{tJ} J xi_i, e^{tJ} xi_j]`` (time-dependent double sum).  That form
    does not solve the geodesic ODE and is not even zero at ``t = 0``; it is
    evaluated only to report how far it is from the true geodesic.

    When ``J(z) x = 0`` the geodesic is the one-parameter subgroup
    ``exp(t(x + z))`` and that branch is used directly.
    """

    VARIANTS = ("stable", "corrected", "printed")

    def __init__(self, alg: MetricTwoStepAlgebra, init: GeodesicInitial,
                 variant: str = "stable", degenerate_tol: float = DEGENERATE_TOL):
        if variant not in self.VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        self.alg = alg
        self.init = init
        self.variant = variant
        x = _check_v(alg, init.u.v)
        z = _check_z(alg, init.u.z)
        self.x, self.z = x, z
        self.Jz = j_of(alg, z)
        self.degenerate = bool(np.linalg.norm(self.Jz @ x) <= degenerate_tol)
        self.branch = "one-parameter-subgroup" if self.degenerate else "spectral"
        if self.degenerate:
            return
        spec = skew_eigenstructure(self.Jz)
        self.spec: SkewSpectrum = spec
        self.x1, self.xi = spec.split(x)
        # drop plane components that vanish: they contribute nothing
        keep = [i for i, c in enumerate(self.xi) if np.linalg.norm(c) > 0.0]
        self.thetas = spec.thetas[keep]
        self.xi = [self.xi[i] for i in keep]
        if variant == "stable":
            self._setup_stable()
        else:
            self._setup_plane_sums()

    def _setup_stable(self) -> None:
        rates, vecs = [0.0], [self.x1.astype(complex)]
        for th, c in zip(self.thetas, self.xi):
            w = (c - 1j * (self.Jz @ c) / th) / 2
            rates += [th, -th]
            vecs += [w, w.conj()]
        self.rates = np.array(rates)
        self.modes = np.array(vecs)  # (K, dim_v)
        J = self.alg.J
        # pair_brackets[k, l] = [u_k, u_l]
        self.pair_brackets = np.einsum("kij,aj,bi->abk", J, self.modes, self.modes)

    def _setup_plane_sums(self) -> None:
        alg, z, spec = self.alg, self.z, self.spec
        self.x2 = np.sum(self.xi, axis=0) if self.xi else np.zeros_like(self.x)
        inv = spec.inv_apply
        self.a = inv(self.x2)          # J^{-1} x2
        self.a2 = inv(self.a)          # J^{-2} x2
        br = lambda p, q: bracket_v(alg, p, q)  # noqa: E731
        self._br = br
        self.z1_const = z + 0.5 * sum((br(inv(c), c) for c in self.xi), np.zeros(alg.dim_z))
        self.pairs = []
        const = np.zeros(alg.dim_z)
        for i, ci in enumerate(self.xi):
            for j, cj in enumerate(self.xi):
                if i == j:
                    continue
                d = 1.0 / (self.thetas[j] ** 2 - self.thetas[i] ** 2)
                Jci, inv_cj = self.Jz @ ci, inv(cj)
                self.pairs.append((d, ci, cj, Jci, inv_cj))
                const += 0.5 * d * (br(Jci, inv_cj) - br(ci, cj))
        self.z2_const = const

    def _exp(self, t: float, v: np.ndarray) -> np.ndarray:
        return self.spec.exp_apply(t, v)

    def __call__(self, t: float) -> GroupPointExp:
        return group_multiply(self.alg, self.init.base, self.at_identity(t))

    def at_identity(self, t: float) -> GroupPointExp:
        """Point of the geodesic started at the identity (no left translation)."""
        t = float(t)
        if self.degenerate:
            return GroupPointExp(t * self.x, t * self.z)
        if self.variant == "stable":
            return self._stable_at(t)
        br, E = self._br, self._exp
        x1, a, a2 = self.x1, self.a, self.a2
        Ea = E(t, a)
        X = t * x1 + Ea - a
        z1 = self.z1_const + 0.5 * br(x1, Ea + a)
        sign = 0.5 if self.variant == "corrected" else -0.5
        z2 = br(x1, a2 - E(t, a2)) + sign * br(Ea, a) + self.z2_const
        for d, ci, cj, Jci, inv_cj in self.pairs:
            second = E(t, ci) if self.variant == "corrected" else E(t, Jci)
            z2 = z2 - 0.5 * d * (br(E(t, Jci), E(t, inv_cj)) - br(second, E(t, cj)))
        return GroupPointExp(X, t * z1 + z2)

    def _stable_at(self, t: float) -> GroupPointExp:
        r = self.rates
        X = (t * _expi_dd1(t * r)) @ self.modes
        phi = t * t * _exp_dd3(0.0, t * r[None, :], t * (r[:, None] + r[None, :]))
        Z = t * self.z + 0.5 * np.einsum("ab,abk->k", phi, self.pair_brackets)
        return GroupPointExp(X.real, Z.real)

    def velocity(self, t: float) -> AlgebraElement:
        """Left-invariant-frame velocity ``e^{tJ} x + z``."""
        if self.degenerate:
            return AlgebraElement(self.x, self.z)
        return AlgebraElement(self.spec.exp_apply(float(t), self.x), self.z)


def geodesic_closed_form(alg: MetricTwoStepAlgebra, init: GeodesicInitial, t: float,
                         variant: str = "stable") -> GroupPointExp:
    return ClosedFormGeodesic(alg, init, variant)(t)


def heisenberg_geodesic(alg: MetricTwoStepAlgebra, init: GeodesicInitial, t: float,
                        tol: float = 1e-10) -> GroupPointExp:
    """Heisenberg-type specialization, where ``J(z)^2 = -|z|^2 Id``:

    X(t) = (cos(t|z|) - 1) J^{-1} x + sin(t|z|)/|z| x
    Z(t) = t (1 + |x|^2 / (2|z|^2)) z - sin(t|z|) |x|^2 / (2|z|^3) z
    """
    if not is_heisenberg_type(alg, tol).is_heisenberg:
        raise PreconditionError(f"{alg.label!r} is not of Heisenberg type")
    x, z = init.u.v, init.u.z
    r = float(np.linalg.norm(z))
    if r == 0.0:
        raise ValueError("the Heisenberg-type formula needs a nonzero central component")
    t = float(t)
    Jinv_x = -(j_of(alg, z) @ x) / r**2
    X = (math.cos(t * r) - 1.0) * Jinv_x + math.sin(t * r) / r * x
    xx = float(x @ x)
    Z = t * (1.0 + xx / (2 * r**2)) * z - math.sin(t * r) * xx / (2 * r**3) * z
    return group_multiply(alg, init.base, GroupPointExp(X, Z))


def velocity_frame(alg: MetricTwoStepAlgebra, init: GeodesicInitial, t: float) -> AlgebraElement:
    """``e^{tJ(z)} x + z``; the velocity pulled back to the Lie algebra."""
    return ClosedFormGeodesic(alg, init).velocity(t)


# --------------------------------------------------------------------------
# numerical oracle

def _rk4_rhs(alg, Jz, z, state):
    n, m = alg.dim_v, alg.dim_z
    X, Zc, U = state[..., :n], state[..., n:n + m], state[..., n + m:]
    dU = np.einsum("bij,bj->bi", Jz, U)
    dZ = z + 0.5 * bracket_v(alg, X, U)
    return np.concatenate([U, dZ, dU], axis=-1)


def integrate_geodesics(alg: MetricTwoStepAlgebra, us: np.ndarray, t_final: float, steps: int,
                        record: list[int] | None = None) -> np.ndarray:
    """Classical RK4 for a batch of geodesics from the identity.

    The state is ``(X, Z, U)`` with ``U' = J(z) U`` carrying the frame velocity,
    so no matrix exponential or eigendecomposition is involved.  ``us`` has
    shape ``(B, dim)``.  Returns exp-coordinates of shape ``(len(record), B, dim)``
    at the requested step indices (default: only the last).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    us = np.atleast_2d(np.asarray(us, dtype=float))
    n, m = alg.dim_v, alg.dim_z
    x, z = us[:, :n], us[:, n:]
    Jz = np.einsum("bk,kij->bij", z, alg.J)
    state = np.concatenate([np.zeros((len(us), n + m)), x], axis=1)
    h = float(t_final) / steps
    record = [steps] if record is None else list(record)
    out = []
    if 0 in record:
        out.append(state[:, : n + m].copy())
    f = lambda s: _rk4_rhs(alg, Jz, z, s)  # noqa: E731
    for k in range(1, steps + 1):
        k1 = f(state)
        k2 = f(state + 0.5 * h * k1)
        k3 = f(state + 0.5 * h * k2)
        k4 = f(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if k in record:
            out.append(state[:, : n + m].copy())
    return np.array(out)


def default_steps(t: float) -> int:
    return max(1, int(math.ceil(STEPS_PER_UNIT * abs(t))))


def geodesic_ode_oracle(alg: MetricTwoStepAlgebra, init: GeodesicInitial, t: float,
                        steps: int | None = None) -> GroupPointExp:
    """RK4 integration of the exp-coordinate geodesic equations, then left translation.

    Defaults to 1000 steps per unit of time.
    """
    steps = default_steps(t) if steps is None else steps
    pt = integrate_geodesics(alg, init.u.as_vector()[None, :], t, steps)[-1, 0]
    return group_multiply(alg, init.base, GroupPointExp(pt[: alg.dim_v], pt[alg.dim_v:]))


def point_distance(p: GroupPointExp, q: GroupPointExp) -> float:
    """Euclidean distance between exp-coordinates."""
    return float(np.linalg.norm(p.as_vector() - q.as_vector()))


# --------------------------------------------------------------------------
# closed geodesics on quotients

@dataclass(frozen=True, eq=False)
class TranslationData:
    """Length data for the deck transformation ``exp(v* + z*)``.

    ``z_star_star`` is the part of ``z*`` orthogonal to ``[v*, V]``;
    closed geodesics in the class have lengths between ``lower = |v*|``
    and ``omega_star = sqrt(|v*|^2 + |z**|^2)``.
    """

    v_star: np.ndarray
    z_star: np.ndarray
    z_star_star: np.ndarray
    omega_star: float
    lower: float


def translation_data(alg: MetricTwoStepAlgebra, w: AlgebraElement, tol: float = 1e-9) -> TranslationData:
    v = _check_v(alg, w.v)
    z = _check_z(alg, w.z)
    K = kernel_map(alg, v, tol).basis
    zss = K @ (K.T @ z)
    lower = float(np.linalg.norm(v))
    omega = float(math.sqrt(lower**2 + float(zss @ zss)))
    return TranslationData(v.copy(), z.copy(), zss, omega, lower)


@dataclass(frozen=True, eq=False)
class ClosedGeodesicWitness:
    """``sigma(t) = exp(xi) exp(t (v* + z**) / omega*)`` is translated by ``exp(w)``
    through ``omega*``; ``residual`` is the measured max of
    ``|exp(w) sigma(t) - sigma(t + omega*)|`` over the sampled ``t``."""

    xi: np.ndarray
    translation: TranslationData
    residual: float
    t_samples: np.ndarray


def closed_geodesic_witness(alg: MetricTwoStepAlgebra, w: AlgebraElement,
                            n_samples: int = 31, periods: float = 3.0) -> ClosedGeodesicWitness:
    td = translation_data(alg, w)
    if td.omega_star <= 0.0:
        raise ValueError("w = 0 has no closed geodesic of positive length")
    # solve [v*, xi] = z** - z* in the minimum-norm sense; consistent since z** - z* is in [v*, V]
    A = image_matrix(alg, td.v_star).T  # (dim_z, dim_v): xi -> [v*, xi]
    rhs = td.z_star_star - td.z_star
    xi = np.linalg.lstsq(A, rhs, rcond=None)[0] if alg.dim_v else np.zeros(0)
    base = GroupPointExp(xi, np.zeros(alg.dim_z))
    u = AlgebraElement(td.v_star / td.omega_star, td.z_star_star / td.omega_star)
    geo = ClosedFormGeodesic(alg, GeodesicInitial(base, u))
    gamma = GroupPointExp.exp(w)
    ts = np.linspace(0.0, periods * td.omega_star, n_samples)
    res = 0.0
    for t in ts:
        lhs = group_multiply(alg, gamma, geo(t))
        res = max(res, point_distance(lhs, geo(t + td.omega_star)))
    return ClosedGeodesicWitness(xi, td, res, ts)


__all__ = [
    "ClosedFormGeodesic",
    "ClosedGeodesicWitness",
    "GeodesicInitial",
    "TranslationData",
    "closed_geodesic_witness",
    "default_steps",
    "geodesic_closed_form",
    "geodesic_ode_oracle",
    "heisenberg_geodesic",
    "integrate_geodesics",
    "point_distance",
    "translation_data",
    "velocity_frame",
]
