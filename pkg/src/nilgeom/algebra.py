"""Metric 2-step nilpotent Lie algebras built from skew maps ``J: Z -> so(V)``.

An algebra is stored as the stack ``J[k] = J(z_k)`` for an orthonormal basis
``z_k`` of the centre ``Z``; with the standard dot product on both ``V`` and
``Z`` the bracket of two ``V`` vectors is

    [x, y]_k = <J(z_k) x, y>

and everything in ``Z`` is central.  Group elements are kept in exponential
coordinates, where the product is exactly ``exp(x) exp(y) = exp(x + y + [x, y]/2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .linalg import to_fraction

DEFAULT_TOL = 1e-12


class DimensionError(ValueError):
    """Vector or matrix dimensions do not match the owning algebra."""


class PreconditionError(ValueError):
    """An input fails a numerically checked precondition (residual too large)."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MetricTwoStepAlgebra:
    """``N = V + Z`` with bracket defined through the skew maps ``j_maps``.

    ``j_maps[k]`` is the matrix of ``J(z_k)`` on an orthonormal basis of V.
    Construction only checks that the maps can be read as arrays; call
    :func:`validate` for skew-symmetry and shape checks.  ``rational_maps``
    holds the same matrices as Fractions when the input was rational, and
    enables the exact code paths.
    """

    dim_v: int
    dim_z: int
    j_maps: tuple
    label: str = ""
    rational_maps: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        maps = tuple(_readonly(np.atleast_2d(m)) if np.size(m) else _readonly(np.zeros((0, 0)))
                     for m in self.j_maps)
        object.__setattr__(self, "j_maps", maps)
        object.__setattr__(self, "dim_v", int(self.dim_v))
        object.__setattr__(self, "dim_z", int(self.dim_z))
        if self._shapes_ok():
            stack = np.stack(maps) if maps else np.zeros((0, self.dim_v, self.dim_v))
        else:
            stack = None
        if stack is not None:
            stack.setflags(write=False)
        object.__setattr__(self, "_stack", stack)

    @classmethod
    def from_rational(cls, maps: Sequence, label: str = "") -> "MetricTwoStepAlgebra":
        """Build from nested sequences of ints, Fractions or ``"p/q"`` strings."""
        rat = tuple(tuple(tuple(to_fraction(a) for a in row) for row in m) for m in maps)
        dim_z = len(rat)
        dim_v = len(rat[0]) if dim_z else 0
        floats = [[[float(a) for a in row] for row in m] for m in rat]
        return cls(dim_v, dim_z, tuple(floats), label=label, rational_maps=rat)

    @classmethod
    def from_structure_constants(cls, dim_v: int, dim_z: int, constants, label: str = ""):
        """Build from ``[e_i, e_j] = sum_k c_ij^k z_k`` given as ``(i, j, k, c)`` records.

        Indices are 0-based; ``i, j`` index V and ``k`` indexes Z.  Each
        unordered pair need only be given once; antisymmetry fills the rest.
        """
        mats = [[[Fraction(0)] * dim_v for _ in range(dim_v)] for _ in range(dim_z)]
        for rec in constants:
            if isinstance(rec, dict):
                i, j, k, c = rec["i"], rec["j"], rec["k"], rec["c"]
            else:
                i, j, k, c = rec
            c = to_fraction(c)
            if not (0 <= i < dim_v and 0 <= j < dim_v and 0 <= k < dim_z):
                raise DimensionError(f"structure constant index out of range: {(i, j, k)}")
            # <J(z_k) e_i, e_j> = c  =>  J_k[j, i] = c
            mats[k][j][i] = c
            mats[k][i][j] = -c
        return cls.from_rational(mats, label=label) if dim_z else cls(dim_v, 0, (), label)

    def _shapes_ok(self) -> bool:
        return len(self.j_maps) == self.dim_z and all(
            m.shape == (self.dim_v, self.dim_v) for m in self.j_maps
        )

    @property
    def J(self) -> np.ndarray:
        """The ``(dim_z, dim_v, dim_v)`` stack of J maps."""
        if self._stack is None:
            raise DimensionError(f"algebra {self.label!r} has inconsistent j_maps shapes")
        return self._stack

    @property
    def dim(self) -> int:
        return self.dim_v + self.dim_z

    def rational_stack(self) -> tuple:
        """Exact J maps; floats are converted exactly when no rational data was given."""
        if self.rational_maps is not None:
            return self.rational_maps
        return tuple(tuple(tuple(Fraction(float(a)) for a in row) for row in m) for m in self.J)

    def __repr__(self) -> str:
        return f"MetricTwoStepAlgebra(dim_v={self.dim_v}, dim_z={self.dim_z}, label={self.label!r})"


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """A vector ``v + z`` of ``N = V + Z`` in orthonormal coordinates."""

    v: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", _readonly(np.atleast_1d(self.v)))
        object.__setattr__(self, "z", _readonly(np.atleast_1d(self.z)))

    @classmethod
    def from_vector(cls, w, dim_v: int) -> "AlgebraElement":
        w = np.asarray(w, dtype=float)
        return cls(w[:dim_v], w[dim_v:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.v, self.z])

    def norm(self) -> float:
        return float(np.sqrt(self.v @ self.v + self.z @ self.z))

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.v + other.v, self.z + other.z)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.v - other.v, self.z - other.z)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.v, -self.z)

    def __mul__(self, s: float) -> "AlgebraElement":
        return AlgebraElement(s * self.v, s * self.z)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class GroupPointExp:
    """The group element ``exp(x + z)``, stored by its exponential coordinates."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _readonly(np.atleast_1d(self.x)))
        object.__setattr__(self, "z", _readonly(np.atleast_1d(self.z)))

    @classmethod
    def identity(cls, alg: MetricTwoStepAlgebra) -> "GroupPointExp":
        return cls(np.zeros(alg.dim_v), np.zeros(alg.dim_z))

    @classmethod
    def exp(cls, w: AlgebraElement) -> "GroupPointExp":
        return cls(w.v, w.z)

    def log(self) -> AlgebraElement:
        return AlgebraElement(self.x, self.z)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.z])

    def inverse(self) -> "GroupPointExp":
        return GroupPointExp(-self.x, -self.z)


def _check_v(alg: MetricTwoStepAlgebra, x: np.ndarray, what: str = "V-vector") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (alg.dim_v,):
        raise DimensionError(f"{what} has length {x.shape[-1:]}, expected {alg.dim_v}")
    return x


def _check_z(alg: MetricTwoStepAlgebra, z: np.ndarray, what: str = "Z-vector") -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1:] != (alg.dim_z,):
        raise DimensionError(f"{what} has length {z.shape[-1:]}, expected {alg.dim_z}")
    return z


def bracket_v(alg: MetricTwoStepAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bracket of V-vectors; broadcasts over leading axes of ``x`` and ``y``."""
    x = _check_v(alg, x)
    y = _check_v(alg, y)
    return np.einsum("kij,...j,...i->...k", alg.J, x, y)


def bracket(alg: MetricTwoStepAlgebra, x: AlgebraElement, y: AlgebraElement) -> np.ndarray:
    """``[x, y]`` as a Z-vector.  Only the V-components contribute."""
    _check_z(alg, x.z)
    _check_z(alg, y.z)
    return bracket_v(alg, x.v, y.v)


def j_of(alg: MetricTwoStepAlgebra, z) -> np.ndarray:
    """``J(z) = sum_k z_k J(z_k)``."""
    z = _check_z(alg, z)
    return np.tensordot(z, alg.J, axes=(0, 0)) if alg.dim_z else np.zeros((alg.dim_v, alg.dim_v))


def ad_matrix(alg: MetricTwoStepAlgebra, x: np.ndarray) -> np.ndarray:
    """Matrix ``(dim_z, dim_v)`` of ``y -> [x, y]`` on V."""
    x = _check_v(alg, x)
    # [x, y]_k = y . (J_k x)
    return np.einsum("kij,j->ki", alg.J, x)


def image_matrix(alg: MetricTwoStepAlgebra, x: np.ndarray) -> np.ndarray:
    """Matrix ``(dim_v, dim_z)`` of ``z -> J(z) x``; columns are ``J(z_k) x``."""
    return ad_matrix(alg, x).T


def multiply_coords(alg: MetricTwoStepAlgebra, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """BCH product on stacked exp-coordinate vectors of length ``dim``; broadcasts."""
    n = alg.dim_v
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = p + q
    out[..., n:] += 0.5 * bracket_v(alg, p[..., :n], q[..., :n])
    return out


def group_multiply(alg: MetricTwoStepAlgebra, p: GroupPointExp, q: GroupPointExp) -> GroupPointExp:
    """``exp(p) exp(q) = exp(p + q + [p, q]/2)``."""
    for g in (p, q):
        _check_v(alg, g.x)
        _check_z(alg, g.z)
    return GroupPointExp(p.x + q.x, p.z + q.z + 0.5 * bracket_v(alg, p.x, q.x))


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)
    max_skew_violation: float = 0.0
    max_duality_residual: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.issues

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "issues": list(self.issues),
            "max_skew_violation": self.max_skew_violation,
            "max_duality_residual": self.max_duality_residual,
        }


def validate(alg: MetricTwoStepAlgebra, tol: float = DEFAULT_TOL, samples: int = 16,
             seed: int = 0) -> ValidationReport:
    """Check dimensions, skew-symmetry and the duality ``<[x,y],z> = <J(z)x,y>``.

    Returns a report; an empty ``issues`` list means the algebra is valid.
    """
    rep = ValidationReport()
    if alg.dim_v <= 0 or alg.dim_z < 0:
        rep.issues.append(f"bad dimensions dim_v={alg.dim_v}, dim_z={alg.dim_z}")
    if len(alg.j_maps) != alg.dim_z:
        rep.issues.append(f"expected {alg.dim_z} j_maps, got {len(alg.j_maps)}")
    for k, m in enumerate(alg.j_maps):
        if m.shape != (alg.dim_v, alg.dim_v):
            rep.issues.append(f"j_maps[{k}] has shape {m.shape}, expected {(alg.dim_v, alg.dim_v)}")
            continue
        viol = float(np.max(np.abs(m + m.T))) if m.size else 0.0
        rep.max_skew_violation = max(rep.max_skew_violation, viol)
        if viol > tol:
            rep.issues.append(f"j_maps[{k}] is not skew-symmetric (max |M + M^T| = {viol:.3e})")
    if rep.issues or alg.dim_z == 0:
        return rep

    rng = np.random.default_rng(seed)
    resid = 0.0
    for _ in range(samples):
        x, y = rng.standard_normal((2, alg.dim_v))
        z = rng.standard_normal(alg.dim_z)
        x, y, z = x / np.linalg.norm(x), y / np.linalg.norm(y), z / np.linalg.norm(z)
        br = bracket_v(alg, x, y)
        resid = max(resid, abs(br @ z - (j_of(alg, z) @ x) @ y))
        resid = max(resid, float(np.max(np.abs(br + bracket_v(alg, y, x)))))
    rep.max_duality_residual = float(resid)
    if resid > tol:
        rep.issues.append(f"bracket/J duality residual {resid:.3e}")
    return rep


def require_valid(alg: MetricTwoStepAlgebra, tol: float = DEFAULT_TOL) -> None:
    rep = validate(alg, tol)
    if not rep.ok:
        raise ValueError(f"invalid algebra {alg.label!r}: " + "; ".join(rep.issues))
