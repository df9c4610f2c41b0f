"""Eigenstructure of skew maps and the J(z) classification predicates.

A real skew map ``J`` has eigenvalues ``+-i theta``; we obtain them from the
symmetric positive semidefinite matrix ``-J^2 = J^T J`` whose eigenspaces are
exactly the J-invariant "planes" (sums of 2-planes rotated at the same rate).
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import NamedTuple

import numpy as np

from .algebra import MetricTwoStepAlgebra, _check_v, _check_z, image_matrix, j_of
from .linalg import float_nullspace

SKEW_TOL = 1e-10
CLUSTER_TOL = 1e-8
ZERO_TOL = 1e-7
DENOM_BOUND = 64
RATIONAL_TOL = 1e-9


def _as_skew(J, tol: float = SKEW_TOL) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {J.shape}")
    if J.size and np.max(np.abs(J + J.T)) > tol * max(1.0, np.max(np.abs(J))):
        raise ValueError("matrix is not skew-symmetric")
    return J


@dataclass(frozen=True, eq=False)
class SkewSpectrum:
    """Distinct frequencies of a skew map with their invariant subspaces.

    ``plane_bases[i]`` has orthonormal columns spanning the eigenspace of
    ``J^2`` for ``-thetas[i]**2``; ``kernel_basis`` spans ``ker J``.
    """

    J: np.ndarray
    thetas: np.ndarray
    plane_bases: tuple
    kernel_basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.J.shape[0]

    def projector(self, i: int) -> np.ndarray:
        b = self.plane_bases[i]
        return b @ b.T

    def kernel_projector(self) -> np.ndarray:
        return self.kernel_basis @ self.kernel_basis.T

    def split(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """``x = x1 + sum(xi)`` with ``x1`` in the kernel and ``xi[i]`` in plane ``i``."""
        x = np.asarray(x, dtype=float)
        parts = [b @ (b.T @ x) for b in self.plane_bases]
        x1 = self.kernel_basis @ (self.kernel_basis.T @ x)
        return x1, parts

    def exp_apply(self, t: float, x: np.ndarray) -> np.ndarray:
        """``e^{tJ} x`` by rotating each plane component through ``t theta_i``."""
        x = np.asarray(x, dtype=float)
        out = self.kernel_basis @ (self.kernel_basis.T @ x)
        for th, b in zip(self.thetas, self.plane_bases):
            c = b @ (b.T @ x)
            out = out + math.cos(t * th) * c + (math.sin(t * th) / th) * (self.J @ c)
        return out

    def inv_apply(self, x: np.ndarray) -> np.ndarray:
        """``J^{-1}`` on ``ker(J)^perp``: on plane ``i`` it equals ``-J / theta_i^2``.

        The kernel component of ``x`` is discarded.
        """
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for th, b in zip(self.thetas, self.plane_bases):
            out = out - (self.J @ (b @ (b.T @ x))) / th**2
        return out

    def exp_matrix(self, t: float) -> np.ndarray:
        return np.column_stack([self.exp_apply(t, e) for e in np.eye(self.dim)]) if self.dim else np.eye(0)


def skew_eigenstructure(J, tol: float = ZERO_TOL, cluster_tol: float = CLUSTER_TOL) -> SkewSpectrum:
    """Frequencies ``theta_i > tol`` (sorted, clustered) and invariant subspaces of ``J``."""
    J = _as_skew(J)
    n = J.shape[0]
    if n == 0:
        return SkewSpectrum(J, np.zeros(0), (), np.zeros((0, 0)))
    w, Q = np.linalg.eigh(J.T @ J)
    th = np.sqrt(np.clip(w, 0.0, None))
    kernel = Q[:, th <= tol]
    thetas, bases = [], []
    idx = np.flatnonzero(th > tol)
    groups: list[list[int]] = []
    for i in idx:  # eigh returns ascending order
        if groups and th[i] - th[groups[-1][-1]] <= cluster_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    for g in groups:
        thetas.append(float(np.mean(th[g])))
        bases.append(Q[:, g])
    return SkewSpectrum(J, np.array(thetas), tuple(bases), kernel)


def exp_skew(J, t: float) -> np.ndarray:
    """``e^{tJ}`` assembled from the invariant planes (identity on the kernel)."""
    return skew_eigenstructure(J).exp_matrix(t)


class KernelMap(NamedTuple):
    basis: np.ndarray  # (dim_z, k) orthonormal columns
    degenerate: bool


def kernel_map(alg: MetricTwoStepAlgebra, x, tol: float = 1e-9) -> KernelMap:
    """``K(x) = {z : J(z) x = 0}``, the orthogonal complement of ``[x, V]`` in Z."""
    x = _check_v(alg, x)
    if not np.any(x):
        return KernelMap(np.eye(alg.dim_z), True)
    return KernelMap(float_nullspace(image_matrix(alg, x), tol), False)


def kernel_map_batch(alg: MetricTwoStepAlgebra, X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Projectors onto ``K(x)`` for each row of ``X``; shape ``(N, dim_z, dim_z)``.

    Zero rows give the identity.
    """
    X = np.asarray(X, dtype=float)
    A = np.einsum("kij,nj->nik", alg.J, X)  # columns J(z_k) x
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    m = alg.dim_z
    smax = s[:, :1] if s.shape[1] else np.zeros((len(X), 1))
    cut = tol * np.maximum(1.0, smax)
    keep = np.zeros((len(X), m), dtype=bool)
    keep[:, : s.shape[1]] = s <= cut
    keep[:, s.shape[1]:] = True
    V = vt.transpose(0, 2, 1) * keep[:, None, :]
    return V @ V.transpose(0, 2, 1)


# --------------------------------------------------------------------------
# classification predicates

class HeisenbergCheck(NamedTuple):
    is_heisenberg: bool
    residual: float


def is_heisenberg_type(alg: MetricTwoStepAlgebra, tol: float = 1e-10) -> HeisenbergCheck:
    """``J(z_i)J(z_j) + J(z_j)J(z_i) = -2 delta_ij Id`` for all basis pairs."""
    J = alg.J
    eye = np.eye(alg.dim_v)
    res = 0.0
    for i in range(alg.dim_z):
        for j in range(i, alg.dim_z):
            target = -2.0 * eye if i == j else 0.0 * eye
            res = max(res, float(np.max(np.abs(J[i] @ J[j] + J[j] @ J[i] - target))))
    if alg.dim_z == 0:
        res = float("inf")
    return HeisenbergCheck(res <= tol, res)


class Nonsingularity(str, enum.Enum):
    TRUE_CERTIFIED = "TRUE_CERTIFIED"
    TRUE_SAMPLED = "TRUE_SAMPLED"
    FALSE = "FALSE"


class NonsingularVerdict(NamedTuple):
    verdict: Nonsingularity
    witness: np.ndarray | None
    min_singular_value: float
    n_samples: int


def z_samples(dim_z: int, seed: int = 0, n_random: int = 32) -> tuple[np.ndarray, int]:
    """Deterministic unit sample of Z.

    Rows are: the signed basis vectors, normalized ``e_i +- e_j`` for
    ``i < j``, then ``n_random`` seeded uniform unit vectors.  Returns the
    array and the number of structured (non-random) rows.
    """
    eye = np.eye(dim_z)
    rows = [s * e for e in eye for s in (1.0, -1.0)]
    for i, j in itertools.combinations(range(dim_z), 2):
        for s in (1.0, -1.0):
            rows.append((eye[i] + s * eye[j]) / math.sqrt(2.0))
    n_struct = len(rows)
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((n_random, dim_z))
    r /= np.linalg.norm(r, axis=1, keepdims=True)
    return np.vstack([np.array(rows).reshape(-1, dim_z), r]), n_struct


def is_nonsingular(alg: MetricTwoStepAlgebra, samples: np.ndarray | None = None,
                   tol: float = 1e-9, seed: int = 0) -> NonsingularVerdict:
    """Is ``J(z)`` invertible for every ``z != 0``?

    Certified when ``dim_z == 1`` (one determinant) or the algebra is of
    Heisenberg type; otherwise decided on a sample, and a singular sample is
    returned as witness.
    """
    if samples is None:
        samples, _ = z_samples(alg.dim_z, seed)
    if alg.dim_z == 1:
        samples = np.array([[1.0]])
    smin = math.inf
    for z in samples:
        s = np.linalg.svd(j_of(alg, z), compute_uv=False)
        cur = float(s[-1]) if s.size else 0.0
        if cur <= tol * max(1.0, float(np.linalg.norm(z))):
            return NonsingularVerdict(Nonsingularity.FALSE, np.array(z, dtype=float), cur, len(samples))
        smin = min(smin, cur)
    if alg.dim_z == 1 or is_heisenberg_type(alg).is_heisenberg:
        return NonsingularVerdict(Nonsingularity.TRUE_CERTIFIED, None, smin, len(samples))
    return NonsingularVerdict(Nonsingularity.TRUE_SAMPLED, None, smin, len(samples))


class Resonance(str, enum.Enum):
    NON_RESONANT = "NON_RESONANT"
    RESONANT = "RESONANT"
    STRONGLY_RESONANT = "STRONGLY_RESONANT"


@dataclass(frozen=True)
class ResonanceClass:
    """Resonance type of a single ``J(z)``.

    ``ratios[i]`` approximates ``thetas[i] / thetas[0]``.  ``period`` is a
    ``t`` with ``e^{tJ} = Id`` (resonant case); ``half_period`` a ``t`` with
    ``e^{tJ} = -Id`` (strongly resonant case), ``half_period_residual`` its
    numerical check ``||e^{tJ} + Id||``.
    """

    kind: Resonance
    thetas: tuple
    ratios: tuple = ()
    period: float | None = None
    half_period: float | None = None
    half_period_residual: float | None = None
    kernel_dim: int = 0

    @property
    def resonant(self) -> bool:
        return self.kind is not Resonance.NON_RESONANT

    @property
    def strongly_resonant(self) -> bool:
        return self.kind is Resonance.STRONGLY_RESONANT


def rational_approximation(x: float, denom_bound: int = DENOM_BOUND,
                           tol: float = RATIONAL_TOL) -> Fraction | None:
    """Best continued-fraction approximation with denominator ``<= denom_bound``,
    or None if it misses ``x`` by more than ``tol``."""
    f = Fraction(x).limit_denominator(denom_bound)
    return f if abs(float(f) - x) <= tol * max(1.0, abs(x)) else None


def resonance_class(alg: MetricTwoStepAlgebra, z, denom_bound: int = DENOM_BOUND,
                    tol: float = RATIONAL_TOL) -> ResonanceClass:
    z = _check_z(alg, z)
    if not np.any(z):
        raise ValueError("resonance is only defined for z != 0")
    spec = skew_eigenstructure(j_of(alg, z))
    thetas = tuple(float(t) for t in spec.thetas)
    kdim = spec.kernel_basis.shape[1]
    if not thetas:
        # no nonzero eigenvalues: e^{tJ} = Id for every t, -Id unreachable
        return ResonanceClass(Resonance.RESONANT, (), (), 0.0, None, None, kdim)
    ratios = []
    for th in thetas:
        r = rational_approximation(th / thetas[0], denom_bound, tol)
        if r is None:
            return ResonanceClass(Resonance.NON_RESONANT, thetas, tuple(ratios), kernel_dim=kdim)
        ratios.append(r)
    # theta_i = n_i * omega with coprime integers n_i
    lcm_q = reduce(math.lcm, (r.denominator for r in ratios), 1)
    ints = [r.numerator * (lcm_q // r.denominator) for r in ratios]
    g = reduce(math.gcd, ints)
    ints = [n // g for n in ints]
    omega = thetas[0] * g / lcm_q
    period = 2 * math.pi / omega
    if kdim == 0 and all(n % 2 == 1 for n in ints):
        t = math.pi / omega
        resid = float(np.max(np.abs(spec.exp_matrix(t) + np.eye(alg.dim_v))))
        if resid <= 1e-8 * max(1.0, t):
            return ResonanceClass(Resonance.STRONGLY_RESONANT, thetas, tuple(ratios), period, t, resid, kdim)
    return ResonanceClass(Resonance.RESONANT, thetas, tuple(ratios), period, kernel_dim=kdim)


class IntegerRelation(NamedTuple):
    independent: bool
    coefficients: tuple | None  # (c0, c1, ..., cp)
    residual: float | None
    method: str
    heuristic: bool = True

    @property
    def kind(self) -> str:
        return "INDEPENDENT" if self.independent else "RELATION"


_EXHAUSTIVE_LIMIT = 4_000_000


def integer_relation(values, coeff_bound: int = 50, tol: float = 1e-9) -> IntegerRelation:
    """Search integers ``|c_i| <= coeff_bound``, not all zero, with
    ``|c0 + sum c_i values_i| < tol``.

    For small problems every ``(c_1..c_p)`` is tried with ``c0`` fixed by
    rounding; the smallest relation in max-norm then 1-norm is returned,
    signed so its first nonzero entry is positive.  Larger problems fall
    back to PSLQ.
    """
    vals = np.asarray(values, dtype=float)
    p = len(vals)
    if p == 0:
        return IntegerRelation(True, None, None, "empty")
    width = 2 * coeff_bound + 1
    if width**p <= _EXHAUSTIVE_LIMIT:
        rng = np.arange(-coeff_bound, coeff_bound + 1)
        grid = np.stack(np.meshgrid(*([rng] * p), indexing="ij"), axis=-1).reshape(-1, p)
        s = grid @ vals
        c0 = -np.round(s)
        res = np.abs(c0 + s)
        ok = (res < tol) & (np.abs(c0) <= coeff_bound) & np.any(grid != 0, axis=1)
        if not np.any(ok):
            return IntegerRelation(True, None, None, "exhaustive")
        full = np.column_stack([c0[ok], grid[ok]]).astype(np.int64)
        key = np.lexsort((np.abs(full).sum(1), np.abs(full).max(1)))
        best = full[key[0]]
        nz = best[np.flatnonzero(best)[0]]
        best = best if nz > 0 else -best
        return IntegerRelation(False, tuple(int(c) for c in best), float(res[ok][key[0]]), "exhaustive")

    import mpmath

    rel = mpmath.pslq([mpmath.mpf(1)] + [mpmath.mpf(float(v)) for v in vals],
                      tol=tol, maxcoeff=coeff_bound, maxsteps=10**5)
    if rel is None or max(abs(c) for c in rel) > coeff_bound:
        return IntegerRelation(True, None, None, "pslq")
    nz = next(c for c in rel if c)
    rel = [c if nz > 0 else -c for c in rel]
    r = abs(rel[0] + float(np.dot(rel[1:], vals)))
    if r >= tol:
        return IntegerRelation(True, None, None, "pslq")
    return IntegerRelation(False, tuple(int(c) for c in rel), r, "pslq")


def irrationality_witness(alg: MetricTwoStepAlgebra, z, coeff_bound: int = 50,
                          tol: float = 1e-9) -> IntegerRelation:
    """Bounded search for a rational relation among ``1, theta_1(z), ..., theta_p(z)``."""
    z = _check_z(alg, z)
    if not np.any(z):
        raise ValueError("irrationality is only tested for z != 0")
    return integer_relation(skew_eigenstructure(j_of(alg, z)).thetas, coeff_bound, tol)


@dataclass
class ClassificationReport:
    """Algebra-level verdicts for the five J(z) predicates."""

    label: str
    heisenberg: HeisenbergCheck
    nonsingular: NonsingularVerdict
    in_resonance: bool
    strongly_in_resonance: bool
    irrational: bool
    resonance_samples: list = field(default_factory=list)
    irrational_samples: list = field(default_factory=list)
    seed: int = 0
    n_structured: int = 0

    def to_dict(self) -> dict:
        def vec(a):
            return None if a is None else [float(v) for v in a]

        return {
            "algebra": self.label,
            "seed": self.seed,
            "rng": "numpy.random.default_rng/PCG64",
            "heisenberg_type": bool(self.heisenberg.is_heisenberg),
            "nonsingular": self.nonsingular.verdict.value,
            "in_resonance": bool(self.in_resonance),
            "strongly_in_resonance": bool(self.strongly_in_resonance),
            "irrational": bool(self.irrational),
            "details": {
                "heisenberg_type": {"residual": self.heisenberg.residual, "sampled": False},
                "nonsingular": {
                    "verdict": self.nonsingular.verdict.value,
                    "witness": vec(self.nonsingular.witness),
                    "min_singular_value": self.nonsingular.min_singular_value,
                    "sampled": self.nonsingular.verdict is Nonsingularity.TRUE_SAMPLED,
                },
                "resonance": {"sampled": True, "samples": self.resonance_samples},
                "irrational": {"sampled": True, "heuristic": True, "samples": self.irrational_samples},
            },
            "sample_description": (
                f"{self.n_structured} structured z (+-e_i, (e_i+-e_j)/sqrt2) and "
                f"{len(self.resonance_samples) - self.n_structured} seeded random unit z"
            ),
        }


def classify(alg: MetricTwoStepAlgebra, seed: int = 0, n_random: int = 32,
             denom_bound: int = DENOM_BOUND, tol: float = RATIONAL_TOL,
             coeff_bound: int = 12) -> ClassificationReport:
    """Run every predicate over the deterministic Z sample.

    The algebra is reported irrational when every *random* sample admits no
    bounded integer relation; structured samples are recorded but do not
    count, since irrationality is a statement about generic ``z``.
    """
    zs, n_struct = z_samples(alg.dim_z, seed, n_random)
    hz = is_heisenberg_type(alg)
    ns = is_nonsingular(alg, zs, seed=seed)
    res_rows, irr_rows = [], []
    all_res = all_strong = True
    all_indep = True
    for i, z in enumerate(zs):
        rc = resonance_class(alg, z, denom_bound, tol)
        all_res &= rc.resonant
        all_strong &= rc.strongly_resonant
        res_rows.append({
            "z": [float(v) for v in z],
            "class": rc.kind.value,
            "thetas": list(rc.thetas),
            "ratios": [str(r) for r in rc.ratios],
            "half_period": rc.half_period,
        })
        rel = irrationality_witness(alg, z, coeff_bound, tol)
        irr_rows.append({"z": [float(v) for v in z], "result": rel.kind,
                         "coefficients": None if rel.coefficients is None else list(rel.coefficients)})
        if i >= n_struct:
            all_indep &= rel.independent
    return ClassificationReport(alg.label, hz, ns, all_res, all_strong, all_indep,
                                res_rows, irr_rows, seed, n_struct)
