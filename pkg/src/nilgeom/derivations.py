"""Inner, almost inner and lattice-almost-inner derivations; invariant splittings.

All derivations here map V into Z and kill Z, so they are stored as a
``(dim_z, dim_v)`` matrix ``M`` with ``phi(x) = M x``.  Such a map is almost
inner at ``x`` when ``phi(x)`` lies in ``[x, V]``, i.e. is orthogonal to
``K(x) = {z : J(z) x = 0}``.  For fixed ``x`` that is a set of linear
conditions ``k^T M x = 0`` (``k`` in ``K(x)``) on the entries of ``M``; the
derivation spaces are null spaces of stacked conditions.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .algebra import MetricTwoStepAlgebra, ad_matrix, bracket_v
from .lattice import LatticeBasis, enumerate_arrays, rational_generators
from .linalg import EchelonBasis, canonical_basis, float_nullspace, nullspace, orthonormalize_rows
from .spectral import kernel_map_batch

RANK_TOL = 1e-9
CONTAINMENT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class DerivationVtoZ:
    """``phi(x) = matrix @ x`` on V, ``phi(Z) = 0``; hence ``phi^2 = 0``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    @classmethod
    def from_vec(cls, vec, dim_z: int, dim_v: int) -> "DerivationVtoZ":
        return cls(np.asarray([float(a) for a in vec]).reshape(dim_z, dim_v))

    @classmethod
    def elementary(cls, alg: MetricTwoStepAlgebra, v_index: int, z_index: int) -> "DerivationVtoZ":
        """Sends basis vector ``e_{v_index}`` to ``z_{z_index}``, everything else to 0."""
        m = np.zeros((alg.dim_z, alg.dim_v))
        m[z_index, v_index] = 1.0
        return cls(m)

    @property
    def vec(self) -> np.ndarray:
        return self.matrix.ravel()


def inner_derivation(alg: MetricTwoStepAlgebra, xi) -> DerivationVtoZ:
    """``ad(xi)`` restricted to V: ``x -> [xi, x]``."""
    return DerivationVtoZ(ad_matrix(alg, xi))


@dataclass
class DerivationSpaceReport:
    """A linear space of derivations V -> Z.

    ``basis`` is orthonormal for the entrywise inner product.
    ``echelon_basis`` spans the same space in reduced row echelon form
    (a canonical, index-stable basis used by the CLI); in exact mode its
    entries are Fractions.
    """

    kind: str
    basis: list
    echelon_basis: list
    sample_description: str = ""
    residual_max: float = 0.0
    flags: frozenset = frozenset()
    exact: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def matrix(self) -> np.ndarray:
        """Basis as rows of a ``(dim, dim_z*dim_v)`` array."""
        if not self.basis:
            return np.zeros((0, 0))
        return np.array([b.vec for b in self.basis])

    def echelon_derivations(self, dim_z: int, dim_v: int) -> list[DerivationVtoZ]:
        return [DerivationVtoZ.from_vec(r, dim_z, dim_v) for r in self.echelon_basis]

    def projection_residual(self, phi: DerivationVtoZ) -> float:
        """Distance from ``phi`` to this space (entrywise norm)."""
        if not self.basis:
            return float(np.linalg.norm(phi.vec))
        Q = self.matrix()
        return float(np.linalg.norm(phi.vec - Q.T @ (Q @ phi.vec)))

    def to_dict(self, dim_z: int, dim_v: int) -> dict:
        def fmt(a):
            return str(a) if isinstance(a, Fraction) else float(a)

        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "exact": self.exact,
            "flags": sorted(self.flags),
            "sample_description": self.sample_description,
            "residual_max": self.residual_max,
            "basis": [b.matrix.tolist() for b in self.basis],
            "echelon_basis": [np.array([fmt(a) for a in r], dtype=object).reshape(dim_z, dim_v).tolist()
                              for r in self.echelon_basis],
            **self.extra,
        }


def _finish(kind: str, null_rows, ncols: int, exact: bool, dim_z: int, dim_v: int, **kw) -> DerivationSpaceReport:
    tol = None if exact else RANK_TOL
    if null_rows is not None and len(null_rows) and not exact:
        null_rows = [list(r) for r in np.asarray(null_rows, dtype=float)]
    ech = canonical_basis(null_rows, ncols, tol) if len(null_rows) else []
    if not exact:
        ech = [[0.0 if abs(a) <= 1e-13 else float(a) for a in r] for r in ech]
    ortho = orthonormalize_rows(ech) if ech else np.zeros((0, ncols))
    basis = [DerivationVtoZ.from_vec(r, dim_z, dim_v) for r in ortho]
    return DerivationSpaceReport(kind, basis, ech, exact=exact, **kw)


# --------------------------------------------------------------------------
# inner derivations

def inner_derivation_space(alg: MetricTwoStepAlgebra, exact: bool = False) -> DerivationSpaceReport:
    """Span of ``ad(xi)|_V`` for ``xi`` in V; dimension ``dim_v - dim ker(ad)``."""
    n, m = alg.dim_v, alg.dim_z
    if exact:
        J = alg.rational_stack()
        # ad(e_a): row k is J_k[:, a]^T  (since [e_a, y]_k = y . J_k e_a)
        gens = [[J[k][b][a] for k in range(m) for b in range(n)] for a in range(n)]
        span = canonical_basis(gens, n * m, None)
    else:
        gens = np.array([ad_matrix(alg, e).ravel() for e in np.eye(n)])
        span = canonical_basis([list(r) for r in gens], n * m, RANK_TOL)
    return _finish("inner", span, n * m, exact, m, n, flags=frozenset({"EXACT"} if exact else set()),
                   sample_description="image of ad on the coordinate basis of V")


# --------------------------------------------------------------------------
# almost inner derivations

def structured_points(dim_v: int, max_triple_dim: int = 12) -> list[np.ndarray]:
    """Signed basis combinations ``e_i``, ``e_i +- e_j``, ``e_i +- e_j +- e_k``.

    ``x`` and ``-x`` impose the same conditions, so the leading sign is fixed.
    Triples are only used for ``dim_v <= max_triple_dim``.
    """
    eye = np.eye(dim_v, dtype=int)
    pts = [e for e in eye]
    for i, j in itertools.combinations(range(dim_v), 2):
        for s in (1, -1):
            pts.append(eye[i] + s * eye[j])
    if dim_v <= max_triple_dim:
        for i, j, k in itertools.combinations(range(dim_v), 3):
            for s, t in itertools.product((1, -1), repeat=2):
                pts.append(eye[i] + s * eye[j] + t * eye[k])
    return pts


def random_rational_points(rng: np.random.Generator, dim_v: int, count: int,
                           num_bound: int = 5, max_den: int = 4) -> list[list[Fraction]]:
    nums = rng.integers(-num_bound, num_bound + 1, size=(count, dim_v))
    dens = rng.integers(1, max_den + 1, size=(count, dim_v))
    return [[Fraction(int(a), int(b)) for a, b in zip(nr, dr)] for nr, dr in zip(nums, dens)]


def _exact_kernel(J, x: list[Fraction], n: int, m: int) -> list[list[Fraction]]:
    # columns J_k x; K(x) = null space of the (n x m) matrix
    A = [[sum((J[k][i][j] * x[j] for j in range(n) if x[j]), Fraction(0)) for k in range(m)] for i in range(n)]
    return nullspace(A, m, None)


def constraint_rows_exact(alg: MetricTwoStepAlgebra, points) -> EchelonBasis:
    n, m = alg.dim_v, alg.dim_z
    J = alg.rational_stack()
    eb = EchelonBasis(n * m, None)
    for x in points:
        x = [Fraction(a) for a in x]
        if not any(x):
            continue
        for kv in _exact_kernel(J, x, n, m):
            eb.add([kv[k] * x[a] for k in range(m) for a in range(n)])
            if len(eb) == n * m:
                return eb
    return eb


def constraint_matrix_float(alg: MetricTwoStepAlgebra, X: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Rows ``k (x) x`` (Kronecker) for every ``x`` in ``X`` and ``k`` in a basis of ``K(x)``."""
    X = np.asarray(X, dtype=float)
    X = X[np.any(X != 0, axis=1)]
    if len(X) == 0:
        return np.zeros((0, alg.dim_z * alg.dim_v))
    P = kernel_map_batch(alg, X, tol)
    # P k-projector is enough: its rows span K(x); rank deficiency handled by SVD later
    rows = np.einsum("nkl,na->nkla", P, X).reshape(len(X) * alg.dim_z, alg.dim_z * alg.dim_v)
    return rows[np.linalg.norm(rows, axis=1) > 0]


def aid_residuals(alg: MetricTwoStepAlgebra, derivs, X: np.ndarray, tol: float = RANK_TOL,
                  normalize: bool = True) -> np.ndarray:
    """``max_phi |P_{K(x)} phi(x)|`` per row ``x`` of ``X``: distance of ``phi(x)`` to ``[x, V]``."""
    X = np.asarray(X, dtype=float)
    if normalize:
        nrm = np.linalg.norm(X, axis=1, keepdims=True)
        X = X / np.where(nrm == 0, 1.0, nrm)
    if len(X) == 0 or not derivs:
        return np.zeros(len(X))
    P = kernel_map_batch(alg, X, tol)
    out = np.zeros(len(X))
    for phi in derivs:
        fx = X @ phi.matrix.T
        out = np.maximum(out, np.linalg.norm(np.einsum("nkl,nl->nk", P, fx), axis=1))
    return out


def _null_rows_float(C: np.ndarray, ncols: int) -> list:
    if len(C) == 0:
        return [list(r) for r in np.eye(ncols)]
    N = float_nullspace(C, RANK_TOL)
    return [list(r) for r in N.T]


def almost_inner_space(alg: MetricTwoStepAlgebra, exact: bool = False, seed: int = 0,
                       n_random: int = 256, n_verify: int = 10_000) -> DerivationSpaceReport:
    """Derivations with ``phi(x)`` in ``[x, V]`` at every sampled ``x``.

    The sample is :func:`structured_points` plus ``n_random`` seeded rational
    points; the result is then checked on ``n_verify`` fresh random unit
    vectors.  The report is flagged SAMPLED, and CERTIFIED_BY_ORACLE when the
    fresh-point residual stays below ``1e-9``.
    """
    n, m = alg.dim_v, alg.dim_z
    rng = np.random.default_rng(seed)
    pts = structured_points(n)
    rpts = random_rational_points(rng, n, n_random)
    if exact:
        eb = constraint_rows_exact(alg, [list(p) for p in pts] + rpts)
        null = eb.nullspace()
    else:
        X = np.vstack([np.array(pts, dtype=float), np.array(rpts, dtype=float)])
        null = _null_rows_float(constraint_matrix_float(alg, X), n * m)
    desc = (f"{len(pts)} structured points (e_i, e_i+-e_j"
            f"{', e_i+-e_j+-e_k' if n <= 12 else ''}) + {n_random} seeded rational points; "
            f"verified on {n_verify} fresh random unit points")
    rep = _finish("almost_inner", null, n * m, exact, m, n, sample_description=desc)
    Y = np.random.default_rng([seed, 1]).standard_normal((n_verify, n))
    rep.residual_max = float(np.max(aid_residuals(alg, rep.basis, Y), initial=0.0))
    flags = {"SAMPLED"}
    if rep.residual_max <= 1e-9:
        flags.add("CERTIFIED_BY_ORACLE")
    if exact:
        flags.add("EXACT")
    rep.flags = frozenset(flags)
    inner = inner_derivation_space(alg)
    cont = max((rep.projection_residual(b) for b in inner.basis), default=0.0)
    rep.extra["inner_containment_residual"] = cont
    if cont > CONTAINMENT_TOL:
        raise RuntimeError(f"sampled almost-inner space misses inner derivations (residual {cont:.2e})")
    return rep


def lattice_points_v(alg: MetricTwoStepAlgebra, L: LatticeBasis, word_radius: int):
    """Distinct nonzero V-projections of enumerated lattice elements, and their words."""
    logs, words, _ = enumerate_arrays(alg, L, word_radius)
    V = logs[:, : alg.dim_v]
    keep = np.linalg.norm(V, axis=1) > 1e-12
    V, words = V[keep], words[keep]
    if len(V) == 0:
        return V, words
    _, idx = np.unique(np.round(V * 1e9).astype(np.int64), axis=0, return_index=True)
    idx = np.sort(idx)
    return V[idx], words[idx]


def gamma_almost_inner_space(alg: MetricTwoStepAlgebra, L: LatticeBasis, word_radius: int,
                             exact: bool = False) -> DerivationSpaceReport:
    """Derivations almost inner at every ``log gamma`` in the word ball of radius ``word_radius``.

    Since Z is central, ``[log gamma, N] = [pi_v(log gamma), V]`` and only the
    V-projections matter; they are integer combinations of the generators'
    V-parts, which keeps the exact mode exact.
    """
    n, m = alg.dim_v, alg.dim_z
    V, words = lattice_points_v(alg, L, word_radius)
    if exact:
        G = rational_generators(L)
        pts = [[sum((int(c) * G[i][a] for i, c in enumerate(w) if c), Fraction(0)) for a in range(n)]
               for w in words]
        null = constraint_rows_exact(alg, pts).nullspace()
    else:
        null = _null_rows_float(constraint_matrix_float(alg, V), n * m)
    rep = _finish("gamma_almost_inner", null, n * m, exact, m, n,
                  sample_description=f"{len(V)} distinct V-projections of lattice words, radius {word_radius}",
                  extra={"word_radius": word_radius})
    rep.residual_max = float(np.max(aid_residuals(alg, rep.basis, V, normalize=False), initial=0.0))
    rep.flags = frozenset({"SAMPLED"} | ({"EXACT"} if exact else set()))
    return rep


def gamma_aid_residual(alg: MetricTwoStepAlgebra, L: LatticeBasis, phi: DerivationVtoZ,
                       word_radius: int) -> float:
    """Largest distance of ``phi(log gamma)`` from ``[log gamma, N]`` over the word ball."""
    V, _ = lattice_points_v(alg, L, word_radius)
    return float(np.max(aid_residuals(alg, [phi], V, normalize=False), initial=0.0))


# --------------------------------------------------------------------------
# inner test and invariant decomposition

class InnerVerdict(NamedTuple):
    inner: bool
    xi: np.ndarray
    residual: float

    @property
    def kind(self) -> str:
        return "INNER" if self.inner else "NOT_INNER"


def is_inner(alg: MetricTwoStepAlgebra, phi: DerivationVtoZ, tol: float = 1e-9) -> InnerVerdict:
    """Least-squares solve of ``[xi, e_i] = phi(e_i)``; inner iff the residual is ``<= tol``.

    ``xi`` is the minimum-norm solution.
    """
    A = np.array([ad_matrix(alg, e).ravel() for e in np.eye(alg.dim_v)]).T
    xi, *_ = np.linalg.lstsq(A, phi.vec, rcond=None)
    res = float(np.linalg.norm(A @ xi - phi.vec))
    return InnerVerdict(res <= tol, xi, res)


def invariant_decomposition(alg: MetricTwoStepAlgebra, tol: float = 1e-10) -> list[np.ndarray]:
    """Split V into mutually orthogonal subspaces invariant under every ``J(z)``.

    Each block is the smallest J-invariant subspace containing a seed; seeds
    are the coordinate vectors, in order, projected off the blocks found so
    far.  Blocks are returned as matrices with orthonormal columns.
    """
    n = alg.dim_v
    J = alg.J
    blocks: list[np.ndarray] = []
    found = np.zeros((n, 0))

    def project_out(v, Q):
        for _ in range(2):
            v = v - Q @ (Q.T @ v)
        return v

    for e in np.eye(n):
        s = project_out(e, found)
        if np.linalg.norm(s) <= 1e-8:
            continue
        Q = (s / np.linalg.norm(s))[:, None]
        frontier = [Q[:, 0]]
        while frontier:
            q = frontier.pop()
            for Jk in J:
                w = project_out(Jk @ q, Q)
                nw = np.linalg.norm(w)
                if nw > tol * max(1.0, np.linalg.norm(Jk @ q)) and nw > 1e-12:
                    w = w / nw
                    Q = np.column_stack([Q, w])
                    frontier.append(w)
        blocks.append(Q)
        found = np.column_stack([found, Q])
        if found.shape[1] >= n:
            break
    return blocks


@dataclass
class DecompositionReport:
    orthogonality_residual: float
    bracket_residual: float
    invariance_residual: float
    total_dimension: int
    block_dimensions: list
    tol: float

    @property
    def orthogonal(self) -> bool:
        return self.orthogonality_residual <= self.tol

    @property
    def brackets_vanish(self) -> bool:
        return self.bracket_residual <= self.tol

    @property
    def invariant(self) -> bool:
        return self.invariance_residual <= self.tol

    @property
    def ok(self) -> bool:
        return self.orthogonal and self.brackets_vanish and self.invariant


def decomposition_properties(alg: MetricTwoStepAlgebra, blocks, tol: float = 1e-10) -> DecompositionReport:
    """Pairwise orthogonality, pairwise vanishing brackets and J-invariance of the blocks."""
    orth = brk = inv = 0.0
    for i, j in itertools.combinations(range(len(blocks)), 2):
        A, B = blocks[i], blocks[j]
        orth = max(orth, float(np.max(np.abs(A.T @ B), initial=0.0)))
        br = bracket_v(alg, A.T[:, None, :], B.T[None, :, :])
        brk = max(brk, float(np.max(np.abs(br), initial=0.0)))
    for Q in blocks:
        P = Q @ Q.T
        for Jk in alg.J:
            inv = max(inv, float(np.max(np.abs(Jk @ Q - P @ Jk @ Q), initial=0.0)))
    dims = [int(Q.shape[1]) for Q in blocks]
    return DecompositionReport(orth, brk, inv, sum(dims), dims, tol)
