"""Lattices (uniform discrete subgroups) given by generators in the Lie algebra.

A lattice is stored as elements ``b_1..b_k`` of ``N`` with ``exp(b_i)``
generating it.  Group elements are enumerated as ordered words
``exp(n_1 b_1) ... exp(n_k b_k)`` with ``|n_i| <= radius``; their logarithms
follow from repeated BCH products.  Integer spans of the ``b_i`` are not used,
since ``log Gamma`` is generally not closed under addition.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .algebra import AlgebraElement, MetricTwoStepAlgebra, bracket_v, multiply_coords
from .linalg import to_fraction
from .spectral import rational_approximation

DEDUP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    generators: tuple
    rational: bool = False
    denom_bound: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))

    @classmethod
    def from_vectors(cls, vectors, dim_v: int) -> "LatticeBasis":
        return cls(tuple(AlgebraElement.from_vector(w, dim_v) for w in np.atleast_2d(vectors)))

    def as_array(self) -> np.ndarray:
        if not self.generators:
            return np.zeros((0, 0))
        return np.array([g.as_vector() for g in self.generators])

    def __len__(self) -> int:
        return len(self.generators)


def standard_lattice(alg: MetricTwoStepAlgebra) -> LatticeBasis:
    """Generators ``exp(e_i)`` for the coordinate basis of ``N``."""
    return LatticeBasis.from_vectors(np.eye(alg.dim), alg.dim_v)


@dataclass
class LatticeReport:
    issues: list = field(default_factory=list)
    central_indices: list = field(default_factory=list)
    bracket_coordinates: dict = field(default_factory=dict)  # (i, j) -> [Fraction]
    max_rational_residual: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.issues

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "issues": list(self.issues),
            "central_generators": list(self.central_indices),
            "bracket_coordinates": {f"{i},{j}": [str(c) for c in cs]
                                    for (i, j), cs in sorted(self.bracket_coordinates.items())},
            "max_rational_residual": self.max_rational_residual,
        }


def central_indices(alg: MetricTwoStepAlgebra, L: LatticeBasis, tol: float = 1e-10) -> list[int]:
    return [i for i, g in enumerate(L.generators) if np.linalg.norm(g.v) <= tol]


def validate_lattice(alg: MetricTwoStepAlgebra, L: LatticeBasis, denom_bound: int = 64,
                     tol: float = 1e-9) -> LatticeReport:
    """Necessary conditions for ``exp(b_i)`` to generate a uniform lattice.

    * the V-projections of the generators span V;
    * the central generators span Z;
    * every bracket ``[b_i, b_j]`` is a rational combination (denominator at
      most ``denom_bound``) of the central generators.
    """
    rep = LatticeReport()
    if any(len(g.v) != alg.dim_v or len(g.z) != alg.dim_z for g in L.generators):
        rep.issues.append("generator dimensions do not match the algebra")
        return rep
    B = L.as_array()
    if len(B) == 0:
        rep.issues.append("no generators")
        return rep
    V = B[:, : alg.dim_v]
    if np.linalg.matrix_rank(V, tol=tol) < alg.dim_v:
        rep.issues.append(f"V-projections have rank {np.linalg.matrix_rank(V, tol=tol)} < dim_v={alg.dim_v}")
    cen = central_indices(alg, L)
    rep.central_indices = cen
    C = B[cen, alg.dim_v:].T if cen else np.zeros((alg.dim_z, 0))
    crank = np.linalg.matrix_rank(C, tol=tol) if cen else 0
    if crank < alg.dim_z:
        rep.issues.append(f"central generators have rank {crank} < dim_z={alg.dim_z}")
        return rep
    for i, j in itertools.combinations(range(len(B)), 2):
        br = bracket_v(alg, V[i], V[j])
        y, *_ = np.linalg.lstsq(C, br, rcond=None)
        span_res = float(np.linalg.norm(C @ y - br))
        coords = []
        for c in y:
            f = rational_approximation(float(c), denom_bound, tol)
            if f is None:
                rep.issues.append(f"bracket [b{i}, b{j}] has non-rational central coordinate {c!r}")
                f = Fraction(float(c)).limit_denominator(denom_bound)
            rep.max_rational_residual = max(rep.max_rational_residual, abs(float(f) - c))
            coords.append(f)
        if span_res > tol:
            rep.issues.append(f"bracket [b{i}, b{j}] is not in the central span (residual {span_res:.2e})")
        if any(coords):
            rep.bracket_coordinates[(i, j)] = coords
    return rep


def certify(alg: MetricTwoStepAlgebra, L: LatticeBasis, denom_bound: int = 64) -> LatticeBasis:
    """Copy of ``L`` with the rationality flag set from :func:`validate_lattice`."""
    rep = validate_lattice(alg, L, denom_bound)
    return LatticeBasis(L.generators, rep.ok, denom_bound)


class LatticeElement(NamedTuple):
    log: AlgebraElement
    word: tuple  # exponents (n_1..n_k) in generator order
    inverted: bool = False  # True: the element is the inverse of that word

    def word_string(self) -> str:
        s = " ".join(str(n) for n in self.word)
        return f"inv({s})" if self.inverted else s


def word_logs(alg: MetricTwoStepAlgebra, L: LatticeBasis, words: np.ndarray) -> np.ndarray:
    """``log(exp(n_1 b_1) ... exp(n_k b_k))`` for each row of ``words``."""
    B = L.as_array()
    words = np.atleast_2d(np.asarray(words, dtype=float))
    W = np.zeros((len(words), alg.dim))
    for i in range(len(B)):
        W = multiply_coords(alg, W, words[:, i:i + 1] * B[i])
    return W


def _dedup_first(keys: np.ndarray) -> np.ndarray:
    """Indices of first occurrences of each distinct row, in original order."""
    if len(keys) == 0:
        return np.zeros(0, dtype=int)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return np.sort(idx)


def enumerate_arrays(alg: MetricTwoStepAlgebra, L: LatticeBasis, word_radius: int,
                     symmetric: bool = False, tol: float = DEDUP_TOL):
    """Array form of :func:`enumerate_group_elements`: ``(logs, words, inverted)``."""
    k = len(L)
    if word_radius <= 0 or k == 0:
        return np.zeros((0, alg.dim)), np.zeros((0, k), dtype=int), np.zeros(0, dtype=bool)
    r = np.arange(-word_radius, word_radius + 1)
    words = np.stack(np.meshgrid(*([r] * k), indexing="ij"), axis=-1).reshape(-1, k)
    logs = word_logs(alg, L, words)
    inverted = np.zeros(len(words), dtype=bool)
    if symmetric:
        logs = np.vstack([logs, -logs])
        words = np.vstack([words, words])
        inverted = np.concatenate([inverted, ~inverted])
    nontrivial = np.max(np.abs(logs), axis=1) > tol
    logs, words, inverted = logs[nontrivial], words[nontrivial], inverted[nontrivial]
    keys = np.round(logs / tol).astype(np.int64)
    idx = _dedup_first(keys)
    return logs[idx], words[idx], inverted[idx]


def enumerate_group_elements(alg: MetricTwoStepAlgebra, L: LatticeBasis, word_radius: int,
                             symmetric: bool = False, tol: float = DEDUP_TOL) -> list[LatticeElement]:
    """Nontrivial elements ``exp(n_1 b_1) ... exp(n_k b_k)``, ``|n_i| <= word_radius``.

    Elements are deduplicated on their log-coordinates (to ``tol``) keeping
    the first word in lexicographic order.  With ``symmetric=True`` the
    inverses of all words are added as well, so the result is closed under
    ``log -> -log``.
    """
    logs, words, inv = enumerate_arrays(alg, L, word_radius, symmetric, tol)
    return [LatticeElement(AlgebraElement.from_vector(w, alg.dim_v), tuple(int(n) for n in wd), bool(f))
            for w, wd, f in zip(logs, words, inv)]


def write_enumeration_csv(elements, path_or_file, dim_v: int) -> None:
    """CSV with columns ``word, v0.., z0..``."""
    import csv

    def rows():
        for el in elements:
            yield [el.word_string()] + [repr(float(a)) for a in el.log.v] + [repr(float(a)) for a in el.log.z]

    def header(n_z):
        return ["word"] + [f"v{i}" for i in range(dim_v)] + [f"z{i}" for i in range(n_z)]

    n_z = len(elements[0].log.z) if elements else 0
    if hasattr(path_or_file, "write"):
        w = csv.writer(path_or_file, lineterminator="\n")
        w.writerow(header(n_z))
        w.writerows(rows())
    else:
        with open(path_or_file, "w", newline="") as fh:
            write_enumeration_csv(elements, fh, dim_v)


# --------------------------------------------------------------------------
# direction approximation

class DirectionApproximation(NamedTuple):
    found: bool
    k: int | None
    xi: AlgebraElement | None
    central_norm: float | None


def _lift(alg: MetricTwoStepAlgebra, L: LatticeBasis, v: np.ndarray, tol: float, max_radius: int = 4):
    """An element of ``log Gamma`` whose V-part is ``v``, or None."""
    B = L.as_array()
    cen = set(central_indices(alg, L))
    nc = [i for i in range(len(B)) if i not in cen]
    Bv = B[nc, : alg.dim_v].T
    n, *_ = np.linalg.lstsq(Bv, v, rcond=None)
    if np.linalg.norm(Bv @ n - v) <= tol and np.all(np.abs(n - np.round(n)) <= tol):
        word = np.zeros(len(B))
        word[nc] = np.round(n)
        return word_logs(alg, L, word[None, :])[0]
    for r in range(1, max_radius + 1):
        logs, _, _ = enumerate_arrays(alg, L, r)
        hit = np.flatnonzero(np.max(np.abs(logs[:, : alg.dim_v] - v), axis=1) <= tol)
        if hit.size:
            return logs[hit[0]]
    return None


def approximate_direction(alg: MetricTwoStepAlgebra, L: LatticeBasis, v, eps: float,
                          k_max: int = 64, tol: float = 1e-9) -> DirectionApproximation:
    """Find ``xi = k v + z0`` in ``log Gamma`` with ``|z0| < eps`` and ``1 <= k <= k_max``.

    A lift ``w = v + z_v`` of ``v`` gives ``exp(w)^k = exp(k w)``; the central
    part ``k z_v`` is then reduced by the central lattice, searching the
    integer box of width one around the real least-squares coordinates.
    Such ``k`` always exists for some bound, so NOT_FOUND only means
    ``k_max`` was too small.
    """
    v = np.asarray(v, dtype=float)
    w = _lift(alg, L, v, tol)
    if w is None:
        raise ValueError("v is not the V-projection of a lattice element")
    B = L.as_array()
    cen = central_indices(alg, L)
    C = B[cen, alg.dim_v:].T
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=len(cen))))
    for k in range(1, k_max + 1):
        zk = k * w[alg.dim_v:]
        y0, *_ = np.linalg.lstsq(C, -zk, rcond=None)
        cands = np.round(y0) + offsets
        z0 = zk + cands @ C.T
        norms = np.linalg.norm(z0, axis=1)
        best = int(np.argmin(norms))
        if norms[best] < eps:
            xi = AlgebraElement(k * v, z0[best])
            return DirectionApproximation(True, k, xi, float(norms[best]))
    return DirectionApproximation(False, None, None, None)


def rational_generators(L: LatticeBasis) -> list[list[Fraction]]:
    return [[to_fraction(a) for a in g.as_vector()] for g in L.generators]
