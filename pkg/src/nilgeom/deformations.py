"""Almost inner automorphisms ``Id + t phi``, deformed lattices and length spectra.

The length spectrum here is the multiset of ``(omega*, |v*|)`` over a fixed
word ball of the lattice: ``omega*`` is the longest closed geodesic in the free
homotopy class of ``gamma`` and ``|v*|`` a lower bound for all of them.  An
automorphism maps the word ball of ``Gamma`` onto the word ball of its image
lattice, so comparing balls of equal radius compares like with like.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .algebra import AlgebraElement, MetricTwoStepAlgebra, PreconditionError
from .derivations import DerivationVtoZ, InnerVerdict, gamma_aid_residual, is_inner
from .lattice import LatticeBasis, enumerate_arrays, validate_lattice
from .spectral import kernel_map_batch

SPECTRUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AIAutomorphismParam:
    """The automorphism with differential ``e^{t phi} = Id + t phi``."""

    phi: DerivationVtoZ
    t: float

    def __call__(self, w: AlgebraElement) -> AlgebraElement:
        return apply_automorphism(self, w)


def apply_automorphism(param: AIAutomorphismParam, w: AlgebraElement) -> AlgebraElement:
    """``w + t phi(w)``: the V-part is untouched, the Z-part shifts by ``t M w.v``."""
    return AlgebraElement(w.v, w.z + float(param.t) * param.phi(w.v))


def deform_lattice(alg: MetricTwoStepAlgebra, L: LatticeBasis, param: AIAutomorphismParam,
                   denom_bound: int = 64) -> LatticeBasis:
    """Image lattice ``Phi_t(Gamma)``, generator by generator.

    Raises ``PreconditionError`` if the image fails lattice validation.
    """
    gens = tuple(apply_automorphism(param, g) for g in L.generators)
    out = LatticeBasis(gens, L.rational, L.denom_bound)
    rep = validate_lattice(alg, out, denom_bound)
    if not rep.ok:
        raise PreconditionError("deformed lattice is invalid: " + "; ".join(rep.issues))
    return LatticeBasis(gens, True, denom_bound)


class SpectrumEntry(NamedTuple):
    omega_star: float
    lower: float
    word: tuple


@dataclass(frozen=True)
class LengthSpectrum:
    entries: tuple
    radius: int
    tol: float = SPECTRUM_TOL

    def __len__(self) -> int:
        return len(self.entries)

    def pairs(self) -> np.ndarray:
        return np.array([(e.omega_star, e.lower) for e in self.entries]).reshape(-1, 2)

    def digest(self, decimals: int = 8) -> str:
        """SHA-256 of the sorted, rounded ``(omega*, lower)`` list."""
        p = np.round(self.pairs(), decimals) + 0.0  # +0.0 folds -0.0
        p = p[np.lexsort((p[:, 1], p[:, 0]))] if len(p) else p
        payload = json.dumps([[repr(float(a)), repr(float(b))] for a, b in p])
        return hashlib.sha256(payload.encode()).hexdigest()


def length_spectrum(alg: MetricTwoStepAlgebra, L: LatticeBasis, word_radius: int,
                    tol: float = SPECTRUM_TOL) -> LengthSpectrum:
    """``(omega*, |v*|, word)`` for every nontrivial element of the word ball.

    No conjugacy-class reduction; entries are sorted by ``omega*``, then
    ``|v*|``, then word.
    """
    logs, words, _ = enumerate_arrays(alg, L, word_radius)
    if len(logs) == 0:
        return LengthSpectrum((), word_radius, tol)
    V, Z = logs[:, : alg.dim_v], logs[:, alg.dim_v:]
    # K(v*) only depends on v*: compute one projector per distinct V-part
    keys = np.round(V * 1e9).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    first = np.zeros(len(uniq), dtype=int)
    first[inverse[::-1]] = np.arange(len(V))[::-1]
    P = kernel_map_batch(alg, V[first])[inverse]
    zss = np.einsum("nkl,nl->nk", P, Z)
    lower = np.linalg.norm(V, axis=1)
    omega = np.sqrt(lower**2 + np.sum(zss**2, axis=1))
    entries = [SpectrumEntry(float(o), float(lw), tuple(int(n) for n in w))
               for o, lw, w in zip(omega, lower, words)]
    entries.sort(key=lambda e: (e.omega_star, e.lower, e.word))
    return LengthSpectrum(tuple(entries), word_radius, tol)


class SpectrumComparison(NamedTuple):
    equal: bool
    first_divergence: dict | None

    @property
    def kind(self) -> str:
        return "EQUAL" if self.equal else "DIFFER"


def compare_spectra(s1: LengthSpectrum, s2: LengthSpectrum, tol: float = SPECTRUM_TOL) -> SpectrumComparison:
    """Multiset equality of ``(omega*, lower)`` pairs up to ``tol``.

    Values are pooled and chained into clusters of ``omega*`` within ``tol``;
    inside each cluster both sides must contribute equally many entries whose
    sorted ``lower`` values agree to ``tol``.
    """
    if s1.radius != s2.radius:
        raise ValueError(f"spectra computed at different radii ({s1.radius} vs {s2.radius})")
    a, b = s1.pairs(), s2.pairs()
    if len(a) != len(b):
        return SpectrumComparison(False, {"reason": "size", "sizes": [len(a), len(b)]})
    tagged = sorted([(o, lw, 0) for o, lw in a] + [(o, lw, 1) for o, lw in b])
    start = 0
    for i in range(1, len(tagged) + 1):
        if i < len(tagged) and tagged[i][0] - tagged[i - 1][0] <= tol:
            continue
        cluster = tagged[start:i]
        la = sorted(lw for _, lw, s in cluster if s == 0)
        lb = sorted(lw for _, lw, s in cluster if s == 1)
        bad = len(la) != len(lb) or any(abs(x - y) > tol for x, y in zip(la, lb))
        if bad:
            return SpectrumComparison(False, {
                "reason": "cluster mismatch",
                "omega_star": cluster[0][0],
                "counts": [len(la), len(lb)],
                "lower_first": la[:3],
                "lower_second": lb[:3],
            })
        start = i
    return SpectrumComparison(True, None)


@dataclass
class FamilyMember:
    t: float
    lattice: LatticeBasis
    spectrum: LengthSpectrum
    comparison: SpectrumComparison


@dataclass
class FamilyReport:
    phi: DerivationVtoZ
    inner: InnerVerdict
    members: list = field(default_factory=list)
    gamma_aid_residual: float = 0.0
    word_radius: int = 0
    base_spectrum: LengthSpectrum | None = None

    @property
    def label(self) -> str:
        return "TRIVIAL" if self.inner.inner else "NONTRIVIAL"

    @property
    def all_equal(self) -> bool:
        return all(m.comparison.equal for m in self.members)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "inner_verdict": self.inner.kind,
            "inner_residual": self.inner.residual,
            "phi": self.phi.matrix.tolist(),
            "gamma_aid_residual": self.gamma_aid_residual,
            "word_radius": self.word_radius,
            "base_spectrum_digest": self.base_spectrum.digest() if self.base_spectrum else None,
            "base_spectrum_size": len(self.base_spectrum) if self.base_spectrum else 0,
            "all_equal": self.all_equal,
            "members": [
                {
                    "t": m.t,
                    "spectrum_digest": m.spectrum.digest(),
                    "comparison": m.comparison.kind,
                    "first_divergence": m.comparison.first_divergence,
                    "generators": [g.as_vector().tolist() for g in m.lattice.generators],
                }
                for m in self.members
            ],
        }


def isospectral_family(alg: MetricTwoStepAlgebra, L: LatticeBasis, phi: DerivationVtoZ, t_list,
                       word_radius: int = 2, tol: float = SPECTRUM_TOL,
                       residual_tol: float = 1e-9) -> FamilyReport:
    """Deform ``L`` by ``Id + t phi`` for each ``t`` and compare length spectra with ``t = 0``.

    ``phi`` must be almost inner on the word ball (residual ``<= residual_tol``),
    otherwise ``PreconditionError``.  The family is NONTRIVIAL exactly when
    ``phi`` is not inner.
    """
    res = gamma_aid_residual(alg, L, phi, word_radius)
    if res > residual_tol:
        raise PreconditionError(f"derivation is not almost inner on the lattice (residual {res:.3e})")
    base = length_spectrum(alg, L, word_radius, tol)
    rep = FamilyReport(phi, is_inner(alg, phi), gamma_aid_residual=res,
                       word_radius=word_radius, base_spectrum=base)
    for t in t_list:
        t = float(Fraction(t)) if isinstance(t, str) else float(t)
        Lt = deform_lattice(alg, L, AIAutomorphismParam(phi, t))
        st = length_spectrum(alg, Lt, word_radius, tol)
        rep.members.append(FamilyMember(t, Lt, st, compare_spectra(base, st, tol)))
    return rep


def write_spectrum_csv(spec: LengthSpectrum, fh) -> None:
    import csv

    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["word", "lower", "omega_star"])
    for e in spec.entries:
        w.writerow([" ".join(str(n) for n in e.word), repr(e.lower), repr(e.omega_star)])
