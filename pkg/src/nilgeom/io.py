"""JSON readers and writers for algebras, lattices and derivations.

Algebra file::

    {"dim_v": n, "dim_z": m, "j_maps": [[[...], ...], ...], "label": "..."}

or, instead of ``j_maps``, ``"structure_constants": [{"i":, "j":, "k":, "c":}, ...]``
(0-based; ``[e_i, e_j] = c z_k``).  Matrix entries may be numbers or
``"p/q"`` strings.

Lattice file::

    {"generators": [{"v": [...], "z": [...]}, ...]}

Derivation file::

    {"matrix": [[...], ...]}      # dim_z rows, dim_v columns
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import catalog
from .algebra import AlgebraElement, MetricTwoStepAlgebra
from .derivations import DerivationVtoZ
from .lattice import LatticeBasis, standard_lattice
from .linalg import to_fraction


class InputError(ValueError):
    """A file is missing or does not follow the expected format."""


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as e:
        raise InputError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON ({e})") from e


def algebra_from_dict(d: dict) -> MetricTwoStepAlgebra:
    if not isinstance(d, dict):
        raise InputError("algebra description must be a JSON object")
    try:
        dim_v, dim_z = int(d["dim_v"]), int(d["dim_z"])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"algebra needs integer dim_v and dim_z ({e})") from e
    label = str(d.get("label", ""))
    try:
        if "j_maps" in d:
            maps = d["j_maps"]
            if len(maps) != dim_z or any(len(m) != dim_v or any(len(r) != dim_v for r in m) for m in maps):
                raise InputError(f"j_maps must be {dim_z} matrices of size {dim_v}x{dim_v}")
            rat = [[[to_fraction(a) for a in row] for row in m] for m in maps]
            alg = MetricTwoStepAlgebra.from_rational(rat, label=label)
            if dim_z == 0:
                alg = MetricTwoStepAlgebra(dim_v, 0, (), label)
            return alg
        if "structure_constants" in d:
            return MetricTwoStepAlgebra.from_structure_constants(dim_v, dim_z, d["structure_constants"], label)
    except InputError:
        raise
    except (TypeError, ValueError, KeyError, ZeroDivisionError) as e:
        raise InputError(f"malformed algebra description ({e})") from e
    raise InputError("algebra needs either j_maps or structure_constants")


def algebra_to_dict(alg: MetricTwoStepAlgebra) -> dict:
    if alg.rational_maps is not None:
        maps = [[[str(a) if a.denominator != 1 else int(a) for a in row] for row in m]
                for m in alg.rational_maps]
    else:
        maps = [m.tolist() for m in alg.j_maps]
    return {"dim_v": alg.dim_v, "dim_z": alg.dim_z, "j_maps": maps, "label": alg.label}


def load_algebra(ref: str) -> MetricTwoStepAlgebra:
    """A registry key (``heisenberg:2``) or a path to an algebra JSON file."""
    if catalog.is_builtin(ref) and not Path(ref).exists():
        try:
            return catalog.from_name(ref)
        except (ValueError, KeyError, ZeroDivisionError) as e:
            raise InputError(f"bad built-in algebra reference {ref!r}: {e}") from e
    return algebra_from_dict(_read_json(ref))


def save_algebra(alg: MetricTwoStepAlgebra, path) -> None:
    Path(path).write_text(json.dumps(algebra_to_dict(alg), indent=2) + "\n")


def lattice_from_dict(d: dict, alg: MetricTwoStepAlgebra) -> LatticeBasis:
    try:
        gens = []
        for g in d["generators"]:
            v = [float(to_fraction(a)) for a in g.get("v", [0] * alg.dim_v)]
            z = [float(to_fraction(a)) for a in g.get("z", [0] * alg.dim_z)]
            if len(v) != alg.dim_v or len(z) != alg.dim_z:
                raise InputError(f"generator {g} does not match dimensions ({alg.dim_v}, {alg.dim_z})")
            gens.append(AlgebraElement(np.array(v), np.array(z)))
    except InputError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise InputError(f"malformed lattice description ({e})") from e
    return LatticeBasis(tuple(gens))


def lattice_to_dict(L: LatticeBasis) -> dict:
    return {"generators": [{"v": g.v.tolist(), "z": g.z.tolist()} for g in L.generators]}


def load_lattice(ref: str, alg: MetricTwoStepAlgebra) -> LatticeBasis:
    """``standard`` (coordinate basis generators) or a path to a lattice JSON file."""
    if ref == "standard" and not Path(ref).exists():
        return standard_lattice(alg)
    return lattice_from_dict(_read_json(ref), alg)


def load_derivation(path, alg: MetricTwoStepAlgebra) -> DerivationVtoZ:
    d = _read_json(path)
    try:
        m = np.array([[float(to_fraction(a)) for a in row] for row in d["matrix"]])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed derivation file ({e})") from e
    if m.shape != (alg.dim_z, alg.dim_v):
        raise InputError(f"derivation matrix has shape {m.shape}, expected {(alg.dim_z, alg.dim_v)}")
    return DerivationVtoZ(m)
