"""``nilgeom`` command line.

Exit codes: 0 success, 1 deformation family not isospectral, 2 unreadable or
malformed input, 3 input outside the domain (e.g. non-unit velocity),
4 missing input that the command needs (a lattice), 5 a precondition
residual is too large (derivation not almost inner on the lattice).
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
from fractions import Fraction

import numpy as np

from .algebra import AlgebraElement, DimensionError, GroupPointExp, PreconditionError, validate
from .deformations import isospectral_family, length_spectrum, write_spectrum_csv
from .derivations import (
    DerivationVtoZ,
    almost_inner_space,
    gamma_almost_inner_space,
    inner_derivation_space,
)
from .geodesics import (
    UNIT_TOL,
    ClosedFormGeodesic,
    GeodesicInitial,
    geodesic_ode_oracle,
    point_distance,
)
from .io import InputError, load_algebra, load_derivation, load_lattice
from .lattice import enumerate_group_elements, write_enumeration_csv
from .spectral import classify

DEFAULT_SEED = 0x5EED
EXIT_OK, EXIT_NOT_EQUAL, EXIT_PARSE, EXIT_DOMAIN, EXIT_MISSING, EXIT_PRECONDITION = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _algebra(args):
    if not args.algebra:
        raise CliError(EXIT_PARSE, "--algebra is required")
    return load_algebra(args.algebra)


def _lattice(args, alg, needed_for: str):
    if not args.lattice:
        raise CliError(EXIT_MISSING, f"{needed_for} needs a lattice (--lattice FILE or --lattice standard)")
    return load_lattice(args.lattice, alg)


def _positive(x: str) -> float:
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def _t_values(s: str) -> list[float]:
    try:
        return [float(Fraction(p.strip())) for p in s.split(",") if p.strip()]
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"bad t list {s!r}") from e


# --------------------------------------------------------------------------
# commands

def cmd_classify(args) -> int:
    alg = _algebra(args)
    kw = {"tol": args.tol} if args.tol else {}
    rep = classify(alg, seed=args.seed, **kw)
    with _output(args.out) as fh:
        fh.write(_dump(rep.to_dict()))
    return EXIT_OK


def cmd_validate(args) -> int:
    alg = _algebra(args)
    rep = validate(alg, args.tol or 1e-12, seed=args.seed)
    with _output(args.out) as fh:
        fh.write(_dump(rep.to_dict()))
    return EXIT_OK if rep.ok else EXIT_DOMAIN


def _parse_u(row, alg, i):
    u = row.get("u")
    if isinstance(u, dict):
        v, z = u.get("v", []), u.get("z", [])
    elif isinstance(u, list):
        if len(u) != alg.dim:
            raise CliError(EXIT_PARSE, f"row {i}: u has length {len(u)}, expected {alg.dim}")
        v, z = u[: alg.dim_v], u[alg.dim_v:]
    else:
        raise CliError(EXIT_PARSE, f"row {i}: missing u")
    v, z = np.asarray(v, dtype=float), np.asarray(z, dtype=float)
    if v.shape != (alg.dim_v,) or z.shape != (alg.dim_z,):
        raise CliError(EXIT_PARSE, f"row {i}: u does not match dimensions ({alg.dim_v}, {alg.dim_z})")
    return AlgebraElement(v, z)


def _parse_base(row, alg, i):
    b = row.get("base")
    if b is None:
        return GroupPointExp.identity(alg)
    try:
        if isinstance(b, dict):
            return GroupPointExp(np.asarray(b.get("x", np.zeros(alg.dim_v)), dtype=float),
                                 np.asarray(b.get("z", np.zeros(alg.dim_z)), dtype=float))
        b = np.asarray(b, dtype=float)
        return GroupPointExp(b[: alg.dim_v], b[alg.dim_v:])
    except (TypeError, ValueError) as e:
        raise CliError(EXIT_PARSE, f"row {i}: bad base ({e})") from e


def cmd_geodesic(args) -> int:
    default_alg = load_algebra(args.algebra) if args.algebra else None
    cache = {}
    try:
        src = sys.stdin if args.requests == "-" else open(args.requests)
    except OSError as e:
        raise CliError(EXIT_PARSE, f"cannot read requests: {e}") from e
    lines = [ln for ln in src.read().splitlines() if ln.strip()]
    if src is not sys.stdin:
        src.close()
    out_rows, max_dev, max_printed = [], 0.0, 0.0
    for i, line in enumerate(lines):
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            raise CliError(EXIT_PARSE, f"row {i}: malformed JSON ({e})") from e
        ref = row.get("algebra_ref")
        if ref is not None:
            if ref not in cache:
                cache[ref] = load_algebra(ref)
            alg = cache[ref]
        elif default_alg is not None:
            alg = default_alg
        else:
            raise CliError(EXIT_PARSE, f"row {i}: no algebra_ref and no --algebra")
        u = _parse_u(row, alg, i)
        n = u.norm()
        if abs(n - 1.0) > UNIT_TOL:
            raise CliError(EXIT_DOMAIN, f"row {i}: initial velocity is not a unit vector (|u| = {n!r})")
        t_list = [float(t) for t in row.get("t_list", [])]
        if not t_list:
            continue
        init = GeodesicInitial(_parse_base(row, alg, i), u)
        geo = ClosedFormGeodesic(alg, init)
        printed = ClosedFormGeodesic(alg, init, variant="printed")
        pts = [geo(t) for t in t_list]
        diag = {"branch": geo.branch}
        refs = pts
        if args.oracle:
            refs = [geodesic_ode_oracle(alg, init, t) for t in t_list]
            dev = max(point_distance(p, q) for p, q in zip(pts, refs))
            diag["oracle_points"] = [q.as_vector().tolist() for q in refs]
            diag["oracle_max_deviation"] = dev
            max_dev = max(max_dev, dev)
        pdev = max(point_distance(printed(t), q) for t, q in zip(t_list, refs))
        diag["printed_formula_deviation"] = pdev
        max_printed = max(max_printed, pdev)
        out_rows.append({
            "row": i,
            "t_list": t_list,
            "points": [p.as_vector().tolist() for p in pts],
            "velocities": [geo.velocity(t).as_vector().tolist() for t in t_list],
            "diagnostics": diag,
        })
    with _output(args.out) as fh:
        for r in out_rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    if args.oracle:
        print(f"max_oracle_deviation={max_dev:.3e}", file=sys.stderr)
    if out_rows:
        print(f"max_printed_formula_deviation={max_printed:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_derivations(args) -> int:
    alg = _algebra(args)
    want_gamma = args.gamma or bool(args.lattice)
    L = _lattice(args, alg, "the lattice almost-inner space") if want_gamma else None
    inner = inner_derivation_space(alg, exact=args.exact)
    aid = almost_inner_space(alg, exact=args.exact, seed=args.seed)
    n, m = alg.dim_v, alg.dim_z
    report = {
        "algebra": alg.label,
        "seed": args.seed,
        "inner": inner.to_dict(m, n),
        "almost_inner": aid.to_dict(m, n),
    }
    line = f"inner={inner.dimension} aid={aid.dimension}"
    if L is not None:
        gaid = gamma_almost_inner_space(alg, L, args.radius, exact=args.exact)
        report["gamma_almost_inner"] = gaid.to_dict(m, n)
        line += f" gamma_aid={gaid.dimension}"
    print(line)
    if args.out:
        with _output(args.out) as fh:
            fh.write(_dump(report))
    return EXIT_OK


def cmd_deform(args) -> int:
    alg = _algebra(args)
    L = _lattice(args, alg, "deform")
    if args.phi:
        phi = load_derivation(args.phi, alg)
    elif args.derivation_index is not None:
        space = gamma_almost_inner_space(alg, L, args.radius, exact=args.exact)
        basis = space.echelon_basis
        if not 0 <= args.derivation_index < len(basis):
            raise CliError(EXIT_DOMAIN, f"derivation index {args.derivation_index} out of range "
                                        f"(space has dimension {len(basis)})")
        phi = DerivationVtoZ.from_vec([float(a) for a in basis[args.derivation_index]], alg.dim_z, alg.dim_v)
    else:
        raise CliError(EXIT_PARSE, "deform needs --phi FILE or --derivation-index I")
    rep = isospectral_family(alg, L, phi, args.t, word_radius=args.radius, tol=args.tol or 1e-9)
    d = rep.to_dict()
    d["algebra"] = alg.label
    d["seed"] = args.seed
    with _output(args.out) as fh:
        fh.write(_dump(d))
    print(f"{rep.label} " + " ".join(f"t={m.t:g}:{m.comparison.kind}" for m in rep.members), file=sys.stderr)
    return EXIT_OK if rep.all_equal else EXIT_NOT_EQUAL


def cmd_enumerate(args) -> int:
    alg = _algebra(args)
    L = _lattice(args, alg, "enumerate")
    els = enumerate_group_elements(alg, L, args.radius, symmetric=args.symmetric)
    with _output(args.out) as fh:
        write_enumeration_csv(els, fh, alg.dim_v)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    alg = _algebra(args)
    L = _lattice(args, alg, "spectrum")
    spec = length_spectrum(alg, L, args.radius)
    with _output(args.out) as fh:
        write_spectrum_csv(spec, fh)
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--algebra", help="algebra JSON file or built-in name (heisenberg:2, example-2.14, ...)")
    common.add_argument("--lattice", help="lattice JSON file or 'standard'")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    common.add_argument("--tol", type=_positive, default=None)
    common.add_argument("--radius", type=int, default=2, help="word radius for lattice computations")
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--exact", action="store_true", help="exact rational arithmetic where available")

    p = argparse.ArgumentParser(prog="nilgeom", description="Geometry of 2-step nilmanifolds.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common], help="J(z) spectral predicates").set_defaults(func=cmd_classify)
    sub.add_parser("validate", parents=[common], help="check skew-symmetry of the J maps").set_defaults(
        func=cmd_validate)
    g = sub.add_parser("geodesic", parents=[common], help="evaluate geodesics from JSON-lines requests")
    g.add_argument("--requests", default="-", help="JSON-lines request file (default: standard input)")
    g.add_argument("--oracle", action="store_true", help="cross-check every point against RK4")
    g.set_defaults(func=cmd_geodesic)
    d = sub.add_parser("derivations", parents=[common], help="inner / almost inner derivation spaces")
    d.add_argument("--gamma", action="store_true", help="also compute the lattice almost-inner space")
    d.set_defaults(func=cmd_derivations)
    f = sub.add_parser("deform", parents=[common], help="isospectral family Id + t phi")
    f.add_argument("--phi", help="derivation JSON file")
    f.add_argument("--derivation-index", type=int, help="index into the lattice almost-inner echelon basis")
    f.add_argument("--t", type=_t_values, default=[0.25, 0.5], help="comma separated t values, e.g. 1/4,1/2")
    f.set_defaults(func=cmd_deform)
    e = sub.add_parser("enumerate", parents=[common], help="lattice words as CSV")
    e.add_argument("--symmetric", action="store_true", help="add inverses of all words")
    e.set_defaults(func=cmd_enumerate)
    sub.add_parser("spectrum", parents=[common], help="length spectrum as CSV").set_defaults(func=cmd_spectrum)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"nilgeom: {e}", file=sys.stderr)
        return e.code
    except (InputError, DimensionError) as e:
        print(f"nilgeom: {e}", file=sys.stderr)
        return EXIT_PARSE
    except PreconditionError as e:
        print(f"nilgeom: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
