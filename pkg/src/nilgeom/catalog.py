"""Named algebras used throughout the tests and the CLI registry.

Registry keys (accepted wherever an algebra reference is expected):

* ``heisenberg:n``        -- the (2n+1)-dimensional Heisenberg algebra,
  V basis ``x_1..x_n, y_1..y_n``.
* ``example-1.5:l1,l2``   -- two 4-dimensional quaternionic-type blocks scaled
  by ``l1`` and ``l2`` (alias ``two-block:l1,l2``); V = 8, Z = 2.
* ``example-2.14``        -- the 6-dimensional algebra with
  ``[X1,Y1] = [X2,Y2] = Z1, [X1,Y2] = Z2`` (alias ``six-dim``); V basis
  ordered ``X1, X2, Y1, Y2``.
* ``abelian:n,m``         -- all brackets zero.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .algebra import AlgebraElement, MetricTwoStepAlgebra
from .linalg import to_fraction


def heisenberg(n: int = 1) -> MetricTwoStepAlgebra:
    """``[x_i, y_i] = z``; V ordered ``x_1..x_n, y_1..y_n``."""
    consts = [(i, n + i, 0, 1) for i in range(n)]
    return MetricTwoStepAlgebra.from_structure_constants(2 * n, 1, consts, label=f"heisenberg:{n}")


def two_block(l1=1, l2=2) -> MetricTwoStepAlgebra:
    """Two blocks on ``X1..X4`` and ``X5..X8``; J(Z) has frequencies ``l1|Z|, l2|Z|``."""
    l1, l2 = to_fraction(l1), to_fraction(l2)
    z = Fraction(0)
    # J(Z) for Z = z1 Z1 + z2 Z2 is  J1 * z1 + J2 * z2  with these per-block patterns
    j1 = [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]]
    j2 = [[0, 0, 0, -1], [0, 0, 1, 0], [0, -1, 0, 0], [1, 0, 0, 0]]

    def blockdiag(pat):
        m = [[z] * 8 for _ in range(8)]
        for b, lam in ((0, l1), (4, l2)):
            for i in range(4):
                for j in range(4):
                    m[b + i][b + j] = lam * pat[i][j]
        return m

    return MetricTwoStepAlgebra.from_rational([blockdiag(j1), blockdiag(j2)],
                                              label=f"example-1.5:{l1},{l2}")


def six_dim() -> MetricTwoStepAlgebra:
    """V = (X1, X2, Y1, Y2), Z = (Z1, Z2)."""
    X1, X2, Y1, Y2 = range(4)
    consts = [(X1, Y1, 0, 1), (X2, Y2, 0, 1), (X1, Y2, 1, 1)]
    return MetricTwoStepAlgebra.from_structure_constants(4, 2, consts, label="example-2.14")


def abelian(n: int, m: int = 1) -> MetricTwoStepAlgebra:
    zero = [[0] * n for _ in range(n)]
    if m == 0:
        return MetricTwoStepAlgebra(n, 0, (), label=f"abelian:{n},0")
    return MetricTwoStepAlgebra.from_rational([zero] * m, label=f"abelian:{n},{m}")


def random_rational_algebra(rng: np.random.Generator, dim_v: int, dim_z: int,
                            denominator: int = 2, bound: int = 2) -> MetricTwoStepAlgebra:
    """Skew maps with entries ``p/denominator`` in ``[-bound, bound]``."""
    maps = []
    for _ in range(dim_z):
        num = rng.integers(-bound * denominator, bound * denominator + 1, size=(dim_v, dim_v))
        m = [[Fraction(0)] * dim_v for _ in range(dim_v)]
        for i in range(dim_v):
            for j in range(i + 1, dim_v):
                m[i][j] = Fraction(int(num[i, j]), denominator)
                m[j][i] = -m[i][j]
        maps.append(m)
    return MetricTwoStepAlgebra.from_rational(maps, label=f"random:{dim_v},{dim_z}")


def random_block_algebra(rng: np.random.Generator, block_dims, dim_z: int) -> MetricTwoStepAlgebra:
    """Orthogonal direct sum of random blocks, then a random coordinate permutation."""
    dim_v = sum(block_dims)
    maps = np.zeros((dim_z, dim_v, dim_v), dtype=object)
    maps[...] = Fraction(0)
    start = 0
    for d in block_dims:
        blk = random_rational_algebra(rng, d, dim_z)
        for k in range(dim_z):
            for i in range(d):
                for j in range(d):
                    maps[k, start + i, start + j] = blk.rational_maps[k][i][j]
        start += d
    perm = rng.permutation(dim_v)
    maps = maps[:, perm][:, :, perm]
    return MetricTwoStepAlgebra.from_rational(maps.tolist(), label=f"random-blocks:{list(block_dims)}")


def basis_element(alg: MetricTwoStepAlgebra, index: int) -> AlgebraElement:
    """``index < dim_v`` selects a V basis vector, otherwise a Z basis vector."""
    w = np.zeros(alg.dim)
    w[index] = 1.0
    return AlgebraElement.from_vector(w, alg.dim_v)


def from_name(name: str) -> MetricTwoStepAlgebra:
    """Look up a registry key such as ``heisenberg:2`` or ``example-1.5:1,3``."""
    key, _, arg = name.partition(":")
    args = [a for a in arg.split(",") if a.strip()] if arg else []
    if key == "heisenberg":
        return heisenberg(int(args[0]) if args else 1)
    if key in ("example-1.5", "two-block"):
        if len(args) not in (0, 2):
            raise ValueError(f"{key} takes two parameters l1,l2")
        return two_block(*args) if args else two_block()
    if key in ("example-2.14", "six-dim"):
        return six_dim()
    if key == "abelian":
        n = int(args[0]) if args else 2
        m = int(args[1]) if len(args) > 1 else 1
        return abelian(n, m)
    raise KeyError(f"unknown built-in algebra {name!r}")


def is_builtin(name: str) -> bool:
    return name.partition(":")[0] in {"heisenberg", "example-1.5", "two-block",
                                      "example-2.14", "six-dim", "abelian"}
