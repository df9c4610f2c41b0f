from __future__ import annotations

import numpy as np
import pytest

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}
ACCEPTANCE_TITLES = {
    1: "six-dimensional example: inner=4, almost inner=6 (exact)",
    2: "two-block example: frequencies and resonance classes",
    3: "Heisenberg algebras: special-case formula, closed form, RK4",
    4: "random algebras: closed form vs RK4, RK4 order",
    5: "conservation: unit speed, orthogonal rotations, flow composition",
    6: "closed geodesic witnesses on lattice elements",
    7: "isospectral deformation: spectra equal, shear control differs",
    8: "invariant decomposition residuals and block sizes",
    9: "CLI determinism: byte-identical reports",
}


@pytest.fixture
def record_criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS[number] = (bool(ok), detail)
        assert ok, f"criterion {number} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        if n in ACCEPTANCE_RESULTS:
            ok, detail = ACCEPTANCE_RESULTS[n]
            terminalreporter.write_line(f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} [{detail}]")
        else:
            terminalreporter.write_line(f"criterion {n} FAIL: {title} [not run or raised before reporting]")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
