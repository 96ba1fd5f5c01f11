from __future__ import annotations

import numpy as np
import pytest

from flsgd.grid import build_grid
from flsgd.kernels import KernelSpec
from flsgd.model import CommutingProfile, ModelInstance, build_operators, commuting_instance

# criterion number -> list of (sub-check, passed, detail)
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, name: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((name, bool(ok), detail))
    print(f"criterion {criterion} [{name}] {'PASS' if ok else 'FAIL'}: {detail}")
    return bool(ok)


@pytest.fixture(scope="session")
def grid65():
    return build_grid(65)


@pytest.fixture(scope="session")
def commuting(grid65) -> ModelInstance:
    """Cosine-series K and C with p = 2, 16 modes, theta = 1/2 plus a derived r = 1/2 source."""
    profile = CommutingProfile(2.0, 2.0, 16)
    g = np.arange(1, 17, dtype=float) ** -1.0
    return commuting_instance(grid65, profile, "prediction", 0.5, g, 0.5, extra_sources={"estimation": 0.5})


@pytest.fixture(scope="session")
def mixed_ops():
    """Non-commuting pair: gaussian K, brownian C."""
    return build_operators(KernelSpec.gaussian(0.2), KernelSpec.brownian(), build_grid(96, "composite-trapezoid"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        subs = ACCEPTANCE[num]
        ok = all(passed for _, passed, _ in subs)
        detail = "; ".join(f"{name}: {d}" if passed else f"{name} FAILED: {d}" for name, passed, d in subs)
        terminalreporter.write_line(f"criterion {num:>2d} {'PASS' if ok else 'FAIL'}  {detail}")
