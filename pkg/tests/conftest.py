import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fnslab.initial import random_band_limited, single_mode, taylor_green
from fnslab.spectral import GridSpec

settings.register_profile(
    "fnslab",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("fnslab")


@pytest.fixture(scope="session")
def grid8():
    return GridSpec(8)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16)


@pytest.fixture(scope="session")
def tg16(grid16):
    return taylor_green(grid16)


@pytest.fixture(scope="session")
def random16(grid16):
    return random_band_limited(grid16, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cos_x1(grid):
    """u = (cos x1, 0, 0); not divergence free but a clean norm oracle."""
    x = grid.points()
    return np.stack([np.cos(x[0]), np.zeros_like(x[0]), np.zeros_like(x[0])])


@pytest.fixture
def shear_mode(grid16):
    return single_mode(grid16, (1, 0, 0), 1.0, (0.0, 1.0, 0.0))


# acceptance sub-check outcomes: criterion -> list of (ok, detail)
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(number, []).append((bool(ok), detail))
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        ok = all(c[0] for c in checks)
        details = "; ".join(("" if c[0] else "FAILED ") + c[1] for c in checks)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {details}")
