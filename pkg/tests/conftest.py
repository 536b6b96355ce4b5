import numpy as np
import pytest

from sloccgen.detlike import Statistics
from sloccgen.scheme import Scheme


def random_scheme(rng: np.random.Generator, n: int, stats, density: float = 0.6) -> Scheme:
    """Random normalized scheme; each qubit keeps a random subset of (region, spin) slots."""
    a = rng.normal(size=(n, n, 2)) + 1j * rng.normal(size=(n, n, 2))
    mask = rng.random((n, n, 2)) < density
    for q in range(n):
        if not mask[q].any():
            mask[q, rng.integers(n), rng.integers(2)] = True
    a = np.where(mask, a, 0)
    a /= np.linalg.norm(a.reshape(n, -1), axis=1)[:, None, None]
    return Scheme.from_array(a, Statistics.parse(stats), f"random-{n}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Acceptance results, filled in by tests/test_acceptance.py and echoed at the end of the run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
