import numpy as np
import pytest

from mwunmf import _backend
from mwunmf.objective import FactorPair


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_pair(rng, n, r, m, low=0.0, high=1.0, signed=False):
    return FactorPair(rng.uniform(low, high, (n, r)), rng.uniform(low, high, (r, m)), signed=signed)


def random_shapes(rng, count, max_nm=6, max_r=3):
    for _ in range(count):
        yield int(rng.integers(1, max_nm + 1)), int(rng.integers(1, max_r + 1)), int(rng.integers(1, max_nm + 1))


ACCEPTANCE = {}


def record_acceptance(number, title, ok, detail):
    ACCEPTANCE[number] = (title, ok, detail)
    print(f"acceptance {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
