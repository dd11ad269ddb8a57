import sys
from pathlib import Path

import numpy as np
import pytest

from carnotcc import Domain, heisenberg_distribution, martinet_distribution, euclidean_distribution

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def cube3():
    return Domain.cube(3, 1.0, 16)


@pytest.fixture
def heis():
    return heisenberg_distribution()


@pytest.fixture
def martinet():
    return martinet_distribution()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["euclidean:3", "heisenberg", "martinet"])
def builtin3(request):
    from carnotcc import resolve_distribution

    return resolve_distribution(request.param)


@pytest.fixture
def euclid2():
    return euclidean_distribution(2)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record the verdict of one acceptance criterion for the end-of-run summary."""

    def record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
