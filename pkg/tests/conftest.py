import numpy as np
import pytest

from entropic_ricci.families import complete, hypercube, random_reversible, torus, two_point, zero_range

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"acceptance {number} [{'PASS' if ok else 'FAIL'}] {title}"
    if detail:
        line += f" ({detail})"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SMALL_CHAINS = {
    "two_point": lambda: two_point(1.0, 1.0),
    "two_point_asym": lambda: two_point(0.7, 2.3),
    "complete4": lambda: complete(4),
    "torus5": lambda: torus(5),
    "hypercube3": lambda: hypercube(3),
    "zero_range23": lambda: zero_range(2, 3),
    "random8": lambda: random_reversible(8, 0.3, 1),
}


@pytest.fixture(params=sorted(SMALL_CHAINS))
def chain(request):
    return SMALL_CHAINS[request.param]()
