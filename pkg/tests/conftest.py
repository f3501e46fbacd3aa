import hypothesis.strategies as st
import pytest
from hypothesis import settings

from mba.instance import MbaInstance

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@st.composite
def small_instances(draw, max_n=4, max_m=4, max_w=9, horizontal=True, min_n=1, min_m=1):
    """Random layered instances; with ``horizontal`` every layer keeps (i, i)
    so at least one partition exists."""
    n = draw(st.integers(min_n, max_n))
    m = draw(st.integers(min_m, max_m))
    w = draw(st.lists(st.lists(st.integers(0, max_w), min_size=m, max_size=m),
                      min_size=n, max_size=n))
    pairs = [(a, b) for a in range(n) for b in range(n)]
    arcs = []
    for _ in range(m - 1):
        chosen = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
        if horizontal:
            chosen |= {(i, i) for i in range(n)}
        arcs.append(sorted(chosen))
    return MbaInstance(w, arcs)


def complete_instance(weights):
    n, m = len(weights), len(weights[0])
    full = [(a, b) for a in range(n) for b in range(n)]
    return MbaInstance(weights, [full] * (m - 1))


@pytest.fixture
def two_by_two():
    """Complete 2x2 instance with first column (3, 1) and second column (4, 2)."""
    return complete_instance([[3, 4], [1, 2]])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
