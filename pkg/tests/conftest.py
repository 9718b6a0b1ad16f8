import numpy as np
import pytest

from dagmiqp.synth import NoiseSpec, make_instance


@pytest.fixture
def small_instance():
    return make_instance(4, 200, "er", 1, NoiseSpec(), 0)


def random_dag(rng, d, p=0.5):
    """Random DAG: forward pairs of a random permutation kept with probability p."""
    perm = rng.permutation(d)
    g = np.zeros((d, d), dtype=np.uint8)
    for a in range(d):
        for b in range(a + 1, d):
            if rng.random() < p:
                g[perm[a], perm[b]] = 1
    return g


# one "PASS/FAIL/SKIP Cn: ..." line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, ok: bool | None, detail: str) -> bool | None:
    """Record one criterion outcome; ``ok=None`` marks a skipped criterion."""
    label = "SKIP" if ok is None else "PASS" if ok else "FAIL"
    line = f"{label} C{number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
