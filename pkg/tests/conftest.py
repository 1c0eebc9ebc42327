import numpy as np
import pytest

from cmsign.harness import draw_frame, make_problem


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_problem(rng, scheme="qam16", n=16, n_f=0, oversampling=4):
    return make_problem(draw_frame(rng, scheme, n), scheme, n_f, oversampling)


ACCEPTANCE_LINES = []


def record_criterion(label: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
