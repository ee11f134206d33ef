import numpy as np
import pytest

from varinfer.model import InnovationSpec, VarSample


def make_sample(series):
    return VarSample(np.asarray(series, dtype=float), InnovationSpec(), 0, 0)


@pytest.fixture
def sample_factory():
    def build(n=40, p=3, seed=0, heavy=False):
        rng = np.random.default_rng(seed)
        z = rng.standard_t(3, (n + 1, p)) if heavy else rng.standard_normal((n + 1, p))
        return make_sample(z)

    return build


ACCEPTANCE = {}


def record(number, title, ok, detail):
    ACCEPTANCE[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
