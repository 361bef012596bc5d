import numpy as np
import pytest

from pdgbs.config import ExperimentConfig
from pdgbs.model import haar_random_unitary


def make_cfg(K=3, M=2, r=0.6, eta_t=0.85, eta_ind=0.6, **kw):
    return ExperimentConfig.from_eta_t(K, M, r, eta_t, eta_ind=eta_ind, **kw)


@pytest.fixture
def small():
    cfg = make_cfg()
    return cfg, haar_random_unitary(cfg.K, 5)


def random_pd(rng, n, complex_=False):
    A = rng.standard_normal((n, n))
    if complex_:
        A = A + 1j * rng.standard_normal((n, n))
    return A @ A.conj().T + 0.5 * np.eye(n)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}


def record(number: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)
    print(f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"{n:2d}. {'PASS' if passed else 'FAIL'}  {title}: {detail}")
