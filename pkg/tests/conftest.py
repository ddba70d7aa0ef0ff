import numpy as np
import pytest

from ns_spectra.experiments import SweepConfig, run_sweep
from ns_spectra.gaussian import GaussianSpec, Shape, generate

ACCEPTANCE_LINES = []


def record_criterion(label, passed, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def gaussian(rows, cols, seed):
    """Seeded N(0, 1) matrix of any orientation."""
    g = generate(GaussianSpec(Shape.tall(rows, cols), seed))
    return g if rows >= cols else g.T


def random_orthogonal(n, seed):
    q, r = np.linalg.qr(gaussian(n, n, seed))
    return q * np.sign(np.diag(r))


@pytest.fixture(scope="session")
def default_sweep():
    """The default desk-scale sweep: sizes 64..1024, 32 trials, 5 default steps."""
    return run_sweep(SweepConfig())
