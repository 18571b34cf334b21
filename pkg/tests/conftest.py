import numpy as np
import pytest

from cct.data import NoiseSpec, gen_gaussian_clusters, inject_noise, split


def central_diff(f, theta, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at flat vector ``theta``."""
    theta = np.asarray(theta, dtype=np.float64)
    g = np.empty_like(theta)
    for i in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        g[i] = (f(tp) - f(tm)) / (2 * h)
    return g


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)


def random_simplex(rng, n, c, concentration=4.0):
    # concentration > 1 keeps entries away from 0, where finite differences break down
    return rng.dirichlet(np.full(c, concentration), size=n)


@pytest.fixture(scope="session")
def noisy_splits():
    ds = gen_gaussian_clusters(4, 2, 150, 0.35, seed=11)
    tr, va, te = split(ds, (4 / 6, 1 / 6, 1 / 6), seed=11)
    tr = inject_noise(tr, NoiseSpec("symmetric", 0.4, seed=11))
    return tr, va, te


ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Log one acceptance line; the terminal summary prints them all, pass or fail."""
    def _record(criterion, passed, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}".rstrip())
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
