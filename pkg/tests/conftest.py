import numpy as np
import pytest

from csrecon import (
    DEFAULT_GRID,
    MultiCube,
    forward_capture,
    generate_flat_top_bank,
    normalize_peak,
    synthetic_scene,
)


def naive_kron(a, b):
    """Elementwise Kronecker product, independent of numpy.kron."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros((a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(b.shape[0]):
                for l in range(b.shape[1]):
                    out[i * b.shape[0] + k, j * b.shape[1] + l] = a[i, j] * b[k, l]
    return out


def random_spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


@pytest.fixture(scope="session")
def bank():
    return generate_flat_top_bank(DEFAULT_GRID, 9, 3.0)


@pytest.fixture(scope="session")
def scene32():
    return synthetic_scene(32, 32, n_regions=5, seed=3)


@pytest.fixture(scope="session")
def capture32(scene32, bank):
    """Peak-normalized clean capture and the matching scaled filter bank."""
    cap, scale = normalize_peak(forward_capture(scene32, bank))
    return cap, bank.scaled(scale)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def constant_multicube(value, h, w, m=1):
    return MultiCube(np.full((h, w, m), float(value)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
