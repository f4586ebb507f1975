import numpy as np
import pytest

_ACCEPTANCE = []


def random_density(rng, dim=4, rank=None):
    """Ginibre-ensemble density matrix."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_simplex(rng, n):
    e = rng.exponential(size=(n, 4))
    return e / e.sum(axis=1, keepdims=True)


def assert_density(rho, dim=None):
    rho = np.asarray(rho)
    if dim is not None:
        assert rho.shape == (dim, dim)
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho).min() >= -1e-10


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion():
    """Record one acceptance-criterion verdict and assert it."""

    def check(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, bool(passed), detail))
        assert passed, f"criterion {number} ({title}) failed: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] {number:>2}. {title}: {detail}")
