import numpy as np
import pytest

from conftest import assert_density, random_density
from qpa.errors import DomainError
from qpa.noise_models import (
    KINDS,
    PLACEMENTS,
    SIDES,
    NoiseSpec,
    apply_local_noise,
    noisy_iterate,
    plateau_scan,
    werner,
)
from qpa.qpa_map import step_identical
from qpa.quantum_core import I2, X, Z, bell_diagonal_to_density, density_to_bell_diagonal

STRENGTHS = np.round(np.arange(0, 0.0501, 0.005), 4)


def kraus_channel(rho, ops, q):
    """Reference: apply a single-qubit channel by explicit Kraus operators."""
    out = np.zeros_like(rho)
    for k in ops:
        big = np.kron(k, I2) if q == 0 else np.kron(I2, k)
        out = out + big @ rho @ big.conj().T
    return out


def kraus_ops(kind, p):
    if kind == "depolarizing":
        # (1-p) rho + p I/2 x tr_q rho == sum of the four Paulis with weights 1-3p/4, p/4
        y = 1j * X @ Z
        return [np.sqrt(1 - 3 * p / 4) * I2] + [np.sqrt(p / 4) * s for s in (X, y, Z)]
    pauli = X if kind == "bit-flip" else Z
    return [np.sqrt(1 - p) * I2, np.sqrt(p) * pauli]


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("sides", SIDES)
def test_channel_matches_kraus_form(rng, kind, sides):
    rho = random_density(rng)
    spec = NoiseSpec(kind, 0.13, "before-step", sides)
    expected = rho
    for q in spec.qubits:
        expected = kraus_channel(expected, kraus_ops(kind, 0.13), q)
    got = apply_local_noise(rho, spec)
    assert np.max(np.abs(got - expected)) < 1e-14
    assert_density((got + got.conj().T) / 2, 4)


def test_bell_diagonal_closed(rng):
    for kind in KINDS:
        rho = bell_diagonal_to_density(rng.dirichlet(np.ones(4)))
        out = apply_local_noise(rho, NoiseSpec(kind, 0.3))
        bd = density_to_bell_diagonal(out)
        assert np.max(np.abs(bell_diagonal_to_density(bd) - out)) < 1e-14


def test_depolarizing_werner_closed_form():
    # depolarizing both qubits by p leaves Werner with F' = 1/4 + (1-p)^2 (F - 1/4)
    for f in (0.6, 0.75, 0.9):
        out = density_to_bell_diagonal(apply_local_noise(bell_diagonal_to_density(werner(f)), NoiseSpec("depolarizing", 0.2)))
        assert out.a == pytest.approx(0.25 + 0.64 * (f - 0.25), abs=1e-14)


def test_zero_noise_equals_perfect_map():
    bd = werner(0.7)
    for placement in PLACEMENTS:
        traj = noisy_iterate(bd, NoiseSpec("depolarizing", 0.0, placement), 12)
        clean, cur = [bd.a], bd
        for _ in range(12):
            cur = step_identical(cur).state
            clean.append(cur.a)
        assert traj.fidelities == pytest.approx(clean, abs=1e-15)


def test_full_depolarizing_is_not_purifying():
    traj = noisy_iterate(werner(0.9), NoiseSpec("depolarizing", 1.0), 10)
    assert traj.plateau == pytest.approx(0.25, abs=1e-12) and not traj.purifying
    traj = noisy_iterate(werner(0.9), NoiseSpec("depolarizing", 0.5), 50)
    assert not traj.purifying


def test_small_noise_plateau():
    traj = noisy_iterate(werner(0.75), NoiseSpec("depolarizing", 0.01), 50)
    assert traj.purifying
    assert 0.98 < traj.plateau < 1.0
    assert not traj.converged


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("placement", PLACEMENTS)
@pytest.mark.parametrize("sides", SIDES)
def test_plateau_non_increasing_in_strength(kind, placement, sides):
    scan = plateau_scan(werner(0.75), STRENGTHS, 50, kind, placement, sides)
    vals = [v for _, v in scan]
    assert vals[0] == pytest.approx(1.0, abs=1e-6)
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_spec_validation():
    with pytest.raises(DomainError):
        NoiseSpec("amplitude", 0.1)
    with pytest.raises(DomainError):
        NoiseSpec("depolarizing", 1.5)
    with pytest.raises(DomainError):
        NoiseSpec(placement="during")
    with pytest.raises(DomainError):
        NoiseSpec(sides="eve")
    with pytest.raises(DomainError):
        noisy_iterate(werner(0.7), NoiseSpec(), 0)


def test_noisy_eve_entropy_measurement():
    from qpa.circuit_oracle import eve_step_entropy
    from qpa.noise_models import noisy_eve_entropy

    clean = noisy_eve_entropy(werner(0.75), NoiseSpec("depolarizing", 0.0), 3)
    b, a, _ = eve_step_entropy(werner(0.75))
    assert clean[0] == pytest.approx((b, a), abs=1e-10)
    assert all(after < before for before, after in clean)
    noisy = noisy_eve_entropy(werner(0.75), NoiseSpec("depolarizing", 0.02, "both"), 6)
    assert len(noisy) == 6
    # at the noise plateau the entropy stays bounded away from zero
    assert noisy[-1][1] > clean[-1][1]
