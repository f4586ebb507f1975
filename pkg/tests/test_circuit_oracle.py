import numpy as np
import pytest
from scipy.linalg import expm

from conftest import assert_density, random_density, random_simplex
from qpa.circuit_oracle import (
    EVE_WIRES,
    PAIR_WIRES,
    MultiQubitState,
    alice_rotation,
    bell_pair_joint,
    bob_rotation,
    cnot,
    eve_joint_state,
    eve_step_entropy,
    oracle_step_bell_diagonal,
    oracle_step_correlated,
    purification,
    qpa_circuit_step,
    round_unitary,
)
from qpa.errors import DomainError, PostSelectionError
from qpa.qpa_map import step_identical, step_joint
from qpa.quantum_core import (
    BELL_BASIS,
    X,
    bell_coefficients,
    bell_diagonal_to_density,
    bell_states,
    density_to_bell_diagonal,
    ket,
    partial_trace,
    projector,
    shannon_entropy,
    werner,
)


def bell_diag(rho):
    return np.real(np.diag(bell_coefficients(rho)))


class TestGates:
    def test_alice_on_zero(self):
        assert np.allclose(alice_rotation() @ ket("0"), (ket("0") - 1j * ket("1")) / np.sqrt(2))
        assert np.allclose(alice_rotation() @ ket("1"), (ket("1") - 1j * ket("0")) / np.sqrt(2))

    def test_bob_inverts_alice(self):
        assert np.allclose(bob_rotation() @ alice_rotation(), np.eye(2), atol=1e-15)
        assert np.allclose(bob_rotation() @ ket("0"), (ket("0") + 1j * ket("1")) / np.sqrt(2))

    def test_rotations_about_x(self):
        assert np.allclose(alice_rotation(), expm(-1j * np.pi / 4 * X), atol=1e-14)
        assert np.allclose(bob_rotation(), expm(1j * np.pi / 4 * X), atol=1e-14)

    def test_cnot_examples(self):
        u = cnot(2, 0, 1)
        assert np.allclose(u @ ket("10"), ket("11"))
        assert np.allclose(u @ ket("00"), ket("00"))
        plus = (ket("0") + ket("1")) / np.sqrt(2)
        assert np.allclose(u @ np.kron(plus, ket("0")), bell_states()[0])

    def test_cnot_on_wider_register(self):
        u = cnot(4, 1, 3)
        assert np.allclose(u @ ket("0100"), ket("0101"))
        assert np.allclose(u @ ket("1010"), ket("1010"))

    def test_cnot_validation(self):
        with pytest.raises(DomainError):
            cnot(2, 1, 1)
        with pytest.raises(DomainError):
            cnot(2, 0, 2)

    @pytest.mark.parametrize("u", [round_unitary(), cnot(4, 0, 2), cnot(8, 3, 6)])
    def test_unitarity(self, u):
        assert np.max(np.abs(u.conj().T @ u - np.eye(len(u)))) < 1e-12


class TestCircuitStep:
    def test_bell_pairs(self):
        phi = projector(bell_states()[0])
        surv, prob = qpa_circuit_step(np.kron(phi, phi))
        assert prob == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(surv, phi, atol=1e-12)

    def test_werner_075(self):
        rho = bell_diagonal_to_density(werner(0.75))
        surv, prob = qpa_circuit_step(np.kron(rho, rho))
        assert prob == pytest.approx(0.722222, abs=1e-6)
        assert bell_diag(surv) == pytest.approx((0.788462, 0.019231, 0.019231, 0.173077), abs=1e-6)
        assert_density((surv + surv.conj().T) / 2, 4)

    def test_maximally_mixed(self):
        surv, prob = qpa_circuit_step(np.eye(16) / 16)
        assert prob == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(surv, np.eye(4) / 4, atol=1e-12)

    def test_pure_and_mixed_paths_agree(self, rng):
        psi = rng.normal(size=64) + 1j * rng.normal(size=64)
        psi /= np.linalg.norm(psi)
        a, pa = qpa_circuit_step(psi)
        b, pb = qpa_circuit_step(np.outer(psi, psi.conj()))
        assert np.allclose(a, b, atol=1e-12) and pa == pytest.approx(pb, abs=1e-12)

    def test_impossible_postselection(self):
        # phi+ controls with psi+ targets never coincide
        rho = np.kron(projector(bell_states()[0]), projector(bell_states()[2]))
        with pytest.raises(PostSelectionError):
            qpa_circuit_step(rho)

    def test_needs_four_qubits(self):
        with pytest.raises(DomainError):
            qpa_circuit_step(np.eye(4) / 4)


class TestOracleBellDiagonal:
    def test_examples(self):
        out = oracle_step_bell_diagonal((1, 0, 0, 0))
        assert tuple(out.state) == pytest.approx((1, 0, 0, 0), abs=1e-12)
        assert out.success_prob == pytest.approx(1.0, abs=1e-12)
        out = oracle_step_bell_diagonal((0.55, 0.15, 0.15, 0.15))
        assert tuple(out.state) == pytest.approx((0.560345, 0.077586, 0.077586, 0.284483), abs=1e-6)
        assert out.success_prob == pytest.approx(0.58, abs=1e-12)

    def test_equivalence_with_analytic_map(self, rng):
        for w in random_simplex(rng, 100):
            a, o = step_identical(w), oracle_step_bell_diagonal(w)
            assert np.max(np.abs(a.state.as_array() - o.state.as_array())) < 1e-12
            assert abs(a.success_prob - o.success_prob) < 1e-12

    def test_output_depends_only_on_bell_diagonal(self, rng):
        # product of two copies of a generic (non Bell-diagonal) state
        for _ in range(20):
            rho = random_density(rng)
            surv, prob = qpa_circuit_step(np.kron(rho, rho))
            ana = step_identical(density_to_bell_diagonal(rho))
            assert bell_diag(surv) == pytest.approx(ana.state.as_array().tolist(), abs=1e-12)
            assert prob == pytest.approx(ana.success_prob, abs=1e-12)


class TestOracleCorrelated:
    def test_product_input(self):
        bd = (0.55, 0.15, 0.15, 0.15)
        rho = bell_diagonal_to_density(bd)
        surv, prob = oracle_step_correlated(np.kron(rho, rho))
        ref = oracle_step_bell_diagonal(bd)
        assert bell_diag(surv) == pytest.approx(ref.state.as_array().tolist(), abs=1e-12)
        assert prob == pytest.approx(ref.success_prob, abs=1e-12)

    def test_correlated_mixture_follows_joint_label_table(self):
        w = np.zeros((4, 4))
        w[0, 0] = w[1, 1] = 0.5
        surv, prob = oracle_step_correlated(bell_pair_joint(w))
        joint = step_joint(w)
        assert bell_diag(surv) == pytest.approx(joint.state.as_array().tolist(), abs=1e-12)
        assert prob == pytest.approx(joint.success_prob, abs=1e-12)
        # perfectly correlated partners purify completely; the marginal-only map does not apply
        assert bell_diag(surv) == pytest.approx([1, 0, 0, 0], abs=1e-12)
        marginal = step_identical((0.5, 0.5, 0, 0))
        assert tuple(marginal.state) == pytest.approx((0.5, 0, 0, 0.5))

    def test_uniform_classical_correlation(self):
        surv, prob = oracle_step_correlated(bell_pair_joint(np.eye(4) / 4))
        assert bell_diag(surv) == pytest.approx([0.5, 0, 0.5, 0], abs=1e-12)
        assert prob == pytest.approx(1.0, abs=1e-12)
        assert step_joint(np.eye(4) / 4).success_prob == pytest.approx(1.0)

    def test_random_pairing_restores_marginal_map(self, rng):
        # uncorrelated labels with cross-pair coherences still give the marginal map
        for w in random_simplex(rng, 10):
            base = bell_pair_joint(np.outer(w, w))
            b2 = np.kron(BELL_BASIS, BELL_BASIS)
            v1, v2 = b2[0], b2[5]  # |phi+ phi+>, |psi- psi->
            eps = 0.5 * np.sqrt(base[0, 0].real * 0 + (w[0] * w[0]) * (w[1] * w[1]))
            coh = eps * (np.outer(v1, v2.conj()) + np.outer(v2, v1.conj()))
            rho = base + coh
            assert np.linalg.eigvalsh(rho).min() > -1e-12
            surv, prob = oracle_step_correlated(rho)
            ana = step_identical(w)
            assert bell_diag(surv) == pytest.approx(ana.state.as_array().tolist(), abs=1e-12)
            assert prob == pytest.approx(ana.success_prob, abs=1e-12)

    def test_general_joint_state(self, rng):
        b2 = np.kron(BELL_BASIS, BELL_BASIS)
        for _ in range(10):
            rho = random_density(rng, 16)
            table = np.real(np.diag(b2.conj() @ rho @ b2.T)).reshape(4, 4)
            surv, prob = qpa_circuit_step(rho)
            joint = step_joint(table)
            assert bell_diag(surv) == pytest.approx(joint.state.as_array().tolist(), abs=1e-12)
            assert prob == pytest.approx(joint.success_prob, abs=1e-12)

    def test_rejects_unequal_pairs(self):
        rho = np.kron(bell_diagonal_to_density(werner(0.9)), bell_diagonal_to_density(werner(0.6)))
        with pytest.raises(DomainError):
            oracle_step_correlated(rho)


class TestEve:
    def test_purification_reduces_to_pair_state(self, rng):
        for w in random_simplex(rng, 20):
            psi = purification(w)
            red = partial_trace(projector(psi), [0, 1])
            assert np.max(np.abs(red - bell_diagonal_to_density(w))) < 1e-12

    def test_joint_state_labels(self):
        st = eve_joint_state(werner(0.8))
        assert st.labels == PAIR_WIRES + EVE_WIRES and st.n_qubits == 8 and st.is_pure
        red = partial_trace(projector(st.data), [2, 3])
        assert np.max(np.abs(red - bell_diagonal_to_density(werner(0.8)))) < 1e-12

    def test_pure_input(self):
        before, after, prob = eve_step_entropy((1, 0, 0, 0))
        assert abs(before) < 1e-12 and abs(after) < 1e-12 and abs(prob - 1) < 1e-12

    def test_werner_055(self):
        bd = (0.55, 0.15, 0.15, 0.15)
        before, after, prob = eve_step_entropy(bd)
        assert before == pytest.approx(shannon_entropy(bd), abs=1e-12)
        assert before == pytest.approx(1.182514, abs=1e-6)
        # the surviving pair is Bell-diagonal with the recurrence's weights
        expected = shannon_entropy(step_identical(bd).state.as_array())
        assert after == pytest.approx(expected, abs=1e-10)
        assert after == pytest.approx(1.078849, abs=1e-6)
        assert prob == pytest.approx(0.58, abs=1e-12)

    @pytest.mark.parametrize("f", [0.6, 0.75, 0.9])
    def test_werner_entropy_decreases(self, f):
        before, after, _ = eve_step_entropy(werner(f))
        assert after < before

    def test_entropy_after_matches_recurrence(self, rng):
        for w in random_simplex(rng, 5):
            _, after, prob = eve_step_entropy(w)
            ana = step_identical(w)
            assert after == pytest.approx(shannon_entropy(ana.state.as_array()), abs=1e-9)
            assert prob == pytest.approx(ana.success_prob, abs=1e-12)


def test_multiqubit_state_validation():
    with pytest.raises(DomainError):
        MultiQubitState(np.ones(16) / 4, ("a", "b", "c"))
    with pytest.raises(DomainError):
        MultiQubitState(np.ones(16) / 4, ("a", "a", "b", "c"))
    with pytest.raises(DomainError):
        MultiQubitState(np.ones(16), PAIR_WIRES)
    assert MultiQubitState(np.eye(16) / 16, PAIR_WIRES).n_qubits == 4
