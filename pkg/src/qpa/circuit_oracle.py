"""Gate-level simulation of one purification round.

Wire order is fixed: [alice_control, bob_control, alice_target, bob_target]
followed by any Eve ancillas.  Pair 1 (wires 0, 1) supplies the controls and
pair 2 (wires 2, 3) the targets; targets are measured in the computational
basis and the control pair is kept when the two outcomes coincide.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, PostSelectionError
from .qpa_map import StepOutcome
from .quantum_core import (
    BELL_BASIS,
    as_bell_diagonal,
    bell_diagonal_to_density,
    check_density,
    density_to_bell_diagonal,
    partial_trace,
    shannon_entropy,
    von_neumann_entropy,
)

PAIR_WIRES = ("alice_control", "bob_control", "alice_target", "bob_target")
EVE_WIRES = ("eve_1", "eve_2", "eve_3", "eve_4")
MIN_SUCCESS_PROB = 1e-15
# target outcomes 00 and 11 as indices of the (alice_target, bob_target) block
_COINCIDE = [0, 3]


@dataclass
class MultiQubitState:
    """Dense state vector or density matrix with one role label per qubit."""

    data: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        dim = self.data.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise DomainError(f"dimension {dim} is not a power of two")
        if self.data.ndim == 2 and self.data.shape != (dim, dim):
            raise DomainError(f"density matrix must be square, got {self.data.shape}")
        if self.data.ndim not in (1, 2):
            raise DomainError("state must be a vector or a matrix")
        n = dim.bit_length() - 1
        if n > 8:
            raise DomainError("at most 8 qubits are supported")
        if len(self.labels) != n or len(set(self.labels)) != n:
            raise DomainError(f"labels {self.labels} do not partition {n} qubits")
        if self.is_pure:
            if abs(np.linalg.norm(self.data) - 1) > 1e-12:
                raise DomainError("state vector is not normalised")
        else:
            check_density(self.data)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def n_qubits(self) -> int:
        return len(self.labels)


def alice_rotation() -> np.ndarray:
    """|0> -> (|0> - i|1>)/sqrt2, |1> -> (|1> - i|0>)/sqrt2; a pi/2 x-rotation."""
    return np.array([[1, -1j], [-1j, 1]], dtype=complex) / np.sqrt(2)


def bob_rotation() -> np.ndarray:
    """Inverse of :func:`alice_rotation`."""
    return np.array([[1, 1j], [1j, 1]], dtype=complex) / np.sqrt(2)


def cnot(n: int, control: int, target: int) -> np.ndarray:
    """Permutation matrix of a controlled-NOT on ``n`` qubits (qubit 0 = MSB)."""
    if control == target:
        raise DomainError("control and target must differ")
    if not (0 <= control < n and 0 <= target < n):
        raise DomainError(f"wires ({control}, {target}) out of range for {n} qubits")
    dim = 2**n
    idx = np.arange(dim)
    cbit = (idx >> (n - 1 - control)) & 1
    dest = idx ^ (cbit << (n - 1 - target))
    u = np.zeros((dim, dim))
    u[dest, idx] = 1.0
    return u


def kron_all(*ops) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


@lru_cache(maxsize=1)
def _round_unitary() -> np.ndarray:
    a, b = alice_rotation(), bob_rotation()
    local = kron_all(a, b, a, b)
    u = cnot(4, 1, 3) @ cnot(4, 0, 2) @ local
    u.setflags(write=False)
    return u


def round_unitary() -> np.ndarray:
    """16x16 unitary of the rotations followed by both bilateral CNOTs."""
    return _round_unitary().copy()


def _as_state(joint) -> MultiQubitState:
    if isinstance(joint, MultiQubitState):
        return joint
    arr = np.asarray(joint, dtype=complex)
    n = arr.shape[0].bit_length() - 1
    labels = PAIR_WIRES + tuple(f"ancilla_{k}" for k in range(n - 4))
    return MultiQubitState(arr, labels[:n] if n >= 4 else labels)


def _postselect_pure(psi: np.ndarray) -> tuple[np.ndarray, float]:
    """Apply the round to a state vector and project targets onto coincidence.

    Returns the normalised projected vector, shaped (4 control, 2 outcomes, rest).
    """
    rest = psi.size // 16
    out = (_round_unitary() @ psi.reshape(16, rest)).reshape(4, 4, rest)[:, _COINCIDE, :]
    prob = float(np.vdot(out, out).real)
    if prob < MIN_SUCCESS_PROB:
        raise PostSelectionError("coincident target outcomes have zero probability", best=prob)
    return out / np.sqrt(prob), prob


def qpa_circuit_step(joint) -> tuple[np.ndarray, float]:
    """Run one round on a two-pair state (optionally with ancillas after wire 3).

    ``joint`` is a density matrix or state vector over at least four qubits.
    Returns the renormalised 4x4 state of the control pair given coinciding
    target outcomes, and the probability of that coincidence.
    """
    state = _as_state(joint)
    if state.n_qubits < 4:
        raise DomainError("the round needs at least four qubits")
    if state.is_pure:
        out, prob = _postselect_pure(state.data)
        m = out.reshape(4, -1)
        return m @ m.conj().T, prob

    rest = state.data.shape[0] // 16
    u = np.kron(_round_unitary(), np.eye(rest))
    rho = (u @ state.data @ u.conj().T).reshape(4, 4, rest, 4, 4, rest)
    kept = rho[:, _COINCIDE][:, :, :, :, _COINCIDE]
    surv = np.einsum("iakjak->ij", kept)
    prob = float(np.trace(surv).real)
    if prob < MIN_SUCCESS_PROB:
        raise PostSelectionError("coincident target outcomes have zero probability", best=prob)
    return surv / prob, prob


def oracle_step_bell_diagonal(bd) -> StepOutcome:
    """Product of two identical Bell-diagonal pairs pushed through the 16x16 circuit."""
    rho = bell_diagonal_to_density(bd)
    surv, prob = qpa_circuit_step(np.kron(rho, rho))
    return StepOutcome(density_to_bell_diagonal(_hermitize(surv)), prob)


def oracle_step_correlated(joint16) -> tuple[np.ndarray, float]:
    """Run the circuit on an arbitrary (possibly correlated) two-pair density matrix.

    The two reduced pairs must have equal Bell diagonals.
    """
    rho = check_density(joint16, "joint16")
    if rho.shape != (16, 16):
        raise DomainError(f"expected a 16x16 density matrix, got {rho.shape}")
    first = density_to_bell_diagonal(_hermitize(partial_trace(rho, [0, 1])))
    second = density_to_bell_diagonal(_hermitize(partial_trace(rho, [2, 3])))
    if np.max(np.abs(first.as_array() - second.as_array())) > 1e-9:
        raise DomainError("the two pairs have different Bell diagonals")
    return qpa_circuit_step(rho)


def bell_pair_joint(weights) -> np.ndarray:
    """16x16 mixture sum_ij w[i, j] |bell_i><bell_i| (x) |bell_j><bell_j|.

    ``weights`` is a 4x4 joint distribution over the Bell labels of the
    control pair (rows) and the target pair (columns).
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (4, 4) or w.min() < 0 or abs(w.sum() - 1) > 1e-12:
        raise DomainError("weights must be a 4x4 joint probability table")
    proj = np.einsum("ka,kb->kab", BELL_BASIS, BELL_BASIS.conj())
    return np.einsum("ij,iab,jcd->acbd", w, proj, proj).reshape(16, 16)


def _hermitize(rho):
    return (rho + rho.conj().T) / 2


def purification(bd) -> np.ndarray:
    """sum_k sqrt(w_k) |bell_k>|k> on (alice, bob, eve_1, eve_2); length 16."""
    w = as_bell_diagonal(bd).as_array()
    return np.einsum("k,ka,ke->ae", np.sqrt(w), BELL_BASIS, np.eye(4)).reshape(16)


def eve_joint_state(bd) -> MultiQubitState:
    """Two purified pairs as an 8-qubit pure state in the fixed wire order."""
    psi = purification(bd).reshape(4, 4)  # (pair, eve)
    full = np.einsum("ae,bf->abef", psi, psi).reshape(256)
    return MultiQubitState(full, PAIR_WIRES + EVE_WIRES)


def eve_step_entropy(bd) -> tuple[float, float, float]:
    """Entanglement of a pair with everything else, before and after one round.

    Eve holds a purification of every pair, so the global state is pure and
    the von Neumann entropy of a pair's reduced state measures its
    entanglement with Eve plus the other pairs.  Returns
    (entropy_before, entropy_after, success_prob) in nats.
    """
    joint = eve_joint_state(bd)
    rho = np.outer(joint.data, joint.data.conj())
    before = von_neumann_entropy(partial_trace(rho, [0, 1]))
    out, prob = _postselect_pure(joint.data)
    m = out.reshape(4, -1)
    after = von_neumann_entropy(m @ m.conj().T)
    return before, after, prob


def bell_diagonal_entropy(bd) -> float:
    return shannon_entropy(as_bell_diagonal(bd).as_array())
