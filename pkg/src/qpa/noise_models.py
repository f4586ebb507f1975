"""Imperfect local operations around each purification round.

Noise is a single-qubit channel applied independently to Alice's and/or
Bob's qubit of the averaged pair state, before and/or after a perfect
round.  All three channels map Bell-diagonal states to Bell-diagonal states.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit_oracle import bell_diagonal_entropy, eve_step_entropy
from .errors import DomainError
from .qpa_map import StepOutcome, Trajectory, step_identical
from .quantum_core import (
    I2,
    X,
    Z,
    BellDiagonal,
    as_bell_diagonal,
    bell_diagonal_to_density,
    check_density,
    density_to_bell_diagonal,
    partial_trace,
    werner,
)

__all__ = [
    "NoiseSpec",
    "NoisyTrajectory",
    "apply_local_noise",
    "noisy_eve_entropy",
    "noisy_iterate",
    "plateau_scan",
    "werner",
]

KINDS = ("depolarizing", "bit-flip", "phase-flip")
PLACEMENTS = ("before-step", "after-step", "both")
SIDES = ("alice", "bob", "both")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "depolarizing"
    strength: float = 0.0
    placement: str = "before-step"
    sides: str = "both"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        if self.placement not in PLACEMENTS:
            raise DomainError(f"unknown placement {self.placement!r}; expected one of {PLACEMENTS}")
        if self.sides not in SIDES:
            raise DomainError(f"unknown sides {self.sides!r}; expected one of {SIDES}")
        if not 0.0 <= self.strength <= 1.0:
            raise DomainError(f"noise strength {self.strength} outside [0, 1]")

    @property
    def qubits(self) -> tuple[int, ...]:
        return {"alice": (0,), "bob": (1,), "both": (0, 1)}[self.sides]

    @property
    def before(self) -> bool:
        return self.placement in ("before-step", "both")

    @property
    def after(self) -> bool:
        return self.placement in ("after-step", "both")


def _on_qubit(op, q):
    return np.kron(op, I2) if q == 0 else np.kron(I2, op)


def _depolarize(rho, q, p):
    other = 1 - q
    reduced = partial_trace(rho, [other])
    mixed = np.kron(I2 / 2, reduced) if q == 0 else np.kron(reduced, I2 / 2)
    return (1 - p) * rho + p * mixed


def _flip(rho, q, p, pauli):
    u = _on_qubit(pauli, q)
    return (1 - p) * rho + p * (u @ rho @ u.conj().T)


def apply_local_noise(rho, spec: NoiseSpec) -> np.ndarray:
    """Apply ``spec``'s channel to each selected qubit of a two-qubit state."""
    rho = check_density(rho)
    if rho.shape != (4, 4):
        raise DomainError(f"expected a 4x4 density matrix, got {rho.shape}")
    p = spec.strength
    for q in spec.qubits:
        if spec.kind == "depolarizing":
            rho = _depolarize(rho, q, p)
        elif spec.kind == "bit-flip":
            rho = _flip(rho, q, p, X)
        else:
            rho = _flip(rho, q, p, Z)
    return rho


def _noisy(bd: BellDiagonal, spec: NoiseSpec) -> BellDiagonal:
    rho = apply_local_noise(bell_diagonal_to_density(bd), spec)
    return density_to_bell_diagonal((rho + rho.conj().T) / 2)


@dataclass
class NoisyTrajectory(Trajectory):
    """Trajectory of a noisy run; ``plateau`` is the mean fidelity of the last 20% of rounds."""

    spec: NoiseSpec = field(default_factory=NoiseSpec)
    plateau: float = float("nan")
    purifying: bool = False


def noisy_iterate(bd, spec: NoiseSpec, rounds: int) -> NoisyTrajectory:
    """Alternate local noise with perfect rounds for a fixed number of rounds.

    Each recorded point is the averaged state at the end of its round (after
    any after-step noise) with that round's success probability.  The run
    is flagged ``purifying`` when the plateau fidelity exceeds 1/2 and is
    above the initial fidelity.
    """
    if rounds < 1:
        raise DomainError("rounds must be >= 1")
    bd = as_bell_diagonal(bd)
    traj = NoisyTrajectory(initial=bd, spec=spec)
    cur = bd
    for _ in range(rounds):
        if spec.before:
            cur = _noisy(cur, spec)
        out = step_identical(cur)
        cur = out.state
        if spec.after:
            cur = _noisy(cur, spec)
        traj.points.append(StepOutcome(cur, out.success_prob))
    traj.iterations_used = rounds
    tail = max(1, int(round(0.2 * rounds)))
    fids = np.array(traj.fidelities[1:])
    traj.plateau = float(fids[-tail:].mean())
    traj.converged = bool(1 - fids[-1] < 1e-6)
    traj.purifying = bool(traj.plateau > 0.5 and traj.plateau > bd.a)
    return traj


def plateau_scan(bd, strengths, rounds: int = 50, kind: str = "depolarizing",
                 placement: str = "before-step", sides: str = "both"):
    """Plateau fidelity for each noise strength; returns a list of (p, plateau)."""
    out = []
    for p in strengths:
        spec = NoiseSpec(kind, float(p), placement, sides)
        out.append((float(p), noisy_iterate(bd, spec, rounds).plateau))
    return out


def noisy_eve_entropy(bd, spec: NoiseSpec, rounds: int) -> list[tuple[float, float]]:
    """Pair-environment entropy (nats) across each round of a noisy run.

    Entry k is (entropy entering round k+1 after any before-step noise,
    entropy of the surviving pair after the round and any after-step noise).
    This is a measurement only; no monotonicity is implied under noise.
    """
    traj = noisy_iterate(bd, spec, rounds)
    out = []
    for start in [traj.initial] + [p.state for p in traj.points[:-1]]:
        cur = _noisy(start, spec) if spec.before else start
        before, _, _ = eve_step_entropy(cur)
        end = step_identical(cur).state
        if spec.after:
            end = _noisy(end, spec)
        out.append((before, bell_diagonal_entropy(end)))
    return out
