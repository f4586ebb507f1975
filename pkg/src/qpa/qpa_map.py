"""Analytic Bell-diagonal recurrence of the purification protocol.

One round takes two pairs with Bell weights (A, B, C, D) and (A', B', C', D'),
keeps the control pair with probability

    N = (A + B)(A' + B') + (C + D)(C' + D')

and leaves it with weights ((AA' + BB'), (C'D + CD'), (CC' + DD'), (AB' + A'B)) / N.
With identical inputs this reduces to ((A^2 + B^2), 2CD, (C^2 + D^2), 2AB) / N.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, NumericError
from .quantum_core import (
    I2,
    X,
    Y,
    Z,
    BellDiagonal,
    as_bell_diagonal,
    bell_coefficients,
    bell_diagonal_to_density,
    check_density,
    chsh_max,
    fully_entangled_fraction,
    werner,
)

DEFAULT_FID_TOL = 1e-6
DEFAULT_MAX_ITERS = 200
INDETERMINATE_BAND = 1e-9


@dataclass(frozen=True)
class StepOutcome:
    state: BellDiagonal
    success_prob: float


@dataclass
class Trajectory:
    """Successive outcomes of repeated purification rounds."""

    initial: BellDiagonal
    points: list[StepOutcome] = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0

    @property
    def fidelities(self) -> list[float]:
        """Fidelity A at iterations 0, 1, ..., iterations_used."""
        return [self.initial.a] + [p.state.a for p in self.points]

    @property
    def final(self) -> BellDiagonal:
        return self.points[-1].state if self.points else self.initial

    def cumulative_yield(self) -> list[float]:
        """Fraction of the initial pairs left after each round, prod (N_k / 2)."""
        out, y = [], 1.0
        for p in self.points:
            y *= p.success_prob / 2
            out.append(y)
        return out


def step_identical(bd) -> StepOutcome:
    """One purification round on two pairs with the same Bell weights."""
    a, b, c, d = as_bell_diagonal(bd)
    n = (a + b) ** 2 + (c + d) ** 2
    assert n >= 0.5 - 1e-12, f"success probability {n} below 1/2"
    state = BellDiagonal((a * a + b * b) / n, 2 * c * d / n, (c * c + d * d) / n, 2 * a * b / n)
    return StepOutcome(state, n)


def step_mixed(bd, bd2) -> StepOutcome:
    """One round with ``bd`` as the control pair and ``bd2`` as the target pair."""
    a, b, c, d = as_bell_diagonal(bd)
    a2, b2, c2, d2 = as_bell_diagonal(bd2)
    n = (a + b) * (a2 + b2) + (c + d) * (c2 + d2)
    assert n > 0, "zero success probability"
    state = BellDiagonal(
        (a * a2 + b * b2) / n,
        (c2 * d + c * d2) / n,
        (c * c2 + d * d2) / n,
        (a * b2 + a2 * b) / n,
    )
    return StepOutcome(state, n)


def step_joint(weights) -> StepOutcome:
    """Two-pair round for correlated pairs with joint Bell-label table ``weights``.

    ``weights[i, j]`` is the probability that the control pair carries Bell
    label i and the target pair label j.  The surviving diagonal is the
    bilinear extension of :func:`step_mixed`; for ``weights = outer(p, p)``
    it equals ``step_identical(p)``.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (4, 4) or w.min() < -1e-12 or abs(w.sum() - 1) > 1e-12:
        raise DomainError("weights must be a 4x4 joint probability table")
    (aa, ab, ac, ad), (ba, bb, bc, bd_), (ca, cb, cc, cd), (da, db, dc, dd) = w
    num = np.array([aa + bb, cd + dc, cc + dd, ab + ba])
    n = float(num.sum())
    if n < 1e-15:
        raise NumericError("zero success probability", best=n)
    return StepOutcome(BellDiagonal.from_array(num / n), n)


def iterate(bd, max_iters: int = DEFAULT_MAX_ITERS, fid_tol: float = DEFAULT_FID_TOL) -> Trajectory:
    """Apply :func:`step_identical` until ``1 - A < fid_tol`` or ``max_iters`` rounds."""
    if max_iters < 1:
        raise DomainError("max_iters must be >= 1")
    if not 0 < fid_tol < 1:
        raise DomainError("fid_tol must lie in (0, 1)")
    bd = as_bell_diagonal(bd)
    traj = Trajectory(initial=bd)
    cur = bd
    if 1 - cur.a < fid_tol:
        traj.converged = True
        return traj
    for k in range(1, max_iters + 1):
        out = step_identical(cur)
        traj.points.append(out)
        cur = out.state
        traj.iterations_used = k
        if 1 - cur.a < fid_tol:
            traj.converged = True
            break
    return traj


def is_purifiable(state) -> bool | None:
    """Whether the state has entangled fraction strictly above 1/2.

    Accepts Bell weights or a 4x4 density matrix.  Returns None when the
    fraction is within 1e-9 of 1/2, where a strict inequality cannot be
    asserted from floating-point data.
    """
    arr = np.asarray(state.as_array() if isinstance(state, BellDiagonal) else state)
    if arr.shape == (4,):
        value = as_bell_diagonal(arr).max()
    elif arr.shape == (4, 4):
        rho = check_density(arr)
        coeffs = bell_coefficients(rho)
        off = coeffs - np.diag(np.diag(coeffs))
        if np.max(np.abs(off)) < 1e-12:
            value = float(np.max(np.real(np.diag(coeffs))))
        else:
            value = fully_entangled_fraction(rho, tol=1e-10)
    else:
        raise DomainError(f"expected Bell weights or a 4x4 matrix, got shape {arr.shape}")
    if abs(value - 0.5) < INDETERMINATE_BAND:
        return None
    return value > 0.5


# slot -> (tag, permutation of (A, B, C, D), Pauli applied on Alice's qubit)
_RELABELINGS = {
    0: ("identity", (0, 1, 2, 3), I2),
    1: ("psi-→phi+", (1, 0, 3, 2), Y),
    2: ("psi+→phi+", (2, 3, 0, 1), X),
    3: ("phi-→phi+", (3, 2, 1, 0), Z),
}


def canonicalize(bd) -> tuple[BellDiagonal, str]:
    """Move the largest Bell weight into the phi+ slot by a local Pauli.

    Ties keep the earliest slot.  Returns the relabeled weights and a tag
    naming the move (see :func:`relabeling_unitary`).
    """
    bd = as_bell_diagonal(bd)
    w = bd.as_array()
    slot = int(np.argmax(w))  # first maximum on ties
    tag, perm, _ = _RELABELINGS[slot]
    return BellDiagonal.from_array(w[list(perm)]), tag


def relabeling_unitary(tag: str) -> np.ndarray:
    """4x4 local unitary (P on Alice's qubit) implementing a canonicalize tag."""
    for t, _, pauli in _RELABELINGS.values():
        if t == tag:
            return np.kron(pauli, I2)
    raise DomainError(f"unknown relabeling tag {tag!r}")


class Efficiency(NamedTuple):
    yield_fraction: float
    yield_units_2pow: float


def efficiency(bd, rounds: int) -> Efficiency:
    """Surviving fraction after ``rounds`` rounds, and the same in units of 2**-rounds.

    Each round consumes two pairs per survivor, so the fraction is
    prod (N_k / 2) and the scaled value is prod N_k.
    """
    if rounds < 1:
        raise DomainError("rounds must be >= 1")
    cur = as_bell_diagonal(bd)
    units = 1.0
    for _ in range(rounds):
        out = step_identical(cur)
        units *= out.success_prob
        cur = out.state
    return Efficiency(units / 2**rounds, units)


class Fig1Row(NamedTuple):
    initial_fidelity: float
    iteration: int
    fidelity: float
    below_threshold: bool


def sweep_fig1(fid_grid: Sequence[float], rounds: int) -> list[Fig1Row]:
    """Fidelity versus iteration for Werner inputs over a grid of initial fidelities.

    Grid values at or below 1/2 are still iterated but flagged.
    """
    if rounds < 1:
        raise DomainError("rounds must be >= 1")
    rows = []
    for f in fid_grid:
        f = float(f)
        cur = werner(f)
        flag = f <= 0.5
        rows.append(Fig1Row(f, 0, cur.a, flag))
        for k in range(1, rounds + 1):
            cur = step_identical(cur).state
            rows.append(Fig1Row(f, k, cur.a, flag))
    return rows


class Fig2Row(NamedTuple):
    initial_fidelity: float
    yield_fraction: float
    yield_units_2pow: float


def sweep_fig2(fid_grid: Sequence[float], rounds: int = 10) -> list[Fig2Row]:
    """Yield after ``rounds`` rounds for Werner inputs over a fidelity grid."""
    return [Fig2Row(float(f), *efficiency(werner(float(f)), rounds)) for f in fid_grid]


def sample_simplex(rng: np.random.Generator, n: int, min_fidelity: float | None = None) -> np.ndarray:
    """Draw ``n`` uniform points of the probability simplex, shape (n, 4).

    Normalised exponential variates give the uniform Dirichlet law; with
    ``min_fidelity`` set, points with A <= min_fidelity are rejected.
    """
    out = []
    have = 0
    while have < n:
        e = rng.exponential(size=(max(2 * (n - have), 64), 4))
        pts = e / e.sum(axis=1, keepdims=True)
        if min_fidelity is not None:
            pts = pts[pts[:, 0] > min_fidelity]
        out.append(pts)
        have += len(pts)
    return np.concatenate(out)[:n]


@dataclass
class ScanFailure:
    initial: BellDiagonal
    trajectory: Trajectory
    near_boundary: bool


@dataclass
class ScanReport:
    samples: int
    seed: int
    converged: int
    max_iterations: int
    mean_iterations: float
    threshold_violations: int
    failures: list[ScanFailure]
    probes: list[Trajectory]
    fixed_point_residual: float
    uniform_fixed_point_residual: float
    spurious_fixed_points: list[BellDiagonal]

    @property
    def ok(self) -> bool:
        """True when no point away from the A = 1/2 boundary failed to converge."""
        return (
            not any(not f.near_boundary for f in self.failures)
            and self.threshold_violations == 0
            and self.fixed_point_residual == 0.0
            and not self.spurious_fixed_points
        )

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "converged": self.converged,
            "max_iterations": self.max_iterations,
            "mean_iterations": self.mean_iterations,
            "threshold_violations": self.threshold_violations,
            "failures": [
                {
                    "initial": list(f.initial),
                    "near_boundary": f.near_boundary,
                    "fidelities": f.trajectory.fidelities,
                }
                for f in self.failures
            ],
            "probes": [
                {
                    "initial": list(t.initial),
                    "converged": t.converged,
                    "iterations": t.iterations_used,
                }
                for t in self.probes
            ],
            "fixed_point_residual": self.fixed_point_residual,
            "uniform_fixed_point_residual": self.uniform_fixed_point_residual,
            "spurious_fixed_points": [list(p) for p in self.spurious_fixed_points],
            "ok": self.ok,
        }


def _residual(bd) -> float:
    out = step_identical(bd).state.as_array()
    return float(np.max(np.abs(out - as_bell_diagonal(bd).as_array())))


def fixed_point_scan(
    samples: int,
    seed: int,
    max_iters: int = DEFAULT_MAX_ITERS,
    fid_tol: float = DEFAULT_FID_TOL,
    margin: float = 1e-4,
    probes: Sequence = (),
) -> ScanReport:
    """Iterate random points with A > 1/2 and report any that fail to reach A ~ 1.

    Failures include their full trajectory; a failure with A <= 1/2 + margin
    is marked as near the boundary.  ``probes`` are extra starting points
    whose iteration counts are reported individually.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    pts = sample_simplex(rng, samples, min_fidelity=0.5)
    final, iters, conv, minf, _ = kernels.iterate_batch(pts, max_iters, fid_tol)

    failures = []
    spurious = []
    for i in np.flatnonzero(~conv):
        bd = BellDiagonal.from_array(pts[i])
        traj = iterate(bd, max_iters, fid_tol)
        failures.append(ScanFailure(bd, traj, bd.a <= 0.5 + margin))
        last = traj.final
        if last.a > 0.5 and _residual(last) < 1e-12:
            spurious.append(last)

    return ScanReport(
        samples=samples,
        seed=seed,
        converged=int(conv.sum()),
        max_iterations=int(iters.max()),
        mean_iterations=float(iters.mean()),
        threshold_violations=int(np.sum(minf <= 0.5)),
        failures=failures,
        probes=[iterate(p, max_iters, fid_tol) for p in probes],
        fixed_point_residual=_residual(BellDiagonal(1.0, 0.0, 0.0, 0.0)),
        uniform_fixed_point_residual=_residual(BellDiagonal(0.25, 0.25, 0.25, 0.25)),
        spurious_fixed_points=spurious,
    )


def threshold_preservation(samples: int, seed: int) -> tuple[int, float]:
    """Count points with A > 1/2 whose image has A <= 1/2.

    Returns (violations, smallest image fidelity).
    """
    rng = np.random.default_rng(seed)
    pts = sample_simplex(rng, samples, min_fidelity=0.5)
    out, _ = kernels.step_batch(pts)
    return int(np.sum(out[:, 0] <= 0.5)), float(out[:, 0].min())


def find_cond_no_chsh(seed: int, max_tries: int = 100_000) -> BellDiagonal:
    """A Bell-diagonal state that is purifiable yet satisfies the CHSH inequality.

    Tries the Werner state F = 0.55 first, then seeded random Bell-diagonal
    states with A > 1/2.  Both predicates are checked before returning.
    """
    def accept(bd):
        return is_purifiable(bd) is True and chsh_max(bell_diagonal_to_density(bd)) <= 2.0

    first = werner(0.55)
    if accept(first):
        return first
    rng = np.random.default_rng(seed)
    for row in sample_simplex(rng, max_tries, min_fidelity=0.5):
        bd = BellDiagonal.from_array(row)
        if accept(bd):
            return bd
    raise NumericError(f"no purifiable CHSH-satisfying state found in {max_tries} tries")
