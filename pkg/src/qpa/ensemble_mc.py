"""Finite-ensemble Monte Carlo of repeated purification rounds.

Each round shuffles the pairs, couples them off (first of a couple is the
control), samples keep/discard for every couple with its two-pair success
probability, and replaces a kept control by the expected post-selected
state.  An odd pair left over is carried into the next round untouched.

Randomness is counter-based: round r uses Philox keys derived from
``SeedSequence(seed, spawn_key=(r, stream))``; couple j reads the j-th
uniform of the outcome stream, so any partition of the couples across
workers reproduces the sequential run bit for bit.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import DomainError
from .qpa_map import step_identical
from .quantum_core import BellDiagonal, as_bell_diagonal

_PERMUTATION, _OUTCOMES = 0, 1


@dataclass(frozen=True)
class RoundRecord:
    pairs_in: int
    couples: int
    successes: int
    leftover: int
    expected_successes: float
    refused: bool = False

    @property
    def survivors(self) -> int:
        return self.successes + self.leftover


@dataclass
class Ensemble:
    """Multiset of pair states: distinct Bell-weight rows with multiplicities."""

    states: np.ndarray
    counts: np.ndarray
    round: int = 0
    history: list[RoundRecord] = field(default_factory=list)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 4)
        self.counts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if len(self.states) != len(self.counts):
            raise DomainError("states and counts differ in length")
        if np.any(self.counts < 0):
            raise DomainError("negative pair count")

    @classmethod
    def uniform(cls, bd, l: int) -> "Ensemble":
        return cls(as_bell_diagonal(bd).as_array()[None, :], [l])

    @property
    def size(self) -> int:
        return int(self.counts.sum())

    @property
    def refused(self) -> bool:
        return bool(self.history) and self.history[-1].refused


def average_density(ens: Ensemble) -> BellDiagonal:
    """Count-weighted mean Bell diagonal of the ensemble."""
    total = ens.size
    if total == 0:
        raise DomainError("empty ensemble")
    mean = (ens.counts[:, None] * ens.states).sum(axis=0) / total
    return BellDiagonal.from_array(mean / mean.sum())


def _key(seed: int, rnd: int, stream: int) -> np.ndarray:
    return np.random.SeedSequence(seed, spawn_key=(rnd, stream)).generate_state(2, np.uint64)


def couple_uniforms(seed: int, rnd: int, start: int, count: int) -> np.ndarray:
    """Uniforms for couples ``start .. start+count-1`` of round ``rnd``."""
    bg = np.random.Philox(key=_key(seed, rnd, _OUTCOMES))
    bg.advance(start // 4)  # one Philox block yields four doubles
    skip = start % 4
    return np.random.Generator(bg).random(count + skip)[skip:]


def _chunks(m: int, chunk_size: int | None):
    if not chunk_size or chunk_size >= m:
        return [(0, m)]
    return [(s, min(s + chunk_size, m)) for s in range(0, m, chunk_size)]


def mc_round(ens: Ensemble, seed: int, chunk_size: int | None = None, workers: int = 1) -> Ensemble:
    """One purification round on a finite ensemble; returns a new Ensemble.

    With fewer than two pairs the round is refused: the returned ensemble has
    the same pairs and a history entry with ``refused=True``.
    """
    n = ens.size
    if n < 2:
        rec = RoundRecord(n, 0, 0, n, 0.0, refused=True)
        return replace(ens, history=ens.history + [rec])

    rnd = ens.round
    labels = np.repeat(np.arange(len(ens.counts)), ens.counts)
    perm_gen = np.random.Generator(np.random.Philox(key=_key(seed, rnd, _PERMUTATION)))
    labels = perm_gen.permutation(labels)
    m = n // 2
    first, second = labels[0 : 2 * m : 2], labels[1 : 2 * m : 2]
    leftover = labels[2 * m :]

    def run(span):
        s, e = span
        u = couple_uniforms(seed, rnd, s, e - s)
        return kernels.mixed_step_batch(ens.states[first[s:e]], ens.states[second[s:e]], u)

    spans = _chunks(m, chunk_size)
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, spans))
    else:
        parts = [run(sp) for sp in spans]
    out = np.concatenate([p[0] for p in parts])
    prob = np.concatenate([p[1] for p in parts])
    ok = np.concatenate([p[2] for p in parts])

    kept = np.concatenate([out[ok], ens.states[leftover]])
    if len(kept):
        states, counts = np.unique(kept, axis=0, return_counts=True)
    else:
        states, counts = np.empty((0, 4)), np.empty(0, dtype=np.int64)
    rec = RoundRecord(n, m, int(ok.sum()), len(leftover), float(prob.sum()))
    return Ensemble(states, counts, rnd + 1, ens.history + [rec])


@dataclass
class McReport:
    initial: BellDiagonal
    l: int
    rounds: int
    seed: int
    yield_curve: list[int]
    empirical_success_rates: list[float]
    couples: list[int]
    analytic_success_probs: list[float]
    analytic_yield: list[float]
    average_states: list[list[float]]
    analytic_states: list[list[float]]
    exhausted: bool

    @property
    def rounds_completed(self) -> int:
        return len(self.empirical_success_rates)

    @property
    def final_fraction(self) -> float:
        return self.yield_curve[-1] / self.l

    def to_dict(self) -> dict:
        return {
            "initial": list(self.initial),
            "l": self.l,
            "rounds": self.rounds,
            "seed": self.seed,
            "rounds_completed": self.rounds_completed,
            "exhausted": self.exhausted,
            "yield_curve": self.yield_curve,
            "couples": self.couples,
            "empirical_success_rates": self.empirical_success_rates,
            "analytic_success_probs": self.analytic_success_probs,
            "analytic_yield": self.analytic_yield,
            "average_states": self.average_states,
            "analytic_states": self.analytic_states,
        }


def mc_run(initial, l: int, rounds: int, seed: int, chunk_size: int | None = None,
           workers: int = 1) -> McReport:
    """Run ``rounds`` Monte Carlo rounds from ``l`` copies of ``initial``.

    ``yield_curve[0]`` is ``l``; entry k is the pair count after round k.
    Stops early, with ``exhausted`` set, once fewer than two pairs remain.
    """
    if l < 2:
        raise DomainError("need at least two pairs")
    if rounds < 1:
        raise DomainError("rounds must be >= 1")
    initial = as_bell_diagonal(initial)
    ens = Ensemble.uniform(initial, l)

    curve, rates, couples, avgs = [l], [], [], []
    exhausted = False
    for _ in range(rounds):
        ens = mc_round(ens, seed, chunk_size=chunk_size, workers=workers)
        rec = ens.history[-1]
        if rec.refused:
            exhausted = True
            break
        curve.append(rec.survivors)
        couples.append(rec.couples)
        rates.append(rec.successes / rec.couples)
        avgs.append(list(average_density(ens)) if ens.size else None)
        if ens.size < 2:
            exhausted = len(rates) < rounds
            break

    n_probs, n_yield, n_states = [], [], []
    cur, y = initial, 1.0
    for _ in range(rounds):
        out = step_identical(cur)
        cur = out.state
        y *= out.success_prob / 2
        n_probs.append(out.success_prob)
        n_yield.append(y)
        n_states.append(list(cur))

    return McReport(initial, l, rounds, seed, curve, rates, couples, n_probs, n_yield,
                    avgs, n_states, exhausted)

