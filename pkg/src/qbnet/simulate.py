"""Monte-Carlo simulation of periodically measured network dynamics.

Between measurements the state evolves exactly by ``exp(W tau)``; at each
measurement instant an outcome is drawn from ``theta_j . exp(W tau) theta_i``
and the state collapses onto the corresponding product projector. Since the
post-measurement state is fixed by the outcome, the propagated coordinates
for all ``N`` outcomes are computed once per configuration.

Seeding: trajectory ``k`` of a batch with base seed ``b`` uses
``PCG64(mix64(b + k * 0x9E3779B97F4A7C15 mod 2^64))`` where ``mix64`` is the
SplitMix64 finalizer. Both steps are bijections on 64-bit integers, so
distinct indices always get distinct seeds.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chain import clean_probabilities
from .consensus import InteractionGraph, consensus_as_lindblad
from .hilbert import DensityOp, as_matrix, check_qubits, validate_density
from .lindblad import LindbladModel, build_generator, propagator
from .measurement import (
    COMPUTATIONAL,
    QubitMeasurement,
    index_bits,
    measurement_setup,
    state_index,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """SplitMix64 finalizer; a bijection on unsigned 64-bit integers."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base: int, index: int) -> int:
    return mix64((int(base) + int(index) * _GOLDEN) & _MASK64)


@dataclass(frozen=True)
class TrajectoryConfig:
    """One simulation run.

    ``model`` is either a :class:`LindbladModel` on ``n`` qubits or an
    :class:`InteractionGraph` (consensus dynamics). ``initial`` is a bit
    tuple, a bit string, or a density matrix; in the last case the record
    starts with a measurement of that state.
    """

    model: LindbladModel | InteractionGraph
    tau: float
    steps: int
    initial: object
    seed: int = 0
    measurement: QubitMeasurement = COMPUTATIONAL

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be at least 1, got {self.steps}")
        if self.tau < 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")

    @property
    def n(self) -> int:
        if isinstance(self.model, InteractionGraph):
            return self.model.n
        n = int(round(np.log2(self.model.dim)))
        if 2**n != self.model.dim:
            raise ValueError(f"model dimension {self.model.dim} is not a power of two")
        return n


@dataclass(frozen=True)
class TrajectoryRecord:
    n: int
    outcomes: np.ndarray  # 0-based state indices, length steps + 1

    def bits(self) -> list:
        return [index_bits(int(i), self.n) for i in self.outcomes]

    def bitstrings(self) -> list:
        return ["".join(map(str, b)) for b in self.bits()]


@dataclass(frozen=True)
class OutcomeKernel:
    """Per-outcome next-measurement probabilities, shared by all trajectories of a config."""

    n: int
    probabilities: np.ndarray  # row i: law of the next outcome after outcome i
    cumulative: np.ndarray
    projectors: tuple

    def initial_law(self, rho) -> np.ndarray:
        rho = as_matrix(rho)
        p = np.array([np.trace(m @ rho).real for m in self.projectors])
        return clean_probabilities(p[None, :], "initial outcome law")[0]


def outcome_kernel(cfg: TrajectoryConfig) -> OutcomeKernel:
    n = check_qubits(cfg.n)
    model = consensus_as_lindblad(cfg.model) if isinstance(cfg.model, InteractionGraph) else cfg.model
    basis, projs, theta = measurement_setup(n, cfg.measurement)
    w = build_generator(model, basis)
    t = theta.matrix
    evolved = propagator(w, cfg.tau) @ t  # column i: coordinates after evolving outcome i
    raw = evolved.T @ t  # [i, j] = theta_j . exp(W tau) theta_i
    probs = clean_probabilities(raw, "outcome probabilities")
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0
    probs.setflags(write=False)
    cum.setflags(write=False)
    return OutcomeKernel(n, probs, cum, tuple(projs))


def _initial_index(cfg: TrajectoryConfig, kernel: OutcomeKernel, rng: np.random.Generator) -> int:
    init = cfg.initial
    if isinstance(init, str):
        init = tuple(int(c) for c in init)
    rho = None
    if isinstance(init, DensityOp):
        rho = init.matrix
    elif np.ndim(init) == 2:
        rho = validate_density(init).matrix
    if rho is not None:
        law = kernel.initial_law(rho)
        return min(int(np.searchsorted(np.cumsum(law), rng.random(), side="right")), len(law) - 1)
    bits = tuple(init)
    if len(bits) != kernel.n:
        raise ValueError(f"initial state has {len(bits)} bits, expected {kernel.n}")
    return state_index(bits)


def _run(cfg: TrajectoryConfig, kernel: OutcomeKernel, rng: np.random.Generator) -> TrajectoryRecord:
    out = np.empty(cfg.steps + 1, dtype=np.int64)
    x = _initial_index(cfg, kernel, rng)
    out[0] = x
    draws = rng.random(cfg.steps)
    cum = kernel.cumulative
    last = cum.shape[1] - 1
    for t, u in enumerate(draws, start=1):
        x = min(int(np.searchsorted(cum[x], u, side="right")), last)
        out[t] = x
    out.setflags(write=False)
    return TrajectoryRecord(kernel.n, out)


def run_trajectory(cfg: TrajectoryConfig, kernel: OutcomeKernel | None = None) -> TrajectoryRecord:
    """Simulate one measurement record; deterministic in ``cfg.seed``."""
    kernel = kernel or outcome_kernel(cfg)
    return _run(cfg, kernel, np.random.Generator(np.random.PCG64(int(cfg.seed) & _MASK64)))


def batch_run(cfg: TrajectoryConfig, trajectories: int, seed_stream_base: int | None = None,
              workers: int | None = None) -> list:
    """Independent trajectories with per-index derived seeds, returned in index order."""
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    base = cfg.seed if seed_stream_base is None else seed_stream_base
    kernel = outcome_kernel(cfg)

    def one(k):
        rng = np.random.Generator(np.random.PCG64(derive_seed(base, k)))
        return _run(cfg, kernel, rng)

    workers = workers if workers is not None else int(os.environ.get("QBNET_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, range(trajectories)))
    return [one(k) for k in range(trajectories)]


@dataclass(frozen=True)
class EmpiricalTransition:
    counts: np.ndarray
    frequencies: np.ndarray  # NaN rows for states never left
    visited: np.ndarray

    @property
    def visits(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def empirical_transition(records, n: int) -> EmpiricalTransition:
    """Row-normalized transition counts; rows with no visits are NaN, not guessed."""
    records = list(records)
    if not records:
        raise ValueError("no trajectory records")
    N = 2**n
    counts = np.zeros((N, N), dtype=np.int64)
    for rec in records:
        o = np.asarray(rec.outcomes)
        np.add.at(counts, (o[:-1], o[1:]), 1)
    visits = counts.sum(axis=1)
    visited = visits > 0
    freq = np.full((N, N), np.nan)
    freq[visited] = counts[visited] / visits[visited, None]
    return EmpiricalTransition(counts, freq, visited)


def outcome_histogram(records, n: int, burn_in: int = 0) -> np.ndarray:
    """Normalized frequency of each outcome over all records after ``burn_in`` steps."""
    N = 2**n
    h = np.zeros(N)
    for rec in records:
        h += np.bincount(np.asarray(rec.outcomes)[burn_in:], minlength=N)
    return h / h.sum()
