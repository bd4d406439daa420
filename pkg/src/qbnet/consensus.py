"""Quantum consensus networks driven by qubit swaps.

The master equation is ``d rho/ds = sum_{jk} a_jk (U_jk rho U_jk^+ - rho)``
over the edges of an interaction graph. Qubits are numbered from 1 and
qubit 1 is the most significant bit of a basis index.

Vectorization is column stacking, so ``vec(A rho B) = (B^T kron A) vec(rho)``.
Swap matrices are real symmetric permutations, which makes the quantum
Laplacian ``-sum a_jk (U_jk kron U_jk - I)`` symmetric.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .chain import TransitionMatrix
from .hilbert import as_matrix, check_qubits, validate_density
from .lindblad import LindbladModel, symmetric_matrix_exp
from .measurement import index_bits, state_index


@dataclass(frozen=True)
class InteractionGraph:
    """Undirected weighted graph on qubits ``1..n``.

    ``edges`` maps ``(j, k)`` with ``j < k`` to a positive weight.
    """

    n: int
    edges: dict

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"node count must be a positive integer, got {self.n!r}")
        clean = {}
        for (j, k), w in dict(self.edges).items():
            j, k = int(j), int(k)
            if j == k:
                raise ValueError(f"self-loop at node {j}")
            if not (1 <= j <= self.n and 1 <= k <= self.n):
                raise ValueError(f"edge {j}-{k} out of range 1..{self.n}")
            w = float(w)
            if not w > 0 or not math.isfinite(w):
                raise ValueError(f"edge {j}-{k} weight must be positive, got {w}")
            key = (min(j, k), max(j, k))
            if key in clean:
                raise ValueError(f"duplicate edge {key[0]}-{key[1]}")
            clean[key] = w
        object.__setattr__(self, "edges", dict(sorted(clean.items())))

    @classmethod
    def from_pairs(cls, n: int, pairs, weight: float = 1.0) -> "InteractionGraph":
        return cls(n, {tuple(p): weight for p in pairs})

    def components(self) -> list:
        """Connected components as sorted lists of 1-based nodes."""
        parent = list(range(self.n + 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for j, k in self.edges:
            parent[find(j)] = find(k)
        comps: dict[int, list] = {}
        for v in range(1, self.n + 1):
            comps.setdefault(find(v), []).append(v)
        return sorted(comps.values())

    @property
    def connected(self) -> bool:
        return len(self.components()) == 1

    def scaled(self, c: float) -> "InteractionGraph":
        return InteractionGraph(self.n, {e: c * w for e, w in self.edges.items()})


def path_graph(n: int, weight: float = 1.0) -> InteractionGraph:
    return InteractionGraph.from_pairs(n, [(k, k + 1) for k in range(1, n)], weight)


def complete_graph(n: int, weight: float = 1.0) -> InteractionGraph:
    return InteractionGraph.from_pairs(n, itertools.combinations(range(1, n + 1), 2), weight)


def random_connected_graph(n: int, rng: np.random.Generator, extra_edge_prob: float = 0.5,
                           weight_range=(0.2, 3.0)) -> InteractionGraph:
    """Random spanning tree plus Bernoulli extra edges, uniform weights."""
    nodes = list(rng.permutation(np.arange(1, n + 1)))
    pairs = set()
    for idx in range(1, n):
        other = nodes[int(rng.integers(idx))]
        pairs.add((min(nodes[idx], other), max(nodes[idx], other)))
    for j, k in itertools.combinations(range(1, n + 1), 2):
        if (j, k) not in pairs and rng.random() < extra_edge_prob:
            pairs.add((j, k))
    lo, hi = weight_range
    return InteractionGraph(n, {p: float(rng.uniform(lo, hi)) for p in sorted(pairs)})


def permutation_unitary(perm, n: int) -> np.ndarray:
    """Matrix of ``U_chi |q1 ... qn> = |q_chi(1) ... q_chi(n)>``.

    ``perm`` is a sequence of 1-based images: ``perm[l-1] = chi(l)``.
    """
    check_qubits(n)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(1, n + 1)):
        raise ValueError(f"{perm} is not a permutation of 1..{n}")
    N = 2**n
    u = np.zeros((N, N))
    for src in range(N):
        q = index_bits(src, n)
        dst = state_index(q[perm[l] - 1] for l in range(n))
        u[dst, src] = 1.0
    return u


def swap_unitary(j: int, k: int, n: int) -> np.ndarray:
    """Permutation matrix exchanging qubits ``j`` and ``k`` (1-based)."""
    if not (1 <= j <= n and 1 <= k <= n) or j == k:
        raise ValueError(f"invalid swap ({j}, {k}) for n={n}")
    perm = list(range(1, n + 1))
    perm[j - 1], perm[k - 1] = k, j
    return permutation_unitary(perm, n)


@dataclass(frozen=True)
class QuantumLaplacian:
    n: int
    matrix: np.ndarray


def quantum_laplacian(g: InteractionGraph) -> QuantumLaplacian:
    """``L_q = -sum a_jk (U_jk kron U_jk - I)`` as a dense ``4^n x 4^n`` matrix."""
    check_qubits(g.n)
    N2 = 4**g.n
    lq = np.zeros((N2, N2))
    for (j, k), a in g.edges.items():
        u = swap_unitary(j, k, g.n)
        lq -= a * np.kron(u, u)
        lq[np.diag_indices(N2)] += a
    lq.setflags(write=False)
    return QuantumLaplacian(g.n, lq)


def diagonal_embedding_indices(n: int) -> np.ndarray:
    """Positions of ``e_i kron e_i`` inside a length-``N^2`` vector."""
    N = 2**n
    return np.arange(N) * (N + 1)


def consensus_transition(g: InteractionGraph, tau: float) -> TransitionMatrix:
    """``E_N^T exp(-tau L_q) E_N`` via a symmetric eigendecomposition of ``L_q``."""
    if tau < 0:
        raise ValueError(f"measurement period must be non-negative, got {tau}")
    lq = quantum_laplacian(g).matrix
    idx = diagonal_embedding_indices(g.n)
    heat = symmetric_matrix_exp(lq, -tau)
    return TransitionMatrix(g.n, heat[np.ix_(idx, idx)], float(tau))


def consensus_as_lindblad(g: InteractionGraph) -> LindbladModel:
    """Same dynamics as a Lindblad model: ``H = 0``, ``V_jk = sqrt(a_jk) U_jk``."""
    check_qubits(g.n)
    N = 2**g.n
    ops = tuple(np.sqrt(a) * swap_unitary(j, k, g.n) for (j, k), a in g.edges.items())
    return LindbladModel(np.zeros((N, N)), ops)


def consensus_rhs(g: InteractionGraph, rho) -> np.ndarray:
    rho = as_matrix(rho)
    out = np.zeros_like(rho)
    for (j, k), a in g.edges.items():
        u = swap_unitary(j, k, g.n)
        out += a * (u @ rho @ u.T - rho)
    return out


@dataclass(frozen=True)
class ClassPrediction:
    n: int
    classes: tuple

    @property
    def sizes(self) -> tuple:
        return tuple(len(c) for c in self.classes)


def predicted_classes(n: int) -> ClassPrediction:
    """Outcome classes predicted for consensus dynamics: one per Hamming weight."""
    if n < 1:
        raise ValueError("n must be positive")
    by_weight = [[] for _ in range(n + 1)]
    for i in range(2**n):
        by_weight[bin(i).count("1")].append(i)
    return ClassPrediction(n, tuple(tuple(c) for c in by_weight))


def projection_consensus(rho, n: int):
    """Average of ``U_chi rho U_chi^+`` over all ``n!`` qubit permutations."""
    check_qubits(n)
    r = as_matrix(rho)
    acc = np.zeros_like(r)
    count = 0
    for perm in itertools.permutations(range(1, n + 1)):
        u = permutation_unitary(perm, n)
        acc += u @ r @ u.T
        count += 1
    return validate_density(acc / count)


def consensus_evolve(g: InteractionGraph, rho, s: float) -> np.ndarray:
    """``rho(s)`` under the consensus master equation, via ``exp(-s L_q)`` on ``vec(rho)``."""
    r = as_matrix(rho)
    N = r.shape[0]
    heat = symmetric_matrix_exp(quantum_laplacian(g).matrix, -s)
    v = heat @ r.reshape(-1, order="F")
    return v.reshape(N, N, order="F")


def classical_laplacian(g: InteractionGraph) -> np.ndarray:
    """Weighted ``D - A`` on nodes ``1..n`` (row/column 0 is node 1)."""
    lap = np.zeros((g.n, g.n))
    for (j, k), a in g.edges.items():
        lap[j - 1, k - 1] -= a
        lap[k - 1, j - 1] -= a
        lap[j - 1, j - 1] += a
        lap[k - 1, k - 1] += a
    return lap


@dataclass(frozen=True)
class HeatKernelReport:
    tau: float
    kernel: np.ndarray
    min_entry: float
    connected: bool
    components: tuple
    # Largest |entry| linking two different components; zero when connected.
    off_block_max: float

    @property
    def positive(self) -> bool:
        return self.min_entry > 0


def classical_heat_kernel_positive(g: InteractionGraph, tau: float) -> HeatKernelReport:
    """Compute ``exp(-tau L(G))`` and report on its entrywise positivity.

    For a connected graph the minimum entry must be strictly positive; an
    ``ArithmeticError`` is raised otherwise. Disconnected graphs are reported
    with the block pattern of their components instead.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    lap = classical_laplacian(g)
    comps = g.components()
    kernel = symmetric_matrix_exp(lap, -tau)
    label = np.empty(g.n, dtype=int)
    for c, members in enumerate(comps):
        label[[v - 1 for v in members]] = c
    off = label[:, None] != label[None, :]
    off_max = float(np.max(np.abs(kernel[off]))) if off.any() else 0.0
    if len(comps) > 1:
        # Components do not interact: the exponential is exactly block diagonal.
        kernel = np.where(off, 0.0, kernel)
    min_entry = float(kernel.min())
    connected = len(comps) == 1
    if connected and not min_entry > 0:
        raise ArithmeticError(f"heat kernel of a connected graph has entry {min_entry}")
    return HeatKernelReport(float(tau), kernel, min_entry, connected, tuple(map(tuple, comps)), off_max)


def invariant_subspace_residual(g_bits, graph: InteractionGraph, s_grid) -> float:
    """Max distance of ``rho(s)`` from ``span{U_chi |g><g| U_chi^+}`` along the grid.

    Starts from ``|g><g|`` in the computational basis and evolves with the
    consensus master equation. The spanning projectors are the diagonal
    matrices on the permutation orbit of ``g``, which are orthonormal, so the
    projection is a coordinate read-off. Returns the largest Frobenius norm
    of the orthogonal residual.
    """
    bits = tuple(int(b) for b in g_bits)
    n = len(bits)
    if n != graph.n:
        raise ValueError(f"state has {n} bits but graph has {graph.n} nodes")
    N = 2**n
    start = np.zeros((N, N), dtype=complex)
    i0 = state_index(bits)
    start[i0, i0] = 1.0
    orbit = sorted({state_index(bits[p - 1] for p in perm) for perm in itertools.permutations(range(1, n + 1))})
    worst = 0.0
    for s in s_grid:
        rho = consensus_evolve(graph, start, float(s))
        proj = np.zeros_like(rho)
        proj[orbit, orbit] = rho[orbit, orbit]
        worst = max(worst, float(np.linalg.norm(rho - proj)))
    return worst
