"""The induced Boolean Markov chain: transition matrices and structure.

Convention: ``P[i, j]`` is the probability of observing outcome ``j`` at the
next measurement given outcome ``i`` now, so rows sum to one. With
``Theta`` holding the projector coordinates, ``P[i, j] =
theta_j . exp(W tau) theta_i``, which is the transpose of
``Theta^T exp(W tau) Theta``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NoConvergence, NotErgodic, NotRelaxing, StochasticityError
from .hilbert import validate_density
from .lindblad import propagator, steady_state
from .measurement import ThetaMatrix, state_labels

NEG_DUST_TOL = 1e-9
ROW_SUM_TOL = 1e-8
DEFAULT_EPS_SCALE = 1e-10
POWER_TOL = 1e-12
POWER_MAX_ITER = 10**6
EIG_CROSSCHECK_TOL = 1e-9


class FragileThresholdWarning(UserWarning):
    """Some transition probability lies close to the positivity threshold."""


def clean_probabilities(p, what: str = "transition matrix") -> np.ndarray:
    """Clamp negative dust and renormalize rows of a probability array.

    Entries below ``-NEG_DUST_TOL`` or above ``1 + NEG_DUST_TOL``, and rows
    whose sum is off by more than ``ROW_SUM_TOL``, raise
    :class:`StochasticityError`. This is the single dust policy used by both
    the exact chain and the trajectory sampler.
    """
    p = np.array(p, dtype=float, copy=True)
    rows = p.reshape(-1, p.shape[-1])
    lo, hi = rows.min(), rows.max()
    if lo < -NEG_DUST_TOL or hi > 1 + NEG_DUST_TOL:
        raise StochasticityError(f"{what} has entry outside [0, 1]: min {lo:.3e}, max {hi:.12g}")
    dev = np.max(np.abs(rows.sum(axis=1) - 1.0))
    if dev > ROW_SUM_TOL:
        raise StochasticityError(f"{what} row sums deviate from 1 by {dev:.3e}")
    rows = np.clip(rows, 0.0, None)
    rows /= rows.sum(axis=1, keepdims=True)
    return rows.reshape(p.shape)


@dataclass(frozen=True)
class TransitionMatrix:
    n: int
    matrix: np.ndarray
    tau: float

    def __post_init__(self):
        m = clean_probabilities(self.matrix)
        if m.shape != (2**self.n, 2**self.n):
            raise ValueError(f"transition matrix shape {m.shape} does not match n={self.n}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def labels(self) -> list:
        return state_labels(self.n)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def _n_from_states(N: int) -> int:
    n = int(round(math.log2(N)))
    if 2**n != N:
        raise ValueError(f"state count {N} is not a power of two")
    return n


def transition_matrix(w, theta: ThetaMatrix, tau: float) -> TransitionMatrix:
    """Exact transition matrix of the outcome chain at measurement period ``tau``."""
    t = theta.matrix
    e = propagator(w, tau)
    if e.shape[0] != t.shape[0]:
        raise ValueError(f"generator size {e.shape[0]} does not match Theta rows {t.shape[0]}")
    raw = t.T @ e @ t
    return TransitionMatrix(_n_from_states(t.shape[1]), raw.T, float(tau))


def limit_transition(w, theta: ThetaMatrix) -> TransitionMatrix:
    """Rank-one ``tau -> infinity`` limit; every row equals ``Theta^T theta_star``."""
    rep = steady_state(w)
    if not rep.is_relaxing:
        raise NotRelaxing(
            f"generator is not relaxing (kernel dimension {rep.kernel_dimension}, "
            f"abscissa of nonzero modes {rep.spectral_abscissa_nonzero_modes:.3e})"
        )
    row = theta.matrix.T @ rep.steady_coordinate
    N = theta.n_states
    return TransitionMatrix(_n_from_states(N), np.tile(row, (N, 1)), math.inf)


@dataclass(frozen=True)
class MarkovStructure:
    """Communication-class analysis of a transition matrix.

    States are 0-based indices. ``classes`` is sorted by smallest member;
    ``class_dag[c]`` lists the classes directly reachable from class ``c``.
    Classes without an internal cycle (a transient state without a self
    loop) report period 1.
    """

    n: int
    classes: tuple
    class_dag: dict
    absorbing: tuple
    periods: tuple
    irreducible: bool
    aperiodic: bool
    eps: float
    closed: tuple = field(default=())

    def class_of(self, state: int) -> int:
        for c, members in enumerate(self.classes):
            if state in members:
                return c
        raise KeyError(state)

    def labelled(self) -> dict:
        """JSON-friendly view with bit-string state labels."""
        lab = state_labels(self.n)
        return {
            "classes": [[lab[i] for i in c] for c in self.classes],
            "class_dag": {str(c): list(succ) for c, succ in self.class_dag.items()},
            "closed_classes": list(self.closed),
            "absorbing": [lab[i] for i in self.absorbing],
            "periods": list(self.periods),
            "irreducible": self.irreducible,
            "aperiodic": self.aperiodic,
            "eps": self.eps,
        }


def _class_period(members, adj) -> int:
    inside = set(members)
    root = members[0]
    level = {root: 0}
    queue = [root]
    g = 0
    while queue:
        nxt = []
        for u in queue:
            for v in adj[u]:
                if v not in inside:
                    continue
                if v not in level:
                    level[v] = level[u] + 1
                    nxt.append(v)
                else:
                    g = math.gcd(g, level[u] + 1 - level[v])
        queue = nxt
    return abs(g) or 1


def markov_structure(p, eps: float | None = None) -> MarkovStructure:
    """Classes, condensation DAG, absorbing states and periods of a chain.

    An edge ``i -> j`` exists when ``P[i, j] > eps``; ``eps`` defaults to
    ``1e-10 * max(P)``. A warning is emitted when any entry falls inside
    ``[eps/10, 10 eps]``.
    """
    if isinstance(p, TransitionMatrix):
        n, pm = p.n, p.matrix
    else:
        pm = clean_probabilities(p)
        n = _n_from_states(pm.shape[0])
    if eps is None:
        eps = DEFAULT_EPS_SCALE * float(pm.max())
    if eps <= 0:
        raise ValueError(f"positivity threshold must be positive, got {eps}")
    fragile = (pm >= eps / 10) & (pm <= 10 * eps)
    if fragile.any():
        warnings.warn(
            f"{int(fragile.sum())} transition probabilities lie within a decade of eps={eps:.3e}; "
            "the detected structure may depend on the threshold",
            FragileThresholdWarning,
            stacklevel=2,
        )

    support = pm > eps
    N = pm.shape[0]
    adj = [np.flatnonzero(support[i]).tolist() for i in range(N)]
    _, labels = connected_components(csr_matrix(support), directed=True, connection="strong")

    groups: dict[int, list] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(i)
    classes = sorted(groups.values(), key=lambda c: c[0])
    class_id = np.empty(N, dtype=int)
    for c, members in enumerate(classes):
        class_id[members] = c

    dag = {c: set() for c in range(len(classes))}
    for i in range(N):
        for j in adj[i]:
            if class_id[i] != class_id[j]:
                dag[int(class_id[i])].add(int(class_id[j]))
    dag = {c: sorted(s) for c, s in dag.items()}
    closed = tuple(c for c, s in dag.items() if not s)

    absorbing = tuple(i for i in range(N) if pm[i, i] > 1 - eps and adj[i] == [i])
    periods = tuple(_class_period(c, adj) for c in classes)
    return MarkovStructure(
        n=n,
        classes=tuple(tuple(c) for c in classes),
        class_dag=dag,
        absorbing=absorbing,
        periods=periods,
        irreducible=len(classes) == 1,
        aperiodic=all(d == 1 for d in periods),
        eps=float(eps),
        closed=closed,
    )


@dataclass(frozen=True)
class Distribution:
    n: int
    probabilities: np.ndarray
    iterations: int = 0

    def __post_init__(self):
        pr = np.array(self.probabilities, dtype=float, copy=True)
        if pr.min() < 0 or abs(pr.sum() - 1) > 1e-10:
            raise ValueError("distribution must be non-negative and sum to 1")
        pr.setflags(write=False)
        object.__setattr__(self, "probabilities", pr)

    def as_dict(self) -> dict:
        return dict(zip(state_labels(self.n), self.probabilities.tolist()))


def stationary_distribution(p) -> Distribution:
    """Stationary law of an irreducible aperiodic chain by power iteration.

    Starts from the uniform distribution and stops when successive iterates
    differ by at most ``POWER_TOL`` in l1. The result is cross-checked
    against the left Perron eigenvector.
    """
    tm = p if isinstance(p, TransitionMatrix) else TransitionMatrix(_n_from_states(np.shape(p)[0]), p, math.nan)
    st = markov_structure(tm)
    if not (st.irreducible and st.aperiodic):
        raise NotErgodic(
            f"chain is not ergodic: {len(st.classes)} communication classes, periods {st.periods}"
        )
    pm = tm.matrix
    N = pm.shape[0]
    pi = np.full(N, 1.0 / N)
    for it in range(1, POWER_MAX_ITER + 1):
        nxt = pi @ pm
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() <= POWER_TOL:
            pi = nxt
            break
        pi = nxt
    else:
        raise NoConvergence(f"power iteration did not converge in {POWER_MAX_ITER} steps")

    lam, vecs = np.linalg.eig(pm.T)
    k = int(np.argmin(np.abs(lam - 1)))
    ref = np.real(vecs[:, k])
    ref = ref / ref.sum()
    gap = np.max(np.abs(ref - pi))
    if gap > EIG_CROSSCHECK_TOL:
        raise ArithmeticError(f"power iteration and eigen-solve disagree by {gap:.3e}")
    return Distribution(tm.n, np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum(), it)


def expected_post_measurement(pi, projectors):
    """Mixture ``sum_i pi_i M_i`` of the outcome projectors, validated as a density."""
    probs = pi.probabilities if isinstance(pi, Distribution) else np.asarray(pi, dtype=float)
    if len(probs) != len(projectors):
        raise ValueError(f"{len(probs)} probabilities for {len(projectors)} projectors")
    rho = sum(w * np.asarray(m) for w, m in zip(probs, projectors))
    return validate_density(rho)


@dataclass(frozen=True)
class TauScanEntry:
    tau: float
    transition: TransitionMatrix
    structure: MarkovStructure

    @property
    def unique_absorbing(self) -> bool:
        st = self.structure
        return len(st.absorbing) == 1 and len(st.closed) == 1

    @property
    def ergodic(self) -> bool:
        return self.structure.irreducible and self.structure.aperiodic


@dataclass(frozen=True)
class TauScan:
    entries: tuple
    first_unique_absorbing: float | None
    first_ergodic: float | None

    @property
    def first_regime_tau(self) -> float | None:
        found = [t for t in (self.first_unique_absorbing, self.first_ergodic) if t is not None]
        return min(found) if found else None


def tau_scan(w, theta: ThetaMatrix, taus, eps: float | None = None, workers: int | None = None) -> TauScan:
    """Analyse the chain over a sorted grid of measurement periods.

    Records the first grid point with a unique absorbing state that is the
    only closed class, and the first where the chain is irreducible and
    aperiodic.
    """
    taus = [float(t) for t in taus]
    if not taus or any(t <= 0 for t in taus) or taus != sorted(taus):
        raise ValueError("tau grid must be a non-empty sorted list of positive values")

    def one(tau):
        pt = transition_matrix(w, theta, tau)
        return TauScanEntry(tau, pt, markov_structure(pt, eps))

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            entries = tuple(pool.map(one, taus))
    else:
        entries = tuple(one(t) for t in taus)
    absorb = next((e.tau for e in entries if e.unique_absorbing), None)
    ergo = next((e.tau for e in entries if e.ergodic), None)
    return TauScan(entries, absorb, ergo)
