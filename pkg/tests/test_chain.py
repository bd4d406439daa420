import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_period, reachability_classes
from qbnet.chain import (
    FragileThresholdWarning,
    TransitionMatrix,
    clean_probabilities,
    expected_post_measurement,
    limit_transition,
    markov_structure,
    stationary_distribution,
    tau_scan,
    transition_matrix,
)
from qbnet.consensus import consensus_as_lindblad, consensus_transition, path_graph
from qbnet.errors import NotErgodic, NotRelaxing, StochasticityError
from qbnet.lindblad import LindbladModel, amplitude_damping, build_generator, depolarizing, steady_state
from qbnet.measurement import measurement_setup, network_projectors, qubit_basis_from_angles, state_index

E = np.exp


def _setup(model, n, angles=(0.0, 0.0)):
    basis, projs, theta = measurement_setup(n, qubit_basis_from_angles(*angles))
    return build_generator(model, basis), theta, projs


def path3_exact(tau):
    """Weight-1 block of the 3-qubit path example from the spectrum {0, 1, 3} of the path Laplacian."""
    a = 1 / 3 + E(-tau) / 2 + E(-3 * tau) / 6
    b = 1 / 3 - E(-3 * tau) / 3
    c = 1 / 3 - E(-tau) / 2 + E(-3 * tau) / 6
    d = 1 / 3 + 2 * E(-3 * tau) / 3
    return a, b, c, d


def test_tau_zero_is_identity():
    w, theta, _ = _setup(depolarizing(2, 1.0), 2, (0.3, 0.2))
    np.testing.assert_allclose(transition_matrix(w, theta, 0.0).matrix, np.eye(4), atol=1e-12)


def test_path_example_entries():
    w, theta, _ = _setup(consensus_as_lindblad(path_graph(3)), 3)
    p = transition_matrix(w, theta, 1.0).matrix
    a, b, c, d = path3_exact(1.0)
    i001, i010, i100 = (state_index(s) for s in ((0, 0, 1), (0, 1, 0), (1, 0, 0)))
    assert p[i001, i001] == pytest.approx(a, abs=1e-12)
    assert p[i001, i010] == pytest.approx(b, abs=1e-12)
    assert p[i001, i100] == pytest.approx(c, abs=1e-12)
    assert p[i010, i010] == pytest.approx(d, abs=1e-12)


def test_amplitude_damping_half_life_chain():
    w, theta, _ = _setup(amplitude_damping(1, 1.0), 1)
    np.testing.assert_allclose(transition_matrix(w, theta, np.log(2)).matrix, [[1, 0], [0.5, 0.5]], atol=1e-12)


def test_rows_are_stochastic_for_random_models(rng):
    from oracles import random_model_ops

    for n in (1, 2):
        N = 2**n
        for _ in range(5):
            h, ops = random_model_ops(N, rng)
            w, theta, _ = _setup(LindbladModel(h, tuple(ops)), n, tuple(rng.uniform(0, 3, 2)))
            for tau in (0.05, 0.5, 3.0):
                p = transition_matrix(w, theta, tau).matrix
                assert p.min() >= -1e-9 and p.max() <= 1 + 1e-9
                np.testing.assert_allclose(p.sum(axis=1), 1, atol=1e-8)


def test_literal_theta_identity():
    w, theta, _ = _setup(amplitude_damping(2, 0.8), 2, (0.9, 0.4))
    t = theta.matrix
    from qbnet.lindblad import matrix_exp

    literal = t.T @ matrix_exp(w.matrix * 2.0) @ t
    # the literal product is indexed [to, from]; the chain is stored [from, to]
    np.testing.assert_allclose(transition_matrix(w, theta, 2.0).matrix, literal.T, atol=1e-12)
    p = transition_matrix(w, theta, 1.0).matrix
    np.testing.assert_allclose((p @ p).sum(axis=1), 1, atol=1e-12)


def test_collapse_breaks_semigroup_for_coherent_dynamics():
    # H = X/2 on one qubit: P_tau[0,1] = sin^2(tau/2); two collapsed steps differ from one long step
    x = np.array([[0, 1], [1, 0]]) / 2
    w, theta, _ = _setup(LindbladModel(x), 1)
    p1 = transition_matrix(w, theta, 1.0).matrix
    p2 = transition_matrix(w, theta, 2.0).matrix
    assert p1[0, 1] == pytest.approx(np.sin(0.5) ** 2, abs=1e-12)
    assert np.max(np.abs(p1 @ p1 - p2)) > 0.1


def test_consensus_populations_do_compose():
    # swap dynamics never feeds coherences back into populations, so collapse is invisible here
    p1 = consensus_transition(path_graph(3), 1.0).matrix
    p2 = consensus_transition(path_graph(3), 2.0).matrix
    np.testing.assert_allclose(p1 @ p1, p2, atol=1e-12)


def test_limit_examples():
    w, theta, _ = _setup(amplitude_damping(2, 1.0), 2)
    lim = limit_transition(w, theta).matrix
    np.testing.assert_allclose(lim, np.tile([1, 0, 0, 0], (4, 1)), atol=1e-10)

    w, theta, _ = _setup(depolarizing(2, 1.0), 2, (1.0, 0.5))
    np.testing.assert_allclose(limit_transition(w, theta).matrix, 0.25, atol=1e-10)

    w, theta, _ = _setup(consensus_as_lindblad(path_graph(2)), 2)
    with pytest.raises(NotRelaxing):
        limit_transition(w, theta)


@pytest.mark.parametrize("model", [amplitude_damping(2, 1.0), depolarizing(2, 0.6), amplitude_damping(1, 2.0)])
def test_limit_agrees_with_long_tau(model):
    n = int(np.log2(model.dim))
    w, theta, _ = _setup(model, n, (0.7, 0.2))
    tau = 50 / abs(steady_state(w).spectral_abscissa_nonzero_modes)
    gap = np.abs(transition_matrix(w, theta, tau).matrix - limit_transition(w, theta).matrix)
    assert gap.max() <= 1e-6


def test_structure_path_example():
    st_ = markov_structure(consensus_transition(path_graph(3), 1.0))
    lab = st_.labelled()
    assert lab["classes"] == [["000"], ["001", "010", "100"], ["011", "101", "110"], ["111"]]
    assert lab["absorbing"] == ["000", "111"]
    assert not st_.irreducible


@pytest.mark.parametrize("eps", [1e-12, 1e-11, 1e-10, 1e-9, 1e-8])
def test_structure_eps_invariance(eps):
    p = consensus_transition(path_graph(3), 1.0)
    ref = markov_structure(p)
    got = markov_structure(p, eps)
    assert got.classes == ref.classes and got.absorbing == ref.absorbing and got.periods == ref.periods


def test_structure_identity():
    st_ = markov_structure(np.eye(8))
    assert len(st_.classes) == 8 and st_.absorbing == tuple(range(8))


def test_structure_positive():
    p = np.full((4, 4), 0.25)
    st_ = markov_structure(p)
    assert st_.irreducible and st_.aperiodic


def test_structure_periodic_cycle():
    p = np.roll(np.eye(4), 1, axis=1)
    st_ = markov_structure(p)
    assert st_.irreducible and st_.periods == (4,) and not st_.aperiodic


def test_structure_dag():
    p = np.array([[0.5, 0.5, 0, 0], [0, 1, 0, 0], [0.2, 0, 0.3, 0.5], [0, 0, 0, 1.0]])
    st_ = markov_structure(p)
    assert st_.classes == ((0,), (1,), (2,), (3,))
    assert st_.class_dag == {0: [1], 1: [], 2: [0, 3], 3: []}
    assert st_.absorbing == (1, 3)
    assert st_.closed == (1, 3)


def test_fragile_warning():
    p = np.array([[1 - 5e-11, 5e-11], [0.5, 0.5]])
    with pytest.warns(FragileThresholdWarning):
        markov_structure(p, 1e-10)


def _random_sparse_chain(rng, N, density):
    support = rng.random((N, N)) < density
    p = rng.random((N, N)) * support
    empty = p.sum(axis=1) == 0
    p[empty, rng.integers(N, size=empty.sum())] = 1.0
    return p / p.sum(axis=1, keepdims=True)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 8, 16]), st.floats(0.05, 0.5))
def test_structure_matches_brute_force(seed, N, density):
    rng = np.random.default_rng(seed)
    p = _random_sparse_chain(rng, N, density)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FragileThresholdWarning)
        st_ = markov_structure(p, 1e-12)
    assert sorted(st_.classes) == reachability_classes(p > 1e-12)
    for c, d in zip(st_.classes, st_.periods):
        brute = brute_period(p > 1e-12, c[0])
        assert d == (brute or 1)


def test_stationary_examples():
    u = np.array([0.1, 0.2, 0.3, 0.4])
    pi = stationary_distribution(np.tile(u, (4, 1)))
    np.testing.assert_allclose(pi.probabilities, u, atol=1e-12)

    a, b = 0.3, 0.6
    pi = stationary_distribution(np.array([[1 - a, a], [b, 1 - b]]))
    np.testing.assert_allclose(pi.probabilities, [2 / 3, 1 / 3], atol=1e-12)

    s = np.array([[0.5, 0.2, 0.2, 0.1], [0.2, 0.3, 0.1, 0.4], [0.2, 0.1, 0.6, 0.1], [0.1, 0.4, 0.1, 0.4]])
    np.testing.assert_allclose(stationary_distribution(s).probabilities, 0.25, atol=1e-12)


def test_stationary_requires_ergodic():
    with pytest.raises(NotErgodic):
        stationary_distribution(np.eye(2))
    with pytest.raises(NotErgodic):
        stationary_distribution(np.array([[0, 1.0], [1.0, 0]]))


def test_expected_post_measurement_examples():
    projs = network_projectors(qubit_basis_from_angles(0.4, 0.9), 2)
    np.testing.assert_allclose(expected_post_measurement([1, 0, 0, 0], projs).matrix, projs[0], atol=1e-15)
    np.testing.assert_allclose(expected_post_measurement(np.full(4, 0.25), projs).matrix, np.eye(4) / 4, atol=1e-15)
    one = network_projectors(qubit_basis_from_angles(0, 0), 1)
    np.testing.assert_allclose(expected_post_measurement([2 / 3, 1 / 3], one).matrix, np.diag([2 / 3, 1 / 3]))
    with pytest.raises(ValueError):
        expected_post_measurement([1.0], one)


def test_tau_scan_regimes():
    w, theta, _ = _setup(amplitude_damping(2, 1.0), 2)
    scan = tau_scan(w, theta, [0.5, 1, 5, 20])
    assert scan.first_unique_absorbing == 0.5
    assert all(e.structure.absorbing == (0,) for e in scan.entries)

    w, theta, _ = _setup(amplitude_damping(2, 1.0), 2, (np.pi / 3, 0))
    scan = tau_scan(w, theta, [0.5, 1, 5, 20], workers=2)
    assert scan.first_ergodic is not None
    assert scan.entries[-1].ergodic
    assert [e.tau for e in scan.entries] == [0.5, 1, 5, 20]


def test_tau_scan_zero_generator():
    _, theta, _ = _setup(depolarizing(1, 1.0), 1)
    scan = tau_scan(np.zeros((4, 4)), theta, [1, 10, 100])
    for e in scan.entries:
        np.testing.assert_allclose(e.transition.matrix, np.eye(2), atol=1e-15)
        assert not e.structure.irreducible
    assert scan.first_regime_tau is None
    with pytest.raises(ValueError):
        tau_scan(np.zeros((4, 4)), theta, [2, 1])


def test_clean_probabilities_policy():
    np.testing.assert_array_equal(clean_probabilities([[1 + 5e-10 - 5e-10, -5e-10 + 5e-10]]), [[1, 0]])
    out = clean_probabilities([[1 + 5e-10, -5e-10]])
    assert out.min() == 0 and out.sum() == pytest.approx(1, abs=1e-15)
    with pytest.raises(StochasticityError):
        clean_probabilities([[1.1, -0.1]])
    with pytest.raises(StochasticityError):
        clean_probabilities([[0.5, 0.49]])
    with pytest.raises(StochasticityError):
        TransitionMatrix(1, [[0.5, 0.5 + 1e-6], [0, 1]], 1.0)
