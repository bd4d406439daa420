import numpy as np
import pytest

from qbnet.consensus import InteractionGraph, path_graph
from qbnet.hilbert import DensityOp, basis_ket, projector
from qbnet.lindblad import LindbladModel, amplitude_damping
from qbnet.simulate import (
    TrajectoryConfig,
    batch_run,
    derive_seed,
    empirical_transition,
    outcome_histogram,
    outcome_kernel,
    run_trajectory,
)


def test_tau_zero_is_constant():
    rec = run_trajectory(TrajectoryConfig(path_graph(3), 0.0, 200, "011", seed=3))
    assert set(rec.bitstrings()) == {"011"}


def test_zero_generator_is_constant():
    model = LindbladModel(np.zeros((4, 4)))
    rec = run_trajectory(TrajectoryConfig(model, 5.0, 200, (1, 0), seed=3))
    assert set(rec.outcomes.tolist()) == {2}


def test_orbit_confinement():
    rec = run_trajectory(TrajectoryConfig(path_graph(4), 1.0, 2000, "0110", seed=11))
    weights = {s.count("1") for s in rec.bitstrings()}
    assert weights == {2}
    assert len(set(rec.bitstrings())) == 6


def test_empirical_transition_examples():
    class R:
        def __init__(self, o):
            self.outcomes = np.array(o)

    emp = empirical_transition([R([0, 1, 0, 1, 1])], 1)
    np.testing.assert_array_equal(emp.counts, [[0, 2], [1, 1]])
    np.testing.assert_allclose(emp.frequencies, [[0, 1], [0.5, 0.5]])
    emp = empirical_transition([R([0, 0, 0])], 1)
    assert np.isnan(emp.frequencies[1]).all() and not emp.visited[1]
    with pytest.raises(ValueError):
        empirical_transition([], 1)


def test_determinism_and_seed_injectivity():
    cfg = TrajectoryConfig(amplitude_damping(2, 0.5), 1.0, 500, "11", seed=99)
    a = run_trajectory(cfg).outcomes
    b = run_trajectory(cfg).outcomes
    np.testing.assert_array_equal(a, b)
    seeds = {derive_seed(7, k) for k in range(100000)}
    assert len(seeds) == 100000
    assert derive_seed(0, 1) != derive_seed(1, 0)


def test_parallel_matches_serial():
    cfg = TrajectoryConfig(path_graph(3), 0.5, 300, "001", seed=5)
    serial = batch_run(cfg, 8, workers=1)
    parallel = batch_run(cfg, 8, workers=4)
    for s, p in zip(serial, parallel):
        np.testing.assert_array_equal(s.outcomes, p.outcomes)
    assert any((serial[0].outcomes != r.outcomes).any() for r in serial[1:])


def test_single_edge_binomial():
    g = InteractionGraph(2, {(1, 2): 1.0})
    tau = 0.4
    recs = batch_run(TrajectoryConfig(g, tau, 100, "01", seed=2024), 100)
    emp = empirical_transition(recs, 2)
    p = (1 - np.exp(-2 * tau)) / 2
    n = emp.visits[1]
    se = np.sqrt(p * (1 - p) / n)
    assert abs(emp.frequencies[1, 2] - p) <= 3 * se
    assert emp.counts[1, 0] == 0 and emp.counts[1, 3] == 0


def test_density_initial_state():
    rho = projector(basis_ket(1, 2))
    recs = batch_run(TrajectoryConfig(path_graph(1), 1.0, 1, DensityOp(rho), seed=1), 50)
    assert all(r.outcomes[0] == 1 for r in recs)
    mixed = np.eye(4) / 4
    recs = batch_run(TrajectoryConfig(amplitude_damping(2, 1.0), 1.0, 1, mixed, seed=1), 4000)
    h = np.bincount([r.outcomes[0] for r in recs], minlength=4) / 4000
    np.testing.assert_allclose(h, 0.25, atol=0.03)


def test_kernel_rows_and_histogram():
    cfg = TrajectoryConfig(amplitude_damping(1, 1.0), np.log(2), 10, "1")
    k = outcome_kernel(cfg)
    np.testing.assert_allclose(k.probabilities, [[1, 0], [0.5, 0.5]], atol=1e-12)
    recs = batch_run(cfg, 20)
    h = outcome_histogram(recs, 1, burn_in=10)
    assert h[0] > 0.9


def test_config_validation():
    with pytest.raises(ValueError):
        TrajectoryConfig(path_graph(2), 1.0, 0, "00")
    with pytest.raises(ValueError):
        TrajectoryConfig(path_graph(2), -1.0, 5, "00")
    with pytest.raises(ValueError):
        run_trajectory(TrajectoryConfig(path_graph(2), 1.0, 5, "000"))
