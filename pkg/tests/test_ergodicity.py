import numpy as np
import pytest

from sociallearn import (
    BackwardProduct,
    ContractViolation,
    GraphSchedule,
    LambdaSchedule,
    ParameterError,
    absolute_probability_residual,
    belief_rate_estimate,
    build_weight_matrix,
    complete_edges,
    ergodicity_coefficient,
    kl_divergence,
    mixing_envelope,
    run_simulation,
    track_product,
)
from sociallearn import AgentModel, CategoricalDistribution as Cat, EdgeSet, Scenario

from conftest import FLAT_FAMILY, HYPS, PATH10_FAMILY, random_stochastic, path10_graph, path10_scenario


def path10_matrices(lam, count, n=10):
    g = path10_graph(n)
    for k in range(count):
        yield build_weight_matrix(g.edges_at(k), lam(k))


class TestErgodicityCoefficient:
    def test_rank_one(self):
        A = np.tile([0.2, 0.3, 0.5], (3, 1))
        assert ergodicity_coefficient(A) == pytest.approx(0.0, abs=1e-15)

    def test_identity(self):
        assert ergodicity_coefficient(np.eye(2)) == 1.0

    def test_two_by_two(self):
        assert ergodicity_coefficient(np.array([[0.75, 0.25], [0.25, 0.75]])) == pytest.approx(0.5)

    def test_rejects_non_stochastic(self):
        with pytest.raises(ContractViolation):
            ergodicity_coefficient(np.array([[0.5, 0.2], [0.5, 0.5]]))


class TestTrackProduct:
    def test_doubly_stochastic_chain(self):
        T = np.array([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]])
        diags = list(track_product([T] * 40))
        spreads = [d.row_spread for d in diags]
        assert spreads[-1] < 1e-10
        # geometric: each step shrinks the spread by the second eigenvalue 1/4
        assert spreads[5] / spreads[4] == pytest.approx(0.25, rel=1e-6)
        np.testing.assert_allclose(diags[-1].phi_estimate, 1 / 3, atol=1e-10)

    def test_path10_constant_mixes(self):
        # regression: first k with pi < 1e-3 for lambda = 0.5, frozen from the first run
        first = next(d.k for d in track_product(path10_matrices(LambdaSchedule.constant(0.5), 5000), B=3)
                     if d.pi < 1e-3)
        assert first == 1135

    def test_matches_naive_product(self):
        rng = np.random.default_rng(0)
        mats = [random_stochastic(rng, 4, sparsity=0.4) for _ in range(1000)]
        P = np.eye(4)
        bp = BackwardProduct(4)
        for M in mats:
            P = M @ P
            bp.push(M)
        assert np.array_equal(P, bp.matrix)

    def test_renormalization_keeps_product_stochastic(self):
        rng = np.random.default_rng(1)
        bp = BackwardProduct(5)
        for _ in range(5000):
            bp.push(random_stochastic(rng, 5))
        assert bp.max_renorm < 1e-8
        np.testing.assert_allclose(bp.matrix.sum(axis=1), 1.0, atol=1e-14)

    def test_column_kind(self):
        T = np.array([[1.0, 0.5], [0.0, 0.5]])
        bp = BackwardProduct(2, kind="column")
        for _ in range(60):
            bp.push(T)
        d = bp.diagnostics()
        # T^k = [[1, 1 - 2^-k], [0, 2^-k]]: every column tends to (1, 0)
        assert d.pi < 1e-12
        np.testing.assert_allclose(d.phi_estimate, [1.0, 0.0], atol=1e-12)

    def test_diagnostic_invariants(self):
        rng = np.random.default_rng(2)
        for d in track_product([random_stochastic(rng, 4, sparsity=0.5) for _ in range(50)], B=1):
            assert 0 <= d.pi <= 1
            assert d.row_spread <= 2 * d.pi + 1e-12
            assert d.phi_estimate.sum() == pytest.approx(1.0)


class TestAbsoluteProbability:
    def test_uniform_doubly_stochastic(self):
        T = np.array([[0.5, 0.5], [0.5, 0.5]])
        assert absolute_probability_residual([0.5, 0.5], T, [0.5, 0.5]) == 0.0

    def test_stationary_vector(self):
        T = np.array([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.1, 0.1, 0.8]])
        v = np.ones(3) / 3
        for _ in range(5000):  # power iteration oracle
            v = v @ T
        assert absolute_probability_residual(v, T, v) <= 1e-10

    def test_hand_computed(self):
        T = np.array([[1.0, 0.0], [0.5, 0.5]])
        assert absolute_probability_residual([0.5, 0.5], T, [0.5, 0.5]) == pytest.approx(0.25)

    def test_rejects_non_stochastic(self):
        with pytest.raises(ParameterError):
            absolute_probability_residual([0.5, 0.6], np.eye(2), [0.5, 0.5])


class TestBeliefRate:
    def test_single_agent_rate(self):
        sc = Scenario([AgentModel(Cat.bernoulli(0.7), PATH10_FAMILY)], HYPS)
        tr = run_simulation(sc, GraphSchedule.static(EdgeSet(1)), LambdaSchedule.constant(0.5),
                            horizon=10_000, seed=0, record_every=1)
        truth = Cat.bernoulli(0.7)
        expected = kl_divergence(truth, PATH10_FAMILY["theta2"]) - kl_divergence(truth, PATH10_FAMILY["theta1"])
        slope = belief_rate_estimate(tr, "theta1", "theta2")[0]
        assert slope == pytest.approx(expected, rel=0.05)

    def test_uninformative_agent(self):
        sc = Scenario([AgentModel(Cat.bernoulli(0.5), PATH10_FAMILY)], HYPS)
        tr = run_simulation(sc, GraphSchedule.static(EdgeSet(1)), LambdaSchedule.constant(0.5),
                            horizon=10_000, seed=0, record_every=1)
        assert abs(belief_rate_estimate(tr, "theta1", "theta2")[0]) < 0.05

    def test_network_rates_agree(self):
        tr = run_simulation(path10_scenario(), path10_graph(), LambdaSchedule.constant(0.5),
                            horizon=3000, seed=0, record_every=1)
        s = belief_rate_estimate(tr, "theta1", "theta2")
        assert np.all(s < 0)
        assert (s.max() - s.min()) <= 0.2 * np.abs(s).max()

    def test_network_rate_is_stationary_weighted_gap(self):
        # left Perron vector of the 3-step product weights agent 1's KL gap
        tr = run_simulation(path10_scenario(), path10_graph(), LambdaSchedule.constant(0.5),
                            horizon=20_000, seed=0, record_every=10)
        W = build_weight_matrix(path10_graph().edges_at(0), 0.5).T
        w, v = np.linalg.eig(W.T)
        phi = np.real(v[:, np.argmax(np.real(w))])
        phi /= phi.sum()
        gap = kl_divergence(Cat.bernoulli(0.7), PATH10_FAMILY["theta2"]) - kl_divergence(Cat.bernoulli(0.7), PATH10_FAMILY["theta1"])
        s = belief_rate_estimate(tr, "theta1", "theta2")
        assert np.mean(s) == pytest.approx(phi[0] * gap, rel=0.1)

    def test_needs_enough_points(self):
        tr = run_simulation(path10_scenario(), path10_graph(), LambdaSchedule.constant(0.5), horizon=50, record_every=1)
        with pytest.raises(ParameterError):
            belief_rate_estimate(tr, "theta1", "theta2")


class TestMixingBounds:
    def test_envelope_shape(self):
        env = mixing_envelope(3, 2, np.arange(5))
        assert env[0] == 2.0 and np.all(np.diff(env) < 0)

    def test_product_of_windows_positive(self):
        # n-1 windows of a B-connected chain with lambda = 1 give a positive
        # product, hence pi <= 1 - n * eta^((n-1)B) per block of n-1 windows
        n, B = 4, 2
        g = GraphSchedule.seeded_random(n, B, seed=5)
        bp = BackwardProduct(n, B=B)
        for k in range((n - 1) * B):
            bp.push(build_weight_matrix(g.edges_at(k), 1.0).T)
        assert bp.matrix.min() >= (1 / n) ** ((n - 1) * B) - 1e-15
