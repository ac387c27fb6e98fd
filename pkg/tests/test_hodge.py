import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_network
from ivanet.hodge import (
    aggregate,
    bilateral_circulation,
    decompose,
    group_scores,
    rank_circulation,
    rank_potentials,
    top_circular_links,
    v_curve_data,
)
from ivanet.network import FlowNetwork, from_edges
from ivanet.oracles import hodge_pseudoinverse


class TestSmallCases:
    def test_directed_tree_is_pure_gradient(self):
        net = from_edges([(0, 1, 3.0), (1, 2, 2.0), (1, 3, 1.0)])
        d = decompose(net)
        assert np.abs(d.circular).max() < 1e-12
        np.testing.assert_allclose(d.potential_flow, d.net_flow, atol=1e-12)
        assert d.phi[0] > d.phi[1] > d.phi[3]

    def test_equal_three_cycle_is_pure_circulation(self):
        net = from_edges([(0, 1, 5.0), (1, 2, 5.0), (2, 0, 5.0)])
        d = decompose(net)
        np.testing.assert_array_equal(d.phi, 0.0)
        np.testing.assert_array_equal(d.circular, d.net_flow)
        np.testing.assert_allclose(d.circular_strength(), [10.0, 10.0, 10.0])

    def test_two_node_hand_example(self):
        # net flow 3 from a to b; a single pair so everything is gradient
        net = from_edges([("a", "b", 5.0), ("b", "a", 2.0)])
        d = decompose(net)
        np.testing.assert_allclose(d.phi, [1.5, -1.5])
        np.testing.assert_allclose(d.circular, 0.0, atol=1e-15)
        np.testing.assert_allclose(bilateral_circulation(net), [[0, 2], [2, 0]])

    def test_components_are_gauged_separately(self):
        net = from_edges([(0, 1, 1.0), (2, 3, 4.0)], nodes=[0, 1, 2, 3, 4])
        d = decompose(net)
        assert d.meta["n_components"] == 3
        assert d.phi[0] + d.phi[1] == pytest.approx(0.0)
        assert d.phi[2] + d.phi[3] == pytest.approx(0.0)
        assert d.phi[4] == 0.0

    def test_self_loops_are_ignored(self):
        W = np.array([[7.0, 1.0], [0.0, 3.0]])
        d = decompose(FlowNetwork((("a", "*"), ("b", "*")), W))
        np.testing.assert_allclose(d.phi, [0.5, -0.5])


class TestAgainstOracle:
    @pytest.mark.parametrize("density", [0.05, 0.2, 0.6, 1.0])
    def test_potential_matches_pseudoinverse(self, rng, density):
        for _ in range(5):
            net = random_network(rng, int(rng.integers(2, 60)), density)
            d = decompose(net)
            o = hodge_pseudoinverse(net)
            np.testing.assert_allclose(d.phi, o.phi, atol=1e-10)
            np.testing.assert_allclose(d.circular, o.circular, atol=1e-10)

    def test_properties(self, rng):
        net = random_network(rng, 80, 0.3)
        d = decompose(net)
        assert d.residual < 1e-12
        through = np.abs(d.net_flow).sum(axis=1)
        assert np.all(np.abs(d.circular.sum(axis=1)) <= 1e-9 * np.maximum(through, 1.0))
        inner = (d.potential_flow * d.circular).sum()
        assert abs(inner) <= 1e-9 * np.linalg.norm(d.potential_flow) * np.linalg.norm(d.circular)
        np.testing.assert_allclose(d.divergence, d.net_flow.sum(axis=1))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 30), c=st.floats(1e-3, 1e3))
def test_scaling_scales_potential(seed, n, c):
    net = random_network(np.random.default_rng(seed), n, 0.4)
    a = decompose(net)
    b = decompose(net.with_weights(c * net.weights))
    np.testing.assert_allclose(b.phi, c * a.phi, rtol=1e-9, atol=1e-12 * c)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 30))
def test_relabeling_permutes_potential(seed, n):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n, 0.4)
    perm = rng.permutation(n)
    a = decompose(net)
    b = decompose(net.subnetwork(perm))
    np.testing.assert_allclose(b.phi, a.phi[perm], atol=1e-10)


class TestGroups:
    def _net(self):
        nodes = (("X", "a"), ("X", "b"), ("Y", "a"), ("Y", "b"), ("Z", "a"))
        W = np.zeros((5, 5))
        W[0, 1] = 9.0  # within X, dropped by country aggregation
        W[0, 2] = 4.0
        W[1, 3] = 1.0
        W[2, 4] = 2.0
        W[4, 0] = 3.0
        return FlowNetwork(nodes, W)

    def test_aggregate_by_country(self):
        agg = aggregate(self._net(), "country")
        assert agg.labels == ["X", "Y", "Z"]
        np.testing.assert_array_equal(agg.weights, [[0, 5, 0], [0, 0, 2], [3, 0, 0]])
        assert agg.meta["dropped_within_group"] == 9.0

    def test_aggregate_by_sector(self):
        agg = aggregate(self._net(), "sector")
        assert agg.labels == ["a", "b"]
        np.testing.assert_array_equal(agg.weights, [[0, 9], [0, 0]])
        assert agg.meta["dropped_within_group"] == 10.0

    def test_group_scores_modes(self):
        net = self._net()
        a = group_scores(net, "country")
        b = group_scores(net, "country", "decompose-then-aggregate")
        assert a.labels == b.labels == ["X", "Y", "Z"]
        assert a.mode != b.mode
        with pytest.raises(ValueError):
            group_scores(net, "country", "nope")
        with pytest.raises(ValueError):
            aggregate(net, "continent")

    def test_rankings_break_ties_by_label(self):
        net = from_edges([("b", "a", 1.0), ("c", "a", 1.0)])
        d = decompose(net)
        ranks = rank_potentials(d, top=3)
        assert [l for l, _ in ranks["highest"]] == ["b", "c", "a"]
        assert [l for l, _ in ranks["lowest"]][0] == "a"
        assert len(rank_circulation(d, top=2)) == 2
        assert [row[0] for row in v_curve_data(d)] == ["b", "a", "c"]


class TestTopLinks:
    def test_exactly_k_largest(self, rng):
        net = random_network(rng, 30, 0.5)
        d = decompose(net)
        links = top_circular_links(d, 20)
        assert len(links) == 20
        vals = [w for _, _, w in links]
        assert vals == sorted(vals, reverse=True)
        positive = np.sort(d.circular[d.circular > 0])[::-1]
        np.testing.assert_allclose(vals, positive[:20])

    def test_tree_has_no_circular_links(self):
        d = decompose(from_edges([(0, 1, 1.0), (1, 2, 1.0)]))
        assert all(w < 1e-12 for _, _, w in top_circular_links(d, 20))
