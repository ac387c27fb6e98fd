import numpy as np
import pytest

from conftest import planted_two_blocks, random_network
from ivanet.community import (
    canonical_labels,
    detect_communities,
    label_regions,
    make_partition,
    overlap_matrix,
    partition_top_k,
    sankey_links,
    threshold_scan,
)
from ivanet.mapequation import codelength, module_stats, stationary_visits
from ivanet.network import FlowNetwork, from_edges
from ivanet.oracles import map_equation, partition_bruteforce, teleporting_walk


def two_triangles(bridge: float = 0.1) -> FlowNetwork:
    edges = [(0, 1, 1), (1, 2, 1), (2, 0, 1), (3, 4, 1), (4, 5, 1), (5, 3, 1), (2, 3, bridge), (5, 0, bridge)]
    return from_edges(edges)


class TestVisits:
    def test_matches_dense_eigenvector(self, rng):
        for n in (3, 7, 15):
            net = random_network(rng, n, 0.4)
            v = stationary_visits(net, 0.15)
            _, p = teleporting_walk(net.weights, 0.15)
            np.testing.assert_allclose(v.p, p, atol=1e-12)

    def test_dangling_nodes_teleport_uniformly(self):
        net = from_edges([(0, 1, 1.0), (1, 2, 1.0)])
        v = stationary_visits(net, 0.15)
        _, p = teleporting_walk(net.weights, 0.15)
        np.testing.assert_allclose(v.p, p, atol=1e-12)
        assert v.p.sum() == pytest.approx(1.0)

    def test_rejects_bad_teleport(self):
        with pytest.raises(ValueError):
            stationary_visits(two_triangles(), 0.0)


class TestCodelength:
    def test_matches_direct_evaluation(self, rng):
        for trial in range(20):
            n = int(rng.integers(2, 9))
            net = random_network(rng, n, 0.5)
            labels = rng.integers(0, 3, n)
            v = stationary_visits(net)
            expected = map_equation(net.weights, v.p, 0.15, labels)
            assert codelength(net, v, labels) == pytest.approx(expected, abs=1e-12)

    def test_single_module_is_node_entropy(self):
        net = two_triangles()
        v = stationary_visits(net)
        p = v.p
        assert codelength(net, v, np.zeros(6, int)) == pytest.approx(-(p * np.log2(p)).sum(), abs=1e-12)

    def test_exit_rates_include_teleportation(self):
        net = two_triangles()
        v = stationary_visits(net)
        labels = np.array([0, 0, 0, 1, 1, 1])
        stats = module_stats(net, v, labels)
        W = net.weights
        out = W.sum(axis=1)
        q0 = sum(v.p[a] * (0.85 * W[a, 3:].sum() / out[a] + 0.15 * 3 / 6) for a in range(3))
        assert stats.exit[0] == pytest.approx(q0, abs=1e-14)

    def test_unrecorded_mode_ignores_teleport_steps(self):
        net = two_triangles()
        v = stationary_visits(net)
        labels = np.array([0, 0, 0, 1, 1, 1])
        stats = module_stats(net, v, labels, recorded=False)
        W = net.weights
        out = W.sum(axis=1)
        q0 = sum(v.p[a] * W[a, 3:].sum() / out[a] for a in range(3))
        assert stats.exit[0] == pytest.approx(q0, abs=1e-14)


class TestDetection:
    def test_two_triangles(self):
        part = detect_communities(two_triangles(), seeds=3)
        assert part.n_communities == 2
        assert set(part.members(0)) in ({0, 1, 2}, {3, 4, 5})

    def test_matches_exhaustive_search(self, rng):
        for trial in range(15):
            n = int(rng.integers(3, 8))
            net = random_network(rng, n, float(rng.uniform(0.2, 0.8)))
            part = detect_communities(net, seeds=5, rng_seed=trial)
            bf = partition_bruteforce(net)
            assert part.codelength == pytest.approx(bf.codelength, abs=1e-10)

    def test_complete_uniform_graph_is_one_community(self):
        W = np.ones((10, 10)) - np.eye(10)
        net = FlowNetwork(tuple((str(i), "*") for i in range(10)), W)
        assert detect_communities(net).n_communities == 1

    def test_planted_blocks(self):
        net, truth = planted_two_blocks(3)
        part = detect_communities(net, seeds=2, rng_seed=5)
        assert part.n_communities == 2
        assert len(set(zip(part.assignment, truth))) == 2

    def test_reproducible_for_fixed_seed(self, rng):
        net = random_network(rng, 40, 0.1)
        a = detect_communities(net, seeds=4, rng_seed=11)
        b = detect_communities(net, seeds=4, rng_seed=11)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        assert a.codelength == b.codelength

    def test_never_worse_than_one_module(self, rng):
        for _ in range(10):
            net = random_network(rng, 20, 0.3)
            v = stationary_visits(net)
            part = detect_communities(net, seeds=2, visits=v)
            assert part.codelength <= codelength(net, v, np.zeros(20, int)) + 1e-12

    def test_labels_sorted_by_size(self):
        labels = canonical_labels([5, 5, 2, 7, 7, 7])
        np.testing.assert_array_equal(labels, [1, 1, 2, 0, 0, 0])


class TestThresholdScan:
    def test_active_subnetwork(self):
        net = two_triangles(bridge=0.1)
        part, idx = partition_top_k(net, 6)
        assert idx.tolist() == list(range(6))
        assert part.n_communities == 2

    def test_selects_largest_k_with_two_large(self):
        net, _ = planted_two_blocks(0, n=30)
        scan = threshold_scan(net, 200, 870, 335, size_floor=10, seeds=2)
        assert [p.num_large for p in scan.points] == [2, 2, 2]
        assert scan.selected_k == 870
        assert scan.counts() == {200: 2, 535: 2, 870: 2}

    def test_no_selection_when_never_split(self):
        W = np.ones((8, 8)) - np.eye(8)
        net = FlowNetwork(tuple((str(i), "*") for i in range(8)), W)
        scan = threshold_scan(net, 56, 56, 1, size_floor=2, seeds=1)
        assert scan.selected_k is None

    def test_bad_range(self):
        with pytest.raises(ValueError):
            threshold_scan(two_triangles(), 5, 3, 1, 1)


class TestLabels:
    def test_region_purity(self):
        nodes = tuple((c, "A") for c in ("DEU", "FRA", "USA", "JPN", "CHN"))
        W = np.ones((5, 5)) - np.eye(5)
        net = FlowNetwork(nodes, W)
        part = make_partition(net, stationary_visits(net), [0, 0, 0, 1, 1])
        labs = label_regions(part, {"DEU": "Europe", "FRA": "Europe", "USA": "Pacific", "JPN": "Pacific", "CHN": "Pacific"})
        assert labs[0].dominant_region == "Europe"
        assert labs[0].purity == pytest.approx(2 / 3)
        assert labs[1].purity == 1.0

    def test_sankey_overlap(self):
        net = two_triangles()
        v = stationary_visits(net)
        a = make_partition(net, v, [0, 0, 0, 1, 1, 1])
        b = make_partition(net, v, [0, 0, 1, 1, 1, 1])
        M = overlap_matrix(a, b)
        assert M.sum() == 6
        links = sankey_links(a, b)
        # b is relabelled by size: its 4-node community becomes 0
        assert {(l["community_a"], l["community_b"], l["node_overlap"]) for l in links} == {
            (0, 0, 1), (0, 1, 2), (1, 0, 3)
        }
