import filecmp
import os

import numpy as np
import pytest

from graphfl.datazoo import (
    CsbmParams,
    attribute_splitter,
    community_splitter,
    fedcsbm_generate,
    instance_space_splitter,
    label_space_splitter,
    load_federated_dataset,
    random_splitter,
    resplit_from_manifest,
    save_federated_dataset,
)
from graphfl.errors import MissingProps, TooFewGroups, TooManyClients
from graphfl.graph import (
    GraphCollection,
    build_graph,
    edge_homophily,
    graphs_equal,
)


def clique_edges(nodes):
    return [(u, v) for i, u in enumerate(nodes) for v in nodes[i + 1:]]


def random_source(rng, n=30, p=0.2):
    mask = np.triu(rng.random((n, n)) < p, k=1)
    labels = rng.integers(0, 3, size=n)
    ids = rng.permutation(n)
    masks = {"train": ids[: n // 2], "valid": ids[n // 2 : 3 * n // 4], "test": ids[3 * n // 4 :]}
    return build_graph(np.argwhere(mask), n, features=rng.normal(size=(n, 3)),
                       labels=labels, masks=masks)


def client_node_sets(ds, source):
    """Recover each client's original node ids via feature-row matching."""
    sets = []
    for g in ds.clients:
        ids = set()
        for row in g.features:
            match = np.flatnonzero((source.features == row).all(axis=1))
            assert len(match) == 1
            ids.add(int(match[0]))
        sets.append(ids)
    return sets


class TestRandomSplitter:
    def test_even_partition(self):
        rng = np.random.default_rng(0)
        g = random_source(rng, n=10)
        ds = random_splitter(g, 5, seed=1)
        sizes = [c.num_nodes for c in ds.clients]
        assert sizes == [2, 2, 2, 2, 2]
        sets = client_node_sets(ds, g)
        assert set().union(*sets) == set(range(10))
        for i in range(5):
            for j in range(i + 1, 5):
                assert not (sets[i] & sets[j])

    def test_single_client_identity(self):
        rng = np.random.default_rng(1)
        g = random_source(rng, n=12, p=0.3)
        ds = random_splitter(g, 1, drop_edge_frac=0.0, seed=3)
        assert graphs_equal(ds.clients[0], g)

    def test_exact_edge_drop_count(self):
        # a clique of 10 nodes split into 1 client has 45 edges; frac=0.5 -> 22 remain
        g = build_graph(clique_edges(list(range(10))), 10)
        ds = random_splitter(g, 1, drop_edge_frac=0.5, seed=5)
        assert ds.clients[0].num_edges == 45 - 45 // 2

        # 40-edge graph, frac 0.5 -> exactly 20 undirected edges remain
        edges = [(i, (i + k) % 20) for i in range(20) for k in (1, 2)]
        g2 = build_graph(edges, 20)
        assert g2.num_edges == 40
        ds2 = random_splitter(g2, 1, drop_edge_frac=0.5, seed=6)
        assert ds2.clients[0].num_edges == 20

    def test_too_many_clients(self):
        g = build_graph([(0, 1)], 2)
        with pytest.raises(TooManyClients):
            random_splitter(g, 3, seed=0)

    def test_overlap_duplicates_nodes(self):
        rng = np.random.default_rng(2)
        g = random_source(rng, n=20)
        ds = random_splitter(g, 4, overlap=True, overlap_frac=0.25, seed=7)
        total = sum(c.num_nodes for c in ds.clients)
        assert total == 20 + 5

    def test_near_equal_sizes(self):
        rng = np.random.default_rng(3)
        g = random_source(rng, n=11)
        ds = random_splitter(g, 3, seed=8)
        sizes = sorted(c.num_nodes for c in ds.clients)
        assert max(sizes) - min(sizes) <= 1


class TestCommunitySplitter:
    def test_two_cliques(self):
        g = build_graph(clique_edges([0, 1, 2, 3]) + clique_edges([4, 5, 6, 7]), 8)
        ds = community_splitter(g, 2, seed=0)
        assert sorted(c.num_nodes for c in ds.clients) == [4, 4]
        assert sum(c.num_edges for c in ds.clients) == g.num_edges  # zero edges lost

    def test_single_client_whole_graph(self):
        rng = np.random.default_rng(4)
        g = random_source(rng, n=15, p=0.3)
        ds = community_splitter(g, 1, seed=0)
        assert graphs_equal(ds.clients[0], g)

    def test_fallback_when_too_few_communities(self):
        g = build_graph(clique_edges(list(range(8))), 8)  # K8: one community
        ds = community_splitter(g, 3, seed=1)
        assert ds.num_clients == 3
        assert all(c.num_nodes > 0 for c in ds.clients)
        assert sum(c.num_nodes for c in ds.clients) == 8

    def test_homophily_improves_on_homophilic_graph(self):
        # mirror of the federated homophily-increase effect, at splitter level
        deltas = []
        for seed in range(5):
            params = CsbmParams(n=400, p=4, d=10, mu=0.0, phi_per_client=(0.8,), seed=seed)
            g = fedcsbm_generate(params).clients[0]
            ds = community_splitter(g, 4, seed=seed)
            same = tot = 0
            for c in ds.clients:
                edges = c.undirected_edges()
                if len(edges) == 0:
                    continue
                same += int(np.sum(c.labels[edges[:, 0]] == c.labels[edges[:, 1]]))
                tot += len(edges)
            deltas.append(same / tot - edge_homophily(g))
        assert all(d >= 0 for d in deltas)


class TestAttributeSplitter:
    def make(self, sizes):
        vals = []
        for i, s in enumerate(sizes):
            vals.extend([f"g{i}"] * s)
        n = len(vals)
        return build_graph([], n, node_attrs={"org": vals})

    def test_one_group_per_client(self):
        g = self.make([3, 2, 4])
        ds = attribute_splitter(g, "org", 3)
        assert sorted(c.num_nodes for c in ds.clients) == [2, 3, 4]

    def test_too_few_groups(self):
        g = self.make([5])
        with pytest.raises(TooFewGroups):
            attribute_splitter(g, "org", 2)

    def test_greedy_balancing(self):
        # groups 5,4,3,3,2,1 onto 3 clients -> sizes {6,6,6}
        g = self.make([5, 4, 3, 3, 2, 1])
        ds = attribute_splitter(g, "org", 3)
        assert sorted(c.num_nodes for c in ds.clients) == [6, 6, 6]

    def test_unknown_attribute(self):
        g = self.make([2, 2])
        with pytest.raises(Exception):
            attribute_splitter(g, "venue", 2)


class TestLabelSpaceSplitter:
    def make_collection(self, counts, rng):
        graphs, labels = [], []
        for cls, cnt in enumerate(counts):
            for _ in range(cnt):
                graphs.append(build_graph([(0, 1)], 2, features=rng.normal(size=(2, 2))))
                labels.append(cls)
        return GraphCollection(graphs=graphs, graph_labels=np.asarray(labels))

    def test_uniform_alpha_matches_global_histogram(self):
        # alpha -> huge: per-client class histogram within TV 0.05 of global
        rng = np.random.default_rng(5)
        coll = self.make_collection([2000, 2000], rng)
        global_hist = np.array([0.5, 0.5])
        for seed in range(5):
            ds = label_space_splitter(coll, 4, alpha=1e4, seed=seed)
            for c in ds.clients:
                counts = np.bincount(c.graph_labels, minlength=2)
                hist = counts / counts.sum()
                tv = 0.5 * np.abs(hist - global_hist).sum()
                assert tv < 0.05

    def test_single_client(self):
        rng = np.random.default_rng(6)
        coll = self.make_collection([5, 5], rng)
        ds = label_space_splitter(coll, 1, alpha=1.0, seed=0)
        assert len(ds.clients[0]) == 10

    def test_small_alpha_concentrates(self):
        # alpha=0.1, N=4, 2 classes: max per-client class share averages > 0.7
        rng = np.random.default_rng(7)
        coll = self.make_collection([2000, 2000], rng)
        shares = []
        for seed in range(5):
            ds = label_space_splitter(coll, 4, alpha=0.1, seed=seed)
            for cls in (0, 1):
                per_client = np.array([np.count_nonzero(c.graph_labels == cls) for c in ds.clients])
                shares.append(per_client.max() / per_client.sum())
        assert np.mean(shares) > 0.7

    def test_counts_conserved_and_nonempty(self):
        rng = np.random.default_rng(8)
        coll = self.make_collection([40, 25, 10], rng)
        for seed in range(5):
            ds = label_space_splitter(coll, 6, alpha=0.2, seed=seed)
            assert sum(len(c) for c in ds.clients) == 75
            assert all(len(c) >= 1 for c in ds.clients)

    def test_graph_input_splits_labeled_nodes(self):
        rng = np.random.default_rng(9)
        g = random_source(rng, n=40)
        ds = label_space_splitter(g, 4, alpha=0.5, seed=1)
        assert sum(c.num_nodes for c in ds.clients) == 40
        assert all(c.num_nodes >= 1 for c in ds.clients)


class TestInstanceSpaceSplitter:
    def make_collection(self, props, rng):
        graphs = [build_graph([(0, 1)], 2, features=rng.normal(size=(2, 2))) for _ in props]
        return GraphCollection(graphs=graphs, graph_labels=np.zeros(len(props), dtype=np.int64),
                               graph_props=np.asarray(props, dtype=np.float64))

    def test_sorted_props(self):
        rng = np.random.default_rng(10)
        coll = self.make_collection([1.0, 2.0, 3.0, 4.0], rng)
        ds = instance_space_splitter(coll, 2)
        assert ds.clients[0].graph_props.tolist() == [1.0, 2.0]
        assert ds.clients[1].graph_props.tolist() == [3.0, 4.0]

    def test_reversed_props_same_partition(self):
        rng = np.random.default_rng(11)
        coll = self.make_collection([4.0, 3.0, 2.0, 1.0], rng)
        ds = instance_space_splitter(coll, 2)
        assert ds.clients[0].graph_props.tolist() == [1.0, 2.0]

    def test_ceiling_first_remainder(self):
        rng = np.random.default_rng(12)
        coll = self.make_collection([5.0, 1.0, 4.0, 2.0, 3.0], rng)
        ds = instance_space_splitter(coll, 2)
        assert [len(c) for c in ds.clients] == [3, 2]

    def test_missing_props(self):
        rng = np.random.default_rng(13)
        coll = GraphCollection(graphs=[build_graph([], 1)], graph_labels=np.zeros(1, dtype=np.int64))
        with pytest.raises(MissingProps):
            instance_space_splitter(coll, 1)


class TestDeterminismAndDisk:
    def test_rerun_byte_identical(self, tmp_path):
        rng = np.random.default_rng(14)
        g = random_source(rng, n=24)
        d1, d2 = tmp_path / "a", tmp_path / "b"
        save_federated_dataset(random_splitter(g, 3, drop_edge_frac=0.2, seed=9), d1)
        save_federated_dataset(random_splitter(g, 3, drop_edge_frac=0.2, seed=9), d2)
        for name in os.listdir(d1):
            assert filecmp.cmp(d1 / name, d2 / name, shallow=False), name

    def test_resplit_from_manifest(self, tmp_path):
        rng = np.random.default_rng(15)
        g = random_source(rng, n=24)
        ds = random_splitter(g, 3, drop_edge_frac=0.1, seed=11)
        ds2 = resplit_from_manifest(ds.manifest, g)
        for a, b in zip(ds.clients, ds2.clients):
            assert graphs_equal(a, b)

    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(16)
        g = random_source(rng, n=20)
        ds = community_splitter(g, 2, seed=0)
        save_federated_dataset(ds, tmp_path / "out")
        back = load_federated_dataset(tmp_path / "out")
        assert back.manifest == ds.manifest
        for a, b in zip(ds.clients, back.clients):
            assert graphs_equal(a, b)

    def test_partition_edges_subset_of_source(self):
        rng = np.random.default_rng(17)
        g = random_source(rng, n=25, p=0.3)
        src_edges = {tuple(e) for e in g.undirected_edges().tolist()}
        for make in (lambda: random_splitter(g, 3, seed=1),
                     lambda: community_splitter(g, 3, seed=1)):
            ds = make()
            sets = client_node_sets(ds, g)
            assert set().union(*sets) == set(range(25))
            for ci, c in enumerate(ds.clients):
                back = sorted(sets[ci])
                for u, v in c.undirected_edges():
                    assert (min(back[u], back[v]), max(back[u], back[v])) in src_edges
