import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brai.citest import CiBudget, CiCache
from brai.dataset import Dataset, builtin_network, derive_rng, forward_sample, random_network
from brai.ggt import (
    BootstrapNode,
    BraiConfig,
    BuildContext,
    GgtFormatError,
    Leaf,
    build_tree,
    count_unique_cpdags,
    deserialize,
    identity_resample,
    iter_leaves,
    serialize,
    tree_stats,
)
from brai.graph import ChainGraph, extend
from brai.rai import rai_learn
from brai.sampler import merge_leaves
from brai.score import dag_score, family_score
from conftest import collider_network
from oracles import tree_paths


def sample(net, n, seed=0):
    return forward_sample(net, n, derive_rng(seed))


def leaf(n, nodes, directed=(), undirected=(), score=0.0):
    return Leaf(frozenset(nodes), ChainGraph(n, directed, undirected), score)


def walk(node):
    yield node
    if isinstance(node, BootstrapNode):
        for gr in node.groups:
            for c in gr:
                yield from walk(c)


class TestConfig:
    def test_invalid(self):
        with pytest.raises(ValueError):
            BraiConfig(s=0)
        with pytest.raises(ValueError):
            BraiConfig(ess=-1.0)
        with pytest.raises(ValueError):
            BraiConfig(max_order=-1)


class TestBuild:
    def test_single_variable_is_leaf(self):
        d = Dataset.from_array(np.array([[0], [1]]), (2,))
        root = build_tree(d, BraiConfig(s=3))
        assert isinstance(root, Leaf)
        assert root.score == pytest.approx(family_score(d, 0, ()))

    def test_collider_fan_out(self):
        d = sample(collider_network(), 5000)
        root = build_tree(d, BraiConfig(s=2, seed=0))
        assert isinstance(root, BootstrapNode)
        assert root.k == 2
        assert len(root.children) == 2 * (2 + 1)
        assert set(root.children) == {"Anc_1^1", "Anc_2^1", "Dec^1", "Anc_1^2", "Anc_2^2", "Dec^2"}

    @pytest.mark.parametrize("seed", range(4))
    def test_fan_out_everywhere(self, seed):
        d = sample(builtin_network("asia"), 1000, seed)
        root = build_tree(d, BraiConfig(s=2, seed=seed))
        for node in walk(root):
            if isinstance(node, BootstrapNode):
                assert len(node.children) == node.s * (node.k + 1) == 2 * (node.k + 1)

    @pytest.mark.parametrize("name", ["asia", "cancer", "survey"])
    def test_single_draw_without_resampling_is_rai(self, name):
        d = sample(builtin_network(name), 2000, 1)
        ctx = BuildContext(BraiConfig(s=1), resample=identity_resample)
        root = build_tree(d, ctx.cfg, ctx)
        paths = tree_paths(root)
        assert len(paths) == 1
        budget = CiBudget()
        expected = rai_learn(d, cache=CiCache(), budget=budget)
        assert merge_leaves(paths[0][0], d.n_vars) == expected
        assert ctx.budget.by_order == budget.by_order

    def test_partition(self):
        d = sample(builtin_network("child"), 500, 2)
        root = build_tree(d, BraiConfig(s=2, seed=2, max_order=2))
        for node in walk(root):
            if isinstance(node, BootstrapNode):
                for t in range(node.s):
                    parts = [gr[t].nodes for gr in node.groups]
                    assert sum(len(p) for p in parts) == len(node.nodes)
                    assert frozenset().union(*parts) == node.nodes

    def test_paths_give_valid_disjoint_graphs(self):
        d = sample(builtin_network("asia"), 800, 3)
        root = build_tree(d, BraiConfig(s=2, seed=3))
        for leaves, _ in tree_paths(root)[:200]:
            seen = set()
            for lf in leaves:
                assert not (lf.nodes & seen)
                seen |= lf.nodes
            assert seen == set(range(d.n_vars))
            merged = merge_leaves(leaves, d.n_vars)
            merged.topological_order()

    def test_leaves_scored_on_full_data(self):
        d = sample(builtin_network("asia"), 600, 4)
        scores = {}
        for seed in range(3):
            root = build_tree(d, BraiConfig(s=2, seed=seed))
            for lf in iter_leaves(root):
                key = (lf.nodes, lf.cpdag)
                assert scores.setdefault(key, lf.score) == lf.score
        for (nodes, cp), sc in scores.items():
            assert sc == pytest.approx(dag_score(d, extend(cp)[0], nodes=nodes))

    def test_reproducible_bytes(self):
        d = sample(builtin_network("survey"), 700, 5)
        cfg = BraiConfig(s=2, seed=9)
        a = serialize(build_tree(d, cfg), d.variable_names, cfg, d)
        b = serialize(build_tree(d, cfg), d.variable_names, cfg, d)
        c = serialize(build_tree(d, BraiConfig(s=2, seed=10)), d.variable_names, cfg, d)
        assert a == b
        assert a != c

    def test_max_order_caps_depth(self):
        d = sample(builtin_network("asia"), 2000, 6)
        root = build_tree(d, BraiConfig(s=2, max_order=0))
        assert tree_stats(root)["depth"] <= 1


class TestUniqueCount:
    def test_identical_leaves(self):
        a = leaf(2, {0, 1}, [(0, 1)], score=-1.0)
        root = BootstrapNode(frozenset({0, 1}), 0, ((a, a, a),))
        assert count_unique_cpdags(root) == 1

    def test_two_distinct_leaves(self):
        root = BootstrapNode(frozenset({0, 1}), 0,
                             ((leaf(2, {0, 1}, [(0, 1)]), leaf(2, {0, 1}, [], [(0, 1)])),))
        assert count_unique_cpdags(root) == 2

    def test_cross_product(self):
        # group one has two distinct sub-results, group two has three
        g1 = (leaf(4, {0, 1}), leaf(4, {0, 1}, [], [(0, 1)]), leaf(4, {0, 1}))
        g2 = (leaf(4, {2, 3}, [(0, 2)]), leaf(4, {2, 3}, [(1, 3)]), leaf(4, {2, 3}, [], [(2, 3)]))
        root = BootstrapNode(frozenset(range(4)), 0, (g1, g2))
        assert count_unique_cpdags(root) == 6
        distinct = {merge_leaves(ls, 4) for ls, _ in tree_paths(root)}
        assert len(distinct) == 6

    def test_limit(self):
        g1 = tuple(leaf(4, {0, 1}, [], [(0, 1)] if i else []) for i in range(2))
        g2 = tuple(leaf(4, {2, 3}, [], [(2, 3)] if i else []) for i in range(2))
        root = BootstrapNode(frozenset(range(4)), 0, (g1, g2))
        with pytest.raises(OverflowError):
            count_unique_cpdags(root, limit=3)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 1000))
    def test_matches_path_enumeration(self, seed):
        net = random_network(5, derive_rng(seed, (0,)))
        d = forward_sample(net, 300, derive_rng(seed, (1,)))
        root = build_tree(d, BraiConfig(s=2, seed=seed))
        paths = tree_paths(root)
        if len(paths) > 20_000:
            return
        assert count_unique_cpdags(root) == len({merge_leaves(ls, 5) for ls, _ in paths})


class TestSerialization:
    def test_round_trip(self):
        d = sample(builtin_network("asia"), 500, 7)
        cfg = BraiConfig(s=2, seed=7)
        root = build_tree(d, cfg)
        blob = serialize(root, d.variable_names, cfg, d)
        back, header = deserialize(blob)
        assert back.structurally_equal(root)
        assert header["config"]["s"] == 2
        assert header["dataset"]["fingerprint"] == d.fingerprint()
        assert serialize(back, d.variable_names, cfg, d) == blob

    def test_leaf_only(self):
        lf = leaf(1, {0}, score=-1.5)
        back, header = deserialize(serialize(lf, ["A"]))
        assert back.structurally_equal(lf)
        assert header["variables"] == ["A"]

    def test_truncated(self):
        d = sample(collider_network(), 500, 8)
        blob = serialize(build_tree(d, BraiConfig(s=2)), d.variable_names)
        with pytest.raises(GgtFormatError) as e:
            deserialize(blob[: len(blob) // 2])
        assert e.value.offset is not None
        assert "byte offset" in str(e.value)

    def test_wrong_format(self):
        with pytest.raises(GgtFormatError):
            deserialize(b'{"format": "other"}')
        with pytest.raises(GgtFormatError):
            deserialize(b"\xff\xfe")

    def test_bad_labels(self):
        blob = serialize(build_tree(sample(collider_network(), 300), BraiConfig(s=2)),
                         ["X", "Y", "Z"]).replace(b'"Dec^2"', b'"Dec^9"')
        with pytest.raises(GgtFormatError):
            deserialize(blob)
