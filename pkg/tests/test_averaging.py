import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from brai.averaging import (
    Feature,
    FeaturePosterior,
    all_feature_posteriors,
    auc,
    expand_models,
    feature_holds,
    feature_posterior,
    posterior_from_dags,
)
from brai.bruteforce import eq5_posterior, holds
from brai.dataset import builtin_network
from brai.graph import ChainGraph, EnumerationCapError, dag_to_cpdag, enumerate_dags
from brai.sampler import ScoredCpdag
from oracles import auc_pairwise
from test_graph import dags

KINDS = ("edge", "markov_blanket", "path")


class TestFeatureHolds:
    def test_chain(self):
        g = ChainGraph(3, [(0, 1), (1, 2)])
        assert feature_holds(Feature("path", 0, 2), g) == 1
        assert feature_holds(Feature("edge", 0, 2), g) == 0
        assert feature_holds(Feature("path", 2, 0), g) == 0

    def test_spouse(self):
        g = ChainGraph(3, [(0, 2), (1, 2)])
        assert feature_holds(Feature("markov_blanket", 0, 1), g) == 1

    def test_empty(self):
        g = ChainGraph(3)
        for kind in KINDS:
            for x, y in itertools.permutations(range(3), 2):
                assert feature_holds(Feature(kind, x, y), g) == 0

    def test_requires_dag(self):
        with pytest.raises(ValueError):
            feature_holds(Feature("edge", 0, 1), ChainGraph(2, [], [(0, 1)]))

    def test_invalid_feature(self):
        with pytest.raises(ValueError):
            Feature("edge", 1, 1)
        with pytest.raises(ValueError):
            Feature("spouse", 0, 1)

    @settings(max_examples=60, deadline=None)
    @given(dags(2, 6))
    def test_matches_definitions(self, dag):
        for kind in KINDS:
            for x, y in itertools.permutations(range(dag.n), 2):
                assert feature_holds(Feature(kind, x, y), dag) == holds(kind, x, y, dag)


class TestPosterior:
    def test_half(self):
        models = [ScoredCpdag(ChainGraph(2, [], [(0, 1)]), -3.0)]
        assert feature_posterior(Feature("edge", 0, 1), models).probability == pytest.approx(0.5)

    def test_always_present(self):
        models = [ScoredCpdag(ChainGraph(3, [(0, 2), (1, 2)]), -1.0),
                  ScoredCpdag(ChainGraph(3, [(0, 2), (1, 2)], ), -7.0)]
        assert feature_posterior(Feature("markov_blanket", 0, 1), models).probability == 1.0

    def test_two_thirds(self):
        pairs = [(ChainGraph(2, [(0, 1)]), math.log(2)), (ChainGraph(2), 0.0)]
        assert posterior_from_dags(Feature("edge", 0, 1), pairs) == pytest.approx(2 / 3)

    def test_no_models(self):
        with pytest.raises(ValueError):
            feature_posterior(Feature("edge", 0, 1), [])

    def test_cap(self):
        full = ChainGraph(5, [], itertools.combinations(range(5), 2))
        with pytest.raises(EnumerationCapError):
            feature_posterior(Feature("edge", 0, 1), [ScoredCpdag(full, 0.0)], cap=10)

    def test_expansion_inherits_score(self):
        cp = ChainGraph(3, [], [(0, 1), (1, 2)])
        pairs = expand_models([ScoredCpdag(cp, -2.5)])
        assert len(pairs) == 3 and all(sc == -2.5 for _, sc in pairs)

    def test_dedup_switch(self):
        a = ScoredCpdag(ChainGraph(2, [], [(0, 1)]), 0.0)
        b = ScoredCpdag(ChainGraph(2, [], [(0, 1)]), 0.0)
        assert len(expand_models([a, b])) == 4
        assert len(expand_models([a, b], dedup=True)) == 2

    def test_all_posteriors_match_single(self):
        net = builtin_network("cancer")
        models = [ScoredCpdag(dag_to_cpdag(net.graph), -10.0),
                  ScoredCpdag(ChainGraph(5, [], [(0, 1), (1, 2)]), -11.0)]
        for fp in all_feature_posteriors(models):
            assert fp.probability == pytest.approx(
                feature_posterior(fp.feature, models).probability, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(dags(4, 4), min_size=1, max_size=4),
           st.lists(st.floats(-50, 0), min_size=4, max_size=4))
    def test_matches_direct_evaluation(self, members, scores):
        models = [ScoredCpdag(dag_to_cpdag(d), sc) for d, sc in zip(members, scores)]
        pairs = [(dag, m.score) for m in models for dag in enumerate_dags(m.cpdag)]
        for kind in KINDS:
            for x, y in [(0, 1), (2, 0), (3, 1)]:
                got = feature_posterior(Feature(kind, x, y), models).probability
                assert got == pytest.approx(eq5_posterior(kind, x, y, pairs), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(dags(4, 4), min_size=1, max_size=4),
           st.lists(st.integers(-400, 0).map(lambda v: v / 8), min_size=4, max_size=4),
           st.integers(-100_000, 100_000))
    def test_shift_invariant(self, members, scores, shift):
        # eighths plus integers keep the shifted scores exactly representable
        models = [ScoredCpdag(dag_to_cpdag(d), sc) for d, sc in zip(members, scores)]
        shifted = [ScoredCpdag(m.cpdag, m.score + shift) for m in models]
        for kind in KINDS:
            f = Feature(kind, 1, 2)
            assert feature_posterior(f, models).probability == pytest.approx(
                feature_posterior(f, shifted).probability, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(dags(4, 4), min_size=1, max_size=4),
           st.lists(st.floats(-20, 0), min_size=4, max_size=4), st.integers(0, 3))
    def test_duplicating_supporting_model(self, members, scores, pick):
        models = [ScoredCpdag(dag_to_cpdag(d), sc) for d, sc in zip(members, scores)]
        m = models[pick % len(models)]
        for kind in KINDS:
            for x, y in itertools.permutations(range(4), 2):
                f = Feature(kind, x, y)
                members_hold = [feature_holds(f, d) for d in enumerate_dags(m.cpdag)]
                if not all(members_hold):
                    continue
                before = feature_posterior(f, models).probability
                after = feature_posterior(f, models + [m]).probability
                assert after >= before - 1e-12


class TestAuc:
    def setup_method(self):
        self.truth = ChainGraph(3, [(0, 1), (1, 2)])

    def posteriors(self, fn):
        return [FeaturePosterior(Feature("edge", x, y), fn(x, y))
                for x, y in itertools.permutations(range(3), 2)]

    def test_perfect(self):
        ps = self.posteriors(lambda x, y: float(self.truth.has_directed(x, y)))
        assert auc(ps, self.truth) == 1.0

    def test_ties(self):
        assert auc(self.posteriors(lambda x, y: 0.3), self.truth) == 0.5

    def test_reversed(self):
        ps = self.posteriors(lambda x, y: 1.0 - self.truth.has_directed(x, y))
        assert auc(ps, self.truth) == 0.0

    def test_degenerate(self):
        with pytest.raises(ValueError):
            auc(self.posteriors(lambda x, y: 0.5), ChainGraph(3))

    def test_network_truth(self):
        net = builtin_network("cancer")
        ps = all_feature_posteriors([ScoredCpdag(dag_to_cpdag(net.graph), 0.0)], kinds=("path",))
        assert auc(ps, net, "path") > 0.5

    @settings(max_examples=60, deadline=None)
    @given(dags(3, 5), st.data())
    def test_matches_pairwise_statistic(self, dag, data):
        pairs = list(itertools.permutations(range(dag.n), 2))
        labels = [dag.has_directed(x, y) for x, y in pairs]
        if all(labels) or not any(labels):
            return
        scores = data.draw(st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0]),
                                    min_size=len(pairs), max_size=len(pairs)))
        ps = [FeaturePosterior(Feature("edge", x, y), s) for (x, y), s in zip(pairs, scores)]
        assert auc(ps, dag) == pytest.approx(auc_pairwise(scores, labels), abs=1e-12)
