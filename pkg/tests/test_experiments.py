import math
import statistics
from collections import Counter

import numpy as np
import pytest

from brai.citest import CiBudget, CiCache
from brai.dataset import bootstrap_resample, builtin_network, derive_rng, forward_sample
from brai.experiments import (
    bench_cell,
    bench_grid,
    classic_bootstrap,
    fit_cpts,
    predictive_loglik,
    run_brai,
    single_rai,
    skeleton_f1,
    summarize,
    thread_count,
)
from brai.ggt import BraiConfig
from brai.graph import ChainGraph, dag_to_cpdag
from brai.rai import rai_learn
from brai.score import graph_score


def loglik_by_counting(train, test, dag, ess=1.0):
    """Smoothed maximum-likelihood fit and held-out sum, from plain counters."""
    rows = [tuple(r) for r in train.rows.tolist()]
    total = 0.0
    for v in range(dag.n):
        pa = sorted(dag.parents(v))
        r = train.cardinalities[v]
        q = math.prod(train.cardinalities[p] for p in pa)
        a = ess / (q * r)
        n_jk = Counter((tuple(row[p] for p in pa), row[v]) for row in rows)
        n_j = Counter(tuple(row[p] for p in pa) for row in rows)
        for row in test.rows.tolist():
            j = tuple(row[p] for p in pa)
            total += math.log((n_jk[j, row[v]] + a) / (n_j[j] + a * r))
    return total


class TestMetrics:
    def test_loglik_matches_counting(self):
        net = builtin_network("cancer")
        train = forward_sample(net, 300, derive_rng(0))
        test = forward_sample(net, 200, derive_rng(1))
        for g in (net.graph, ChainGraph(5), ChainGraph(5, [(1, 0), (2, 0), (3, 4)])):
            assert predictive_loglik(train, test, g) == pytest.approx(
                loglik_by_counting(train, test, g), rel=1e-12)

    def test_cpd_rows_normalised(self):
        net = builtin_network("survey")
        train = forward_sample(net, 100, derive_rng(0))
        for _, table in fit_cpts(train, net.graph, ess=2.0):
            assert np.allclose(table.sum(axis=1), 1.0)

    def test_loglik_of_cpdag_uses_extension(self):
        net = builtin_network("asia")
        train = forward_sample(net, 500, derive_rng(2))
        test = forward_sample(net, 100, derive_rng(3))
        assert predictive_loglik(train, test, dag_to_cpdag(net.graph)) == pytest.approx(
            predictive_loglik(train, test, net.graph), rel=1e-9)

    def test_f1(self):
        truth = ChainGraph(3, [(0, 1), (1, 2)])
        assert skeleton_f1(truth, truth) == 1.0
        assert skeleton_f1(ChainGraph(3, [], [(1, 0)]), truth) == pytest.approx(2 / 3)
        assert skeleton_f1(ChainGraph(3), truth) == 0.0
        assert skeleton_f1(ChainGraph(3), ChainGraph(3)) == 1.0

    def test_summary(self):
        rows = [{"n_rows": 50, "x": 1.0}, {"n_rows": 50, "x": 3.0}, {"n_rows": 100, "x": 2.0}]
        out = summarize(rows, keys=("x",))
        assert out[0]["n_rows"] == 50 and out[0]["runs"] == 2
        assert out[0]["x_mean"] == 2.0
        assert out[0]["x_std"] == pytest.approx(statistics.stdev([1.0, 3.0]))
        assert out[0]["x_stderr"] == pytest.approx(statistics.stdev([1.0, 3.0]) / math.sqrt(2))
        assert out[1]["x_std"] == 0.0

    def test_thread_count(self, monkeypatch):
        monkeypatch.setenv("BRAI_THREADS", "4")
        assert thread_count() == 4
        monkeypatch.setenv("BRAI_THREADS", "junk")
        assert thread_count() == 1


class TestClassic:
    def setup_method(self):
        self.data = forward_sample(builtin_network("asia"), 500, derive_rng(0))

    def test_single_run_budget(self):
        res = classic_bootstrap(self.data, seed=4, l=1)
        boot = bootstrap_resample(self.data, derive_rng(4, (1,)))
        budget = CiBudget()
        g = rai_learn(boot, cache=CiCache(), budget=budget)
        assert res.budget.by_order == budget.by_order
        assert res.best.cpdag == g
        assert res.best.score == pytest.approx(graph_score(self.data, g))

    def test_best_of_l(self):
        res = classic_bootstrap(self.data, seed=1, l=4)
        assert res.l == len(res.models) == 4
        assert res.best.score == max(m.score for m in res.models)

    def test_budget_target(self):
        target = run_brai(self.data, BraiConfig(s=3, seed=2)).budget.count
        res = classic_bootstrap(self.data, seed=2, budget_target=target)
        assert res.budget.count >= target
        # one fewer run would have stayed below the target
        if res.l > 1:
            assert classic_bootstrap(self.data, 2, l=res.l - 1).budget.count < target

    def test_arguments(self):
        with pytest.raises(ValueError):
            classic_bootstrap(self.data, 0)
        with pytest.raises(ValueError):
            classic_bootstrap(self.data, 0, l=2, budget_target=5)
        with pytest.raises(ValueError):
            classic_bootstrap(self.data, 0, l=0)

    def test_single_rai(self):
        model, budget = single_rai(self.data)
        assert model.cpdag == rai_learn(self.data)
        assert budget.count > 0


class TestBench:
    def test_cell_fields(self):
        net = builtin_network("cancer")
        row = bench_cell(net, 200, 0, "brai", holdout=300)
        for key in ("n_rows", "seed", "arm", "unique_cpdags", "ci_tests", "map_score",
                    "heldout_loglik", "skeleton_f1", "seconds"):
            assert key in row
        assert row["ci_tests"] == row["_budget"].count
        assert row["unique_cpdags"] >= 1

    def test_classic_cell_matches_budget(self):
        net = builtin_network("cancer")
        brai_row = bench_cell(net, 300, 1, "brai", holdout=100)
        classic_row = bench_cell(net, 300, 1, "classic", holdout=100)
        assert classic_row["ci_tests"] >= brai_row["ci_tests"]
        fixed = bench_cell(net, 300, 1, "classic", l=2, holdout=100)
        assert fixed["l"] == 2

    def test_unknown_arm(self):
        with pytest.raises(ValueError):
            bench_cell(builtin_network("cancer"), 50, 0, "other")

    def test_grid_threads_agree(self):
        net = builtin_network("cancer")
        a = bench_grid(net, [50, 100], [0, 1], holdout=50, threads=1)
        b = bench_grid(net, [50, 100], [0, 1], holdout=50, threads=3)
        strip = lambda rows: [{k: v for k, v in r.items() if k not in ("seconds", "_budget")}
                              for r in rows]
        assert strip(a) == strip(b)
        assert len(a) == 4
