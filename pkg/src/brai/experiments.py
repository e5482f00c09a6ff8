"""Experiment protocols: predictive likelihood, skeleton recovery, classic
bootstrap over RAI, and the data-size / CI-budget benchmark grid."""

from __future__ import annotations

import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .citest import CiBudget, CiCache
from .dataset import Dataset, GroundTruthNetwork, bootstrap_resample, derive_rng, forward_sample
from .ggt import BraiConfig, BuildContext, build_tree, count_unique_cpdags
from .graph import ChainGraph, extend
from .rai import rai_learn
from .sampler import ScoredCpdag, map_cpdag
from .score import ScoreCache, ScoreConfig, graph_score

__all__ = [
    "fit_cpts",
    "predictive_loglik",
    "skeleton_f1",
    "ClassicResult",
    "classic_bootstrap",
    "single_rai",
    "BraiRun",
    "run_brai",
    "bench_cell",
    "bench_grid",
    "summarize",
    "thread_count",
]

THREADS_ENV = "BRAI_THREADS"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def fit_cpts(train: Dataset, dag: ChainGraph, ess: float = 1.0) -> list:
    """Posterior-mean CPTs with pseudo-count ``ess / (q r)`` per cell.

    Returns ``(parents, table)`` per variable, ``table`` shaped ``(q, r)``.
    """
    out = []
    for v in range(dag.n):
        pa = tuple(sorted(dag.parents(v)))
        r = train.cardinalities[v]
        q = int(np.prod([train.cardinalities[p] for p in pa], dtype=np.int64))
        j = np.zeros(train.n_rows, dtype=np.int64)
        for p in pa:
            j = j * train.cardinalities[p] + train.column(p)
        n_jk = np.bincount(j * r + train.column(v), minlength=q * r).reshape(q, r)
        alpha = ess / (q * r)
        table = (n_jk + alpha) / (n_jk.sum(axis=1, keepdims=True) + alpha * r)
        out.append((pa, table))
    return out


def predictive_loglik(train: Dataset, test: Dataset, g: ChainGraph, ess: float = 1.0) -> float:
    """Held-out log-likelihood (nats) of ``test`` under ``g`` fitted on ``train``."""
    dag = extend(g)[0]
    total = 0.0
    for v, (pa, table) in enumerate(fit_cpts(train, dag, ess)):
        j = np.zeros(test.n_rows, dtype=np.int64)
        for p in pa:
            j = j * test.cardinalities[p] + test.column(p)
        total += float(np.log(table[j, test.column(v)]).sum())
    return total


def skeleton_f1(learned: ChainGraph, truth: ChainGraph) -> float:
    s, t = learned.skeleton(), truth.skeleton()
    if not s and not t:
        return 1.0
    tp = len(s & t)
    return 2.0 * tp / (len(s) + len(t))


def single_rai(data: Dataset, ess: float = 1.0, max_order=None):
    """RAI on the full data: ``(ScoredCpdag, budget)``."""
    budget = CiBudget()
    g = rai_learn(data, cache=CiCache(), budget=budget, max_order=max_order)
    return ScoredCpdag(g, graph_score(data, g, ScoreConfig(ess))), budget


@dataclass
class ClassicResult:
    best: ScoredCpdag
    l: int
    budget: CiBudget
    models: list


def classic_bootstrap(data: Dataset, seed: int, l: int | None = None, budget_target=None,
                      ess: float = 1.0, max_order=None) -> ClassicResult:
    """Best-scoring CPDAG among RAI runs on independent bootstrap samples.

    Runs exactly ``l`` samples, or (with ``budget_target``) adds samples until
    the cumulative CI-test count reaches the target.
    """
    if (l is None) == (budget_target is None):
        raise ValueError("give exactly one of l or budget_target")
    if l is not None and l < 1:
        raise ValueError("l must be >= 1")
    budget = CiBudget()
    cfg = ScoreConfig(ess)
    cache = ScoreCache()
    models = []
    i = 0
    while True:
        i += 1
        boot = bootstrap_resample(data, derive_rng(seed, (i,)), seed=(seed, i))
        b = CiBudget()
        g = rai_learn(boot, cache=CiCache(), budget=b, max_order=max_order)
        budget.merge(b)
        models.append(ScoredCpdag(g, graph_score(data, g, cfg, cache)))
        if l is not None and i >= l:
            break
        if budget_target is not None and budget.count >= budget_target:
            break
    best = max(models, key=lambda m: m.score)
    return ClassicResult(best, len(models), budget, models)


@dataclass
class BraiRun:
    root: object
    map: ScoredCpdag
    budget: CiBudget
    seconds: float


def run_brai(data: Dataset, cfg: BraiConfig) -> BraiRun:
    t0 = time.perf_counter()
    ctx = BuildContext(cfg)
    root = build_tree(data, cfg, ctx)
    return BraiRun(root, map_cpdag(root), ctx.budget, time.perf_counter() - t0)


def bench_cell(net: GroundTruthNetwork, n_rows: int, seed: int, arm: str = "brai", s: int = 3,
               l: int | None = None, ess: float = 1.0, holdout: int = 5000,
               max_order=None, count_limit: int = 5_000_000) -> dict:
    """One benchmark row: learn on ``n_rows`` sampled rows, evaluate on ``holdout`` rows."""
    train = forward_sample(net, n_rows, derive_rng(seed, (1,)))
    test = forward_sample(net, holdout, derive_rng(seed, (2,)))
    row = {"n_rows": n_rows, "seed": seed, "arm": arm}
    t0 = time.perf_counter()
    if arm == "brai":
        run = run_brai(train, BraiConfig(s=s, ess=ess, seed=seed, max_order=max_order))
        try:
            unique = count_unique_cpdags(run.root, count_limit)
        except OverflowError:
            unique = -1
        model, budget = run.map, run.budget
        row.update(s=s, l="", unique_cpdags=unique)
    elif arm == "classic":
        if l is None:
            # match the B-RAI budget for the same data
            target = run_brai(train, BraiConfig(s=s, ess=ess, seed=seed,
                                                max_order=max_order)).budget.count
            res = classic_bootstrap(train, seed, budget_target=target, ess=ess,
                                    max_order=max_order)
        else:
            res = classic_bootstrap(train, seed, l=l, ess=ess, max_order=max_order)
        model, budget = res.best, res.budget
        row.update(s="", l=res.l, unique_cpdags=len({m.cpdag for m in res.models}))
    else:
        raise ValueError(f"unknown arm {arm!r}")
    row.update(ci_tests=budget.count, map_score=model.score,
               heldout_loglik=predictive_loglik(train, test, model.cpdag, ess),
               skeleton_f1=skeleton_f1(model.cpdag, net.graph),
               seconds=round(time.perf_counter() - t0, 3))
    row["_budget"] = budget
    return row


def bench_grid(net, sizes, seeds, arm="brai", threads=None, **kw) -> list:
    cells = [(n, sd) for n in sizes for sd in seeds]
    threads = thread_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda c: bench_cell(net, c[0], c[1], arm, **kw), cells))
    return [bench_cell(net, n, sd, arm, **kw) for n, sd in cells]


def summarize(rows, keys=("unique_cpdags", "ci_tests", "map_score", "heldout_loglik")) -> list:
    """Per data size: mean, standard deviation and standard error of each key."""
    out = []
    for n in sorted({r["n_rows"] for r in rows}):
        sel = [r for r in rows if r["n_rows"] == n]
        rec = {"n_rows": n, "runs": len(sel)}
        for k in keys:
            vals = [float(r[k]) for r in sel if r.get(k) not in ("", None)]
            if not vals:
                continue
            sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
            rec[f"{k}_mean"] = statistics.fmean(vals)
            rec[f"{k}_std"] = sd
            rec[f"{k}_stderr"] = sd / len(vals) ** 0.5
        out.append(rec)
    return out
