"""Model-averaged posteriors of structural features.

Each scored CPDAG is expanded into the DAGs of its equivalence class; every
DAG inherits the CPDAG's log score, and a feature's posterior is the
score-weighted fraction of DAGs exhibiting it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .graph import DEFAULT_ENUMERATION_CAP, ChainGraph, dag_to_cpdag, enumerate_dags, extend

__all__ = [
    "FEATURE_KINDS",
    "Feature",
    "FeaturePosterior",
    "feature_holds",
    "feature_matrix",
    "expand_models",
    "feature_posterior",
    "all_feature_posteriors",
    "auc",
]

FEATURE_KINDS = ("edge", "markov_blanket", "path")


@dataclass(frozen=True)
class Feature:
    kind: str
    x: int
    y: int

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.x == self.y:
            raise ValueError("feature endpoints must differ")


@dataclass(frozen=True)
class FeaturePosterior:
    feature: Feature
    probability: float


def _adjacency(dag: ChainGraph) -> np.ndarray:
    a = np.zeros((dag.n, dag.n), dtype=bool)
    for u, v in dag.directed:
        a[u, v] = True
    return a


def feature_matrix(kind: str, dag: ChainGraph) -> np.ndarray:
    """Boolean matrix ``M[x, y]`` = feature ``kind`` holds for ``(x, y)`` in ``dag``."""
    if dag.undirected:
        raise ValueError("features are evaluated on DAGs")
    dag.topological_order()
    a = _adjacency(dag)
    if kind == "edge":
        m = a
    elif kind == "path":
        m = a.copy()
        for v in dag.topological_order()[::-1]:
            for c in dag.children(v):
                m[v] |= m[c]
    elif kind == "markov_blanket":
        # x in MB(y): parent, child or co-parent of a common child
        ai = a.astype(np.int64)
        spouse = (ai @ ai.T) > 0
        m = a | a.T | spouse
    else:
        raise ValueError(f"unknown feature kind {kind!r}")
    m = m.copy()
    np.fill_diagonal(m, False)
    return m


def feature_holds(f: Feature, dag: ChainGraph) -> int:
    return int(feature_matrix(f.kind, dag)[f.x, f.y])


def expand_models(models, cap: int = DEFAULT_ENUMERATION_CAP, dedup: bool = False):
    """``(dag, log_score)`` pairs for every DAG in every model's class.

    Duplicated DAGs from different models are kept unless ``dedup``; then the
    first occurrence wins.
    """
    out = []
    seen = set()
    for m in models:
        cp = dag_to_cpdag(extend(m.cpdag)[0])
        for dag in enumerate_dags(cp, cap):
            if dedup:
                if dag in seen:
                    continue
                seen.add(dag)
            out.append((dag, float(m.score)))
    return out


def _posterior(indicators, log_w):
    log_w = np.asarray(log_w, dtype=float)
    ind = np.asarray(indicators, dtype=bool)
    if not ind.any():
        return 0.0
    # a ratio of max-shifted weights stays exact when every score moves together
    w = np.exp(log_w - log_w.max())
    return float(w[ind].sum() / w.sum())


def feature_posterior(f: Feature, models, cap: int = DEFAULT_ENUMERATION_CAP,
                      dedup: bool = False) -> FeaturePosterior:
    if not models:
        raise ValueError("no models to average over")
    pairs = expand_models(models, cap, dedup)
    ind = [feature_holds(f, dag) for dag, _ in pairs]
    p = _posterior(ind, [sc for _, sc in pairs])
    return FeaturePosterior(f, min(1.0, max(0.0, p)))


def posterior_from_dags(f: Feature, scored_dags) -> float:
    """Posterior of ``f`` over an explicit list of ``(dag, log_score)``."""
    ind = [feature_holds(f, dag) for dag, _ in scored_dags]
    return _posterior(ind, [sc for _, sc in scored_dags])


def all_feature_posteriors(models, kinds=FEATURE_KINDS, cap: int = DEFAULT_ENUMERATION_CAP,
                           dedup: bool = False) -> list:
    """Posteriors of every ordered pair for each kind, expanding models once."""
    if not models:
        raise ValueError("no models to average over")
    pairs = expand_models(models, cap, dedup)
    log_w = np.array([sc for _, sc in pairs])
    w = np.exp(log_w - log_w.max())
    w /= w.sum()
    n = pairs[0][0].n
    out = []
    for kind in kinds:
        acc = np.zeros((n, n))
        for (dag, _), wi in zip(pairs, w):
            acc += wi * feature_matrix(kind, dag)
        acc = np.clip(acc, 0.0, 1.0)
        for x in range(n):
            for y in range(n):
                if x != y:
                    out.append(FeaturePosterior(Feature(kind, x, y), float(acc[x, y])))
    return out


def auc(posteriors, truth, kind: str | None = None) -> float:
    """Area under the ROC curve of posteriors against features of ``truth``.

    ``truth`` is a GroundTruthNetwork or a DAG. Ties are averaged
    (Mann-Whitney statistic on mid-ranks).
    """
    g = getattr(truth, "graph", truth)
    sel = [p for p in posteriors if kind is None or p.feature.kind == kind]
    mats = {}
    labels = []
    for p in sel:
        k = p.feature.kind
        if k not in mats:
            mats[k] = feature_matrix(k, g)
        labels.append(bool(mats[k][p.feature.x, p.feature.y]))
    labels = np.array(labels, dtype=bool)
    npos = int(labels.sum())
    nneg = labels.size - npos
    if npos == 0 or nneg == 0:
        raise ValueError("AUC needs at least one positive and one negative label")
    ranks = rankdata([p.probability for p in sel])
    return float((ranks[labels].sum() - npos * (npos + 1) / 2) / (npos * nneg))
