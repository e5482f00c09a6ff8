"""Exhaustive oracles over the full DAG space of small domains (n <= 5).

These deliberately avoid the search and enumeration machinery they are used
to check: DAGs are produced by filtering every edge pattern for acyclicity,
equivalence classes by filtering orientations of a skeleton, and posteriors
are summed in plain Python.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .graph import ChainGraph, dag_to_cpdag
from .sampler import ScoredCpdag
from .score import ScoreCache, ScoreConfig, dag_score

__all__ = [
    "DagSpace",
    "enumerate_all_dags",
    "equivalence_class",
    "exact_scores",
    "exact_map",
    "exact_feature_posterior",
    "eq5_posterior",
    "holds",
]

MAX_NODES = 5


@dataclass(frozen=True)
class DagSpace:
    n: int
    max_indegree: int | None = None

    def __post_init__(self):
        if not 1 <= self.n <= MAX_NODES:
            raise ValueError(f"brute force is limited to 1..{MAX_NODES} nodes, got {self.n}")


def _acyclic(n, edges) -> bool:
    # repeatedly strip sources
    remaining = set(range(n))
    edges = set(edges)
    while remaining:
        src = [v for v in remaining if not any(b == v and a in remaining for a, b in edges)]
        if not src:
            return False
        remaining -= set(src)
    return True


def enumerate_all_dags(space: DagSpace) -> list:
    n = space.n
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for pattern in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (a, b), s in zip(pairs, pattern):
            if s == 1:
                edges.append((a, b))
            elif s == 2:
                edges.append((b, a))
        if space.max_indegree is not None:
            indeg = [0] * n
            for _, b in edges:
                indeg[b] += 1
            if max(indeg) > space.max_indegree:
                continue
        if _acyclic(n, edges):
            out.append(ChainGraph(n, edges))
    return out


def _vstructs(n, edges, skeleton=None):
    es = set(edges)
    adj = {frozenset(e) for e in (es if skeleton is None else skeleton)}
    out = set()
    for z in range(n):
        pa = sorted(a for a, b in es if b == z)
        for x, y in itertools.combinations(pa, 2):
            if frozenset((x, y)) not in adj:
                out.add((x, z, y))
    return out


def equivalence_class(g: ChainGraph) -> list:
    """DAGs with the skeleton and v-structures of ``g``, by trying every orientation."""
    skel = sorted(g.skeleton())
    target = _vstructs(g.n, g.directed, skel)
    out = []
    for bits in itertools.product((0, 1), repeat=len(skel)):
        edges = [(a, b) if bit == 0 else (b, a) for (a, b), bit in zip(skel, bits)]
        if _acyclic(g.n, edges) and _vstructs(g.n, edges) == target:
            out.append(ChainGraph(g.n, edges))
    return out


def exact_scores(data, space: DagSpace, cfg: ScoreConfig = ScoreConfig(), cache=None):
    cache = ScoreCache() if cache is None else cache
    return [(dag, dag_score(data, dag, cfg, cache)) for dag in enumerate_all_dags(space)]


def exact_map(data, space: DagSpace | None = None, cfg: ScoreConfig = ScoreConfig()) -> ScoredCpdag:
    """Best-scoring DAG over the whole space, returned as its CPDAG."""
    space = DagSpace(data.n_vars) if space is None else space
    if space.n != data.n_vars:
        raise ValueError("space and data disagree on the number of variables")
    best_dag, best = None, -math.inf
    for dag, sc in exact_scores(data, space, cfg):
        if sc > best:
            best_dag, best = dag, sc
    return ScoredCpdag(dag_to_cpdag(best_dag), best)


def holds(kind: str, x: int, y: int, dag: ChainGraph) -> bool:
    """Feature indicator written directly from the definitions."""
    if kind == "edge":
        return (x, y) in dag.directed
    if kind == "path":
        frontier, seen = [x], set()
        while frontier:
            v = frontier.pop()
            for a, b in dag.directed:
                if a == v and b not in seen:
                    if b == y:
                        return True
                    seen.add(b)
                    frontier.append(b)
        return False
    if kind == "markov_blanket":
        if (x, y) in dag.directed or (y, x) in dag.directed:
            return True
        kids_y = {b for a, b in dag.directed if a == y}
        return any((x, c) in dag.directed for c in kids_y)
    raise ValueError(f"unknown feature kind {kind!r}")


def eq5_posterior(kind: str, x: int, y: int, scored_dags) -> float:
    """Score-weighted fraction of DAGs with the feature, summed in plain Python."""
    top = max(sc for _, sc in scored_dags)
    num = math.fsum(math.exp(sc - top) for dag, sc in scored_dags if holds(kind, x, y, dag))
    den = math.fsum(math.exp(sc - top) for _, sc in scored_dags)
    return num / den


def exact_feature_posterior(data, f, space: DagSpace | None = None,
                            cfg: ScoreConfig = ScoreConfig()) -> float:
    """Posterior of feature ``f`` (kind, x, y) with the full DAG space as the model set."""
    space = DagSpace(data.n_vars) if space is None else space
    return eq5_posterior(f.kind, f.x, f.y, exact_scores(data, space, cfg))
