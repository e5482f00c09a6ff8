"""Sampling, MAP extraction and k-best selection of CPDAGs from a tree.

At every bootstrap node each group (ancestor groups first, then the
descendant group) picks one of its ``s`` subtrees; the merged CPDAG is the
union of the chosen leaves and its score is the sum of their scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ggt import BootstrapNode, Leaf
from .graph import ChainGraph

__all__ = [
    "ScoredCpdag",
    "TopK",
    "boltzmann_probabilities",
    "boltzmann_select",
    "sample_cpdag",
    "map_cpdag",
    "top_k_paths",
    "merge_leaves",
]


@dataclass(frozen=True)
class ScoredCpdag:
    cpdag: ChainGraph
    score: float


@dataclass(frozen=True)
class TopK:
    models: list
    shortfall: bool

    def __iter__(self):
        return iter(self.models)

    def __len__(self):
        return len(self.models)

    def __getitem__(self, i):
        return self.models[i]


def _check_gamma(gamma):
    if not gamma > 0 or math.isinf(gamma):
        raise ValueError("temperature must be a positive finite number")


def boltzmann_probabilities(scores, gamma: float = 1.0) -> np.ndarray:
    """``exp(sc_t / gamma)`` normalised, evaluated after a max shift."""
    _check_gamma(gamma)
    sc = np.asarray(scores, dtype=float)
    if sc.size == 0:
        raise ValueError("no scores to select from")
    if not np.all(np.isfinite(sc)):
        raise ValueError("scores must be finite")
    w = np.exp((sc - sc.max()) / gamma)
    return w / w.sum()


def boltzmann_select(scores, gamma: float, rng: np.random.Generator) -> int:
    # plain Python: selection lists are short and this sits on the sampling hot path
    _check_gamma(gamma)
    sc = [float(x) for x in scores]
    if not sc:
        raise ValueError("no scores to select from")
    if not all(math.isfinite(x) for x in sc):
        raise ValueError("scores must be finite")
    top = max(sc)
    w = [math.exp((x - top) / gamma) for x in sc]
    u = rng.random() * math.fsum(w)
    acc = 0.0
    for i, wi in enumerate(w):
        acc += wi
        if u < acc:
            return i
    return len(w) - 1


def merge_leaves(leaves, n: int) -> ChainGraph:
    directed, undirected = set(), set()
    for leaf in leaves:
        directed |= leaf.cpdag.directed
        undirected |= leaf.cpdag.undirected
    return ChainGraph(n, directed, undirected)


def _tree_n(root):
    node = root
    while isinstance(node, BootstrapNode):
        node = node.groups[0][0]
    if not isinstance(node, Leaf):
        raise TypeError("malformed tree: expected Leaf or BootstrapNode")
    return node.cpdag.n


def _sample(node, gamma, rng):
    if isinstance(node, Leaf):
        return [node], node.score
    if not isinstance(node, BootstrapNode):
        raise TypeError(f"malformed tree node {type(node).__name__}")
    chosen, total = [], 0.0
    for gr in node.groups:
        results = [_sample(child, gamma, rng) for child in gr]
        t = boltzmann_select([sc for _, sc in results], gamma, rng)
        chosen += results[t][0]
        total += results[t][1]
    return chosen, total


def sample_cpdag(root, gamma: float = 1.0, rng: np.random.Generator | None = None) -> ScoredCpdag:
    """Draw one CPDAG from the tree."""
    _check_gamma(gamma)
    rng = np.random.default_rng() if rng is None else rng
    leaves, sc = _sample(root, gamma, rng)
    return ScoredCpdag(merge_leaves(leaves, _tree_n(root)), sc)


def map_cpdag(root) -> ScoredCpdag:
    """Highest-scoring CPDAG; ties go to the lowest draw index."""
    memo = {}

    def best(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Leaf):
            out = ([node], node.score)
        elif isinstance(node, BootstrapNode):
            chosen, total = [], 0.0
            for gr in node.groups:
                results = [best(c) for c in gr]
                t = max(range(len(results)), key=lambda i: (results[i][1], -i))
                chosen += results[t][0]
                total += results[t][1]
            out = (chosen, total)
        else:
            raise TypeError(f"malformed tree node {type(node).__name__}")
        memo[key] = out
        return out

    leaves, sc = best(root)
    return ScoredCpdag(merge_leaves(leaves, _tree_n(root)), sc)


def _edge_key(leaves):
    d, u = set(), set()
    for leaf in leaves:
        d |= leaf.cpdag.directed
        u |= leaf.cpdag.undirected
    return frozenset(d), frozenset(u)


def top_k_paths(root, k: int) -> TopK:
    """The ``k`` best distinct CPDAGs reachable in the tree, best first.

    Group subgraphs own disjoint edges, so distinct per-group choices merge
    into distinct CPDAGs and the k-best of a node follows from the k-best of
    its groups.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    memo = {}

    def best(node):
        # list of (score, tiebreak, leaves, edgekey)
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Leaf):
            out = [(node.score, (), [node], _edge_key([node]))]
        elif isinstance(node, BootstrapNode):
            out = [(0.0, (), [], None)]
            for gr in node.groups:
                pool, seen = [], set()
                cand = []
                for t, child in enumerate(gr):
                    for sc, tb, leaves, ek in best(child):
                        cand.append((sc, (t,) + tb, leaves, ek))
                cand.sort(key=lambda c: (-c[0], c[1]))
                for c in cand:
                    if c[3] in seen:
                        continue
                    seen.add(c[3])
                    pool.append(c)
                    if len(pool) == k:
                        break
                combos = [(a[0] + b[0], a[1] + b[1], a[2] + b[2], None)
                          for a in out for b in pool]
                combos.sort(key=lambda c: (-c[0], c[1]))
                out = combos[:k]
            out = [(sc, tb, leaves, _edge_key(leaves)) for sc, tb, leaves, _ in out]
        else:
            raise TypeError(f"malformed tree node {type(node).__name__}")
        memo[key] = out
        return out

    n = _tree_n(root)
    models = [ScoredCpdag(merge_leaves(leaves, n), sc) for sc, _, leaves, _ in best(root)]
    return TopK(models, len(models) < k)
