"""BDeu family and graph scores (natural log)."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .dataset import Dataset, _encode
from .graph import ChainGraph, extend

__all__ = ["ScoreConfig", "ScoreCache", "family_score", "graph_score", "dag_score"]

_DENSE_LIMIT = 1 << 20


@dataclass(frozen=True)
class ScoreConfig:
    ess: float = 1.0

    def __post_init__(self):
        if not self.ess > 0:
            raise ValueError("equivalent sample size must be positive")


class ScoreCache:
    """Family-score store keyed by ``(dataset_id, child, parents, ess)``."""

    def __init__(self):
        self._lock = threading.Lock()
        self._d = {}
        self.hits = 0
        self.misses = 0

    def get(self, key):
        v = self._d.get(key)
        if v is not None:
            self.hits += 1
        return v

    def put_if_absent(self, key, value):
        with self._lock:
            self.misses += 1
            return self._d.setdefault(key, value)

    def __len__(self):
        return len(self._d)


def _bdeu(data: Dataset, child: int, parents: tuple, ess: float) -> float:
    if data.n_rows == 0:
        return 0.0
    r = data.cardinalities[child]
    pcode, q = _encode(data, parents)
    a_jk = ess / (q * r)
    a_j = ess / q
    code = pcode * r + data.column(child)
    if q * r <= _DENSE_LIMIT:
        n_jk = np.bincount(code, minlength=q * r)
        n_jk = n_jk[n_jk > 0]
        n_j = np.bincount(pcode, minlength=q)
        n_j = n_j[n_j > 0]
    else:
        # unobserved cells contribute exactly zero
        _, n_jk = np.unique(code, return_counts=True)
        _, n_j = np.unique(pcode, return_counts=True)
    s = float(np.sum(gammaln(n_jk + a_jk))) - n_jk.size * float(gammaln(a_jk))
    s += n_j.size * float(gammaln(a_j)) - float(np.sum(gammaln(n_j + a_j)))
    return s


def family_score(data: Dataset, child: int, parents, cfg: ScoreConfig = ScoreConfig(),
                 cache: ScoreCache | None = None) -> float:
    """BDeu local log marginal likelihood of ``child`` given ``parents``.

    Dirichlet hyperparameters are ``ess / (q r)`` per cell where ``q`` is the
    number of parent configurations and ``r`` the child cardinality.
    """
    parents = tuple(sorted(int(p) for p in parents))
    child = int(child)
    if child in parents:
        raise ValueError("child cannot be its own parent")
    for v in (child,) + parents:
        if not 0 <= v < data.n_vars:
            raise ValueError(f"invalid variable index {v}")
    if cache is None:
        return _bdeu(data, child, parents, cfg.ess)
    key = (data.id, child, parents, cfg.ess)
    hit = cache.get(key)
    if hit is not None:
        return hit
    return cache.put_if_absent(key, _bdeu(data, child, parents, cfg.ess))


def dag_score(data: Dataset, dag: ChainGraph, cfg: ScoreConfig = ScoreConfig(),
              cache: ScoreCache | None = None, nodes=None) -> float:
    """Sum of family scores of ``dag`` (optionally only for children in ``nodes``)."""
    nodes = range(dag.n) if nodes is None else sorted(nodes)
    return sum(family_score(data, v, dag.parents(v), cfg, cache) for v in nodes)


def graph_score(data: Dataset, g: ChainGraph, cfg: ScoreConfig = ScoreConfig(),
                cache: ScoreCache | None = None) -> float:
    """Score of a DAG, or of a CPDAG through its consistent extension.

    A PDAG without a consistent extension is scored through a forced
    orientation of its undirected edges.
    """
    if g.n != data.n_vars:
        raise ValueError("graph and data disagree on the number of variables")
    return dag_score(data, extend(g)[0], cfg, cache)
