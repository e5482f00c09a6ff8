"""Recursive autonomy identification (RAI).

One recursion level refines the current graph with order-``n`` CI tests,
orients it, splits the endogenous nodes into a descendant group and ``K``
ancestor groups, and recurses into each group with order ``n + 1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .citest import CiBudget, CiCache, CiQuery, ci_test
from .dataset import Dataset
from .graph import (
    ChainGraph,
    SepsetMap,
    apply_meek_rules,
    complete_graph,
    connected_components,
    lowest_order_nodes,
    orient_v_structures,
)

__all__ = [
    "RaiScope",
    "exit_condition",
    "potential_parents",
    "increase_resolution",
    "split_autonomous",
    "rai_learn",
]


@dataclass
class RaiScope:
    """Working state of one recursive call.

    ``graph`` spans all variables; only edges with an endogenous endpoint
    are ever tested or oriented.
    """

    endo: frozenset
    exo: frozenset
    n: int
    graph: ChainGraph
    sepsets: SepsetMap = field(default_factory=SepsetMap)

    def __post_init__(self):
        self.endo = frozenset(self.endo)
        self.exo = frozenset(self.exo)
        if self.endo & self.exo:
            raise ValueError("endogenous and exogenous sets overlap")
        if self.n < 0:
            raise ValueError("order must be non-negative")


def potential_parents(g: ChainGraph, v: int, within=None) -> frozenset:
    pp = g.parents(v) | g.neighbors(v)
    return pp if within is None else pp & within


def exit_condition(g: ChainGraph, endo, n: int, max_order=None) -> bool:
    """True when no endogenous node has ``n`` potential parents besides the tested one."""
    if max_order is not None and n > max_order:
        return True
    return max((len(potential_parents(g, v)) - 1 for v in endo), default=-1) < n


def _separate(p, data, cache, budget, a, b, pool, n):
    """First size-``n`` subset of ``pool`` separating ``a`` and ``b``, or None."""
    if len(pool) < n:
        return None
    for s in itertools.combinations(pool, n):
        q = CiQuery.make(a, b, s, data.id)
        if ci_test(data, q, cache, budget).independent:
            return s
    return None


def increase_resolution(scope: RaiScope, data: Dataset, cache: CiCache | None = None,
                        budget: CiBudget | None = None) -> ChainGraph:
    """Remove edges separated at order ``scope.n`` and re-orient.

    Exogenous-endogenous pairs are tested first, then endogenous pairs.
    Separating sets are written into ``scope.sepsets``.
    """
    endo, exo, n = scope.endo, scope.exo, scope.n
    within = endo | exo
    p = scope.graph.thaw()

    def pool(v, other):
        return sorted(((p.pa[v] | p.ne[v]) & within) - {other})

    for x in sorted(endo):
        for xe in sorted((p.pa[x] | p.ne[x]) & exo):
            s = _separate(p, data, cache, budget, x, xe, pool(x, xe), n)
            if s is not None:
                p.remove(x, xe)
                scope.sepsets[x, xe] = s

    for a in sorted(endo):
        for b in sorted((p.pa[a] | p.ch[a] | p.ne[a]) & endo):
            if b <= a or not p.adj(a, b):
                continue
            # the child's potential parents are tried first
            ends = (b, a) if b in p.ch[a] else (a, b)
            for e, o in (ends, ends[::-1]):
                s = _separate(p, data, cache, budget, e, o, pool(e, o), n)
                if s is not None:
                    p.remove(a, b)
                    scope.sepsets[a, b] = s
                    break

    # orientations inside the group are re-derived from the current skeleton
    # so that ones resting on since-removed edges do not persist
    for v in endo:
        for u in sorted(p.pa[v] & endo):
            p.unorient(u, v)
    g = orient_v_structures(p.freeze(), scope.sepsets, restrict=endo)
    return apply_meek_rules(g, restrict=endo)


def split_autonomous(endo, g: ChainGraph):
    """Descendant group and ancestor groups of ``endo`` in ``g``."""
    endo = frozenset(endo)
    xd = lowest_order_nodes(g, endo)
    ancestors = connected_components(g, exclude=xd, nodes=endo)
    return xd, ancestors


def _rai(scope, data, cache, budget, max_order):
    if exit_condition(scope.graph, scope.endo, scope.n, max_order):
        return scope.graph.owned_by(scope.endo)
    g = increase_resolution(scope, data, cache, budget)
    xd, ancestors = split_autonomous(scope.endo, g)
    nxt = scope.n + 1
    parts = [
        _rai(RaiScope(a, scope.exo, nxt, g, scope.sepsets.copy()), data, cache, budget, max_order)
        for a in ancestors
    ]
    exo_d = scope.exo.union(*ancestors)
    parts.append(_rai(RaiScope(xd, exo_d, nxt, g, scope.sepsets.copy()),
                      data, cache, budget, max_order))
    out = parts[0]
    for part in parts[1:]:
        out = out.union(part)
    return out


def rai_learn(data: Dataset, scope: RaiScope | None = None, cache: CiCache | None = None,
              budget: CiBudget | None = None, max_order=None) -> ChainGraph:
    """Learn a CPDAG with RAI.

    The default scope is the complete undirected graph over all variables
    with an empty exogenous set at order 0.
    """
    if scope is None:
        scope = RaiScope(frozenset(range(data.n_vars)), frozenset(), 0,
                         complete_graph(data.n_vars))
    if cache is None:
        cache = CiCache()
    learned = _rai(scope, data, cache, budget, max_order)
    # keep edges of the scope's graph that this call does not own
    rest = scope.graph.owned_by(set(range(scope.graph.n)) - scope.endo)
    return rest.union(learned) if rest.edge_count() else learned
