"""Partially directed graphs over variable indices ``0 .. n-1``.

A :class:`ChainGraph` holds a set of directed edges ``(u, v)`` meaning
``u -> v`` and a set of undirected edges stored as sorted pairs. DAGs and
CPDAGs are the special cases with no undirected edges and with a completed
orientation respectively.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from collections import deque
from typing import Iterable

__all__ = [
    "ChainGraph",
    "SepsetMap",
    "CycleError",
    "NotExtensibleError",
    "EnumerationCapError",
    "is_d_separated",
    "orient_v_structures",
    "apply_meek_rules",
    "consistent_extension",
    "extend",
    "enumerate_dags",
    "lowest_order_nodes",
    "connected_components",
    "dag_to_cpdag",
    "complete_graph",
]

log = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 10_000


class CycleError(ValueError):
    pass


class NotExtensibleError(ValueError):
    pass


class EnumerationCapError(RuntimeError):
    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"equivalence class has more than {cap} DAGs")


def _pair(a, b):
    return (a, b) if a < b else (b, a)


class ChainGraph:
    """Immutable partially directed graph."""

    __slots__ = ("n", "directed", "undirected", "_pa", "_ch", "_ne", "_hash")

    def __init__(self, n: int, directed: Iterable = (), undirected: Iterable = ()):
        n = int(n)
        d = frozenset((int(u), int(v)) for u, v in directed)
        und = frozenset(_pair(int(a), int(b)) for a, b in undirected)
        pa = [set() for _ in range(n)]
        ch = [set() for _ in range(n)]
        ne = [set() for _ in range(n)]
        for u, v in d:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge {u}->{v} out of range for n={n}")
            if (v, u) in d:
                raise ValueError(f"edge {u}-{v} directed both ways")
            if _pair(u, v) in und:
                raise ValueError(f"edge {u}-{v} both directed and undirected")
            pa[v].add(u)
            ch[u].add(v)
        for a, b in und:
            if a == b:
                raise ValueError(f"self-loop at {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge {a}-{b} out of range for n={n}")
            ne[a].add(b)
            ne[b].add(a)
        self.n = n
        self.directed = d
        self.undirected = und
        self._pa = tuple(frozenset(s) for s in pa)
        self._ch = tuple(frozenset(s) for s in ch)
        self._ne = tuple(frozenset(s) for s in ne)
        self._hash = None

    # -- adjacency --------------------------------------------------------
    def parents(self, v) -> frozenset:
        return self._pa[v]

    def children(self, v) -> frozenset:
        return self._ch[v]

    def neighbors(self, v) -> frozenset:
        """Undirected neighbours."""
        return self._ne[v]

    def adjacent(self, v) -> frozenset:
        return self._pa[v] | self._ch[v] | self._ne[v]

    def is_adjacent(self, u, v) -> bool:
        return v in self._pa[u] or v in self._ch[u] or v in self._ne[u]

    def has_directed(self, u, v) -> bool:
        return (u, v) in self.directed

    def has_undirected(self, u, v) -> bool:
        return _pair(u, v) in self.undirected

    @property
    def is_dag(self) -> bool:
        if self.undirected:
            return False
        try:
            self.topological_order()
        except CycleError:
            return False
        return True

    def edge_count(self) -> int:
        return len(self.directed) + len(self.undirected)

    def skeleton(self) -> frozenset:
        return frozenset(_pair(u, v) for u, v in self.directed) | self.undirected

    def v_structures(self) -> frozenset:
        """Unshielded colliders ``(x, z, y)`` with ``x < y``, from directed edges."""
        out = set()
        for z in range(self.n):
            pa = sorted(self._pa[z])
            for x, y in itertools.combinations(pa, 2):
                if not self.is_adjacent(x, y):
                    out.add((x, z, y))
        return frozenset(out)

    def topological_order(self) -> list:
        """Kahn order of the directed part (undirected edges ignored), ties by index."""
        indeg = [len(p) for p in self._pa]
        heap = [v for v in range(self.n) if indeg[v] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            v = heapq.heappop(heap)
            order.append(v)
            for c in self._ch[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, c)
        if len(order) != self.n:
            raise CycleError("directed part contains a cycle through "
                             f"{sorted(set(range(self.n)) - set(order))}")
        return order

    def has_directed_path(self, src, dst) -> bool:
        seen = {src}
        stack = [src]
        while stack:
            v = stack.pop()
            for c in self._ch[v]:
                if c == dst:
                    return True
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    def ancestors(self, nodes) -> set:
        out = set(nodes)
        stack = list(nodes)
        while stack:
            v = stack.pop()
            for p in self._pa[v]:
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    def descendants(self, v) -> set:
        out = set()
        stack = [v]
        while stack:
            u = stack.pop()
            for c in self._ch[u]:
                if c not in out:
                    out.add(c)
                    stack.append(c)
        return out

    # -- derived graphs ---------------------------------------------------
    def induced(self, nodes) -> "ChainGraph":
        """Subgraph on ``nodes`` (same index space, other nodes isolated)."""
        s = set(nodes)
        return ChainGraph(self.n,
                          [(u, v) for u, v in self.directed if u in s and v in s],
                          [(a, b) for a, b in self.undirected if a in s and b in s])

    def owned_by(self, nodes) -> "ChainGraph":
        """Edges pointing into ``nodes`` plus undirected edges inside ``nodes``."""
        s = set(nodes)
        return ChainGraph(self.n,
                          [(u, v) for u, v in self.directed if v in s],
                          [(a, b) for a, b in self.undirected if a in s and b in s])

    def union(self, other: "ChainGraph") -> "ChainGraph":
        return ChainGraph(self.n, self.directed | other.directed,
                          self.undirected | other.undirected)

    def thaw(self) -> "_Pdag":
        return _Pdag(self)

    # -- identity / text --------------------------------------------------
    def __eq__(self, other):
        return (isinstance(other, ChainGraph) and self.n == other.n
                and self.directed == other.directed and self.undirected == other.undirected)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, self.directed, self.undirected))
        return self._hash

    def __repr__(self):
        parts = [f"{u}->{v}" for u, v in sorted(self.directed)]
        parts += [f"{a}--{b}" for a, b in sorted(self.undirected)]
        return f"ChainGraph(n={self.n}, [{', '.join(parts)}])"

    def to_text(self, names=None) -> str:
        names = names or [str(i) for i in range(self.n)]
        lines = [f"n={self.n}"]
        lines += [f"{names[u]} -> {names[v]}" for u, v in sorted(self.directed)]
        lines += [f"{names[a]} -- {names[b]}" for a, b in sorted(self.undirected)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, names=None) -> "ChainGraph":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("n="):
            raise ValueError("graph text must start with 'n=<count>'")
        n = int(lines[0][2:])
        names = list(names) if names is not None else [str(i) for i in range(n)]
        if len(names) != n:
            raise ValueError(f"expected {n} names, got {len(names)}")
        index = {nm: i for i, nm in enumerate(names)}
        directed, undirected = [], []
        for ln in lines[1:]:
            for sep, bucket in (("->", directed), ("--", undirected)):
                if sep in ln:
                    a, b = (p.strip() for p in ln.split(sep, 1))
                    try:
                        bucket.append((index[a], index[b]))
                    except KeyError as e:
                        raise ValueError(f"unknown variable {e.args[0]!r} in {ln!r}") from None
                    break
            else:
                raise ValueError(f"bad edge line {ln!r}")
        return cls(n, directed, undirected)


def complete_graph(n: int) -> ChainGraph:
    return ChainGraph(n, (), itertools.combinations(range(n), 2))


class _Pdag:
    """Mutable working copy used inside the orientation algorithms."""

    def __init__(self, g: ChainGraph):
        self.n = g.n
        self.pa = [set(s) for s in g._pa]
        self.ch = [set(s) for s in g._ch]
        self.ne = [set(s) for s in g._ne]

    def adj(self, u, v):
        return v in self.pa[u] or v in self.ch[u] or v in self.ne[u]

    def orient(self, u, v):
        """Turn ``u -- v`` into ``u -> v``."""
        self.ne[u].discard(v)
        self.ne[v].discard(u)
        self.ch[u].add(v)
        self.pa[v].add(u)

    def unorient(self, u, v):
        """Turn ``u -> v`` into ``u -- v``."""
        self.ch[u].discard(v)
        self.pa[v].discard(u)
        self.ne[u].add(v)
        self.ne[v].add(u)

    def remove(self, u, v):
        for s in (self.pa, self.ch, self.ne):
            s[u].discard(v)
            s[v].discard(u)

    def directed_path(self, src, dst):
        seen = {src}
        stack = [src]
        while stack:
            x = stack.pop()
            for c in self.ch[x]:
                if c == dst:
                    return True
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    def freeze(self) -> ChainGraph:
        directed = [(u, v) for v in range(self.n) for u in self.pa[v]]
        undirected = [(a, b) for a in range(self.n) for b in self.ne[a] if a < b]
        return ChainGraph(self.n, directed, undirected)


# --------------------------------------------------------------------------
# Separation sets
# --------------------------------------------------------------------------

class SepsetMap:
    """Separating set recorded for each removed edge, keyed by unordered pair."""

    __slots__ = ("_d",)

    def __init__(self, items=None):
        self._d = {}
        if items:
            for (a, b), s in dict(items).items():
                self[a, b] = s

    def __setitem__(self, pair, s):
        a, b = pair
        self._d[_pair(a, b)] = frozenset(s)

    def __getitem__(self, pair):
        return self._d[_pair(*pair)]

    def get(self, a, b, default=None):
        return self._d.get(_pair(a, b), default)

    def __contains__(self, pair):
        return _pair(*pair) in self._d

    def __len__(self):
        return len(self._d)

    def items(self):
        return self._d.items()

    def copy(self) -> "SepsetMap":
        out = SepsetMap()
        out._d = dict(self._d)
        return out


# --------------------------------------------------------------------------
# d-separation
# --------------------------------------------------------------------------

def is_d_separated(g: ChainGraph, x: int, y: int, z) -> bool:
    """d-separation via the moralised ancestral graph."""
    if g.undirected:
        raise ValueError("d-separation requires a DAG")
    g.topological_order()
    z = set(z)
    if x == y or x in z or y in z:
        raise ValueError("x, y must be distinct and outside z")
    anc = g.ancestors({x, y} | z)
    adj = {v: set() for v in anc}
    for v in anc:
        pa = [p for p in g.parents(v) if p in anc]
        for p in pa:
            adj[v].add(p)
            adj[p].add(v)
        for a, b in itertools.combinations(pa, 2):
            adj[a].add(b)
            adj[b].add(a)
    seen = {x}
    queue = deque([x])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w == y:
                return False
            if w not in seen and w not in z:
                seen.add(w)
                queue.append(w)
    return True


# --------------------------------------------------------------------------
# Orientation
# --------------------------------------------------------------------------

def orient_v_structures(g: ChainGraph, sepsets: SepsetMap, restrict=None,
                        conflicts=None) -> ChainGraph:
    """Orient ``x -> z <- y`` for unshielded ``x - z - y`` with ``z`` outside sepset(x, y).

    Demands are collected over the whole graph before any edge is oriented,
    so the result does not depend on node order. An undirected edge demanded
    in both directions stays undirected; a demand against an existing
    orientation, or one that would close a directed cycle, is skipped. Each
    skipped triple is reported through ``conflicts`` (a list) and the module
    logger. ``restrict`` limits the collider nodes ``z`` considered.
    """
    p = g.thaw()
    zs = range(g.n) if restrict is None else sorted(restrict)
    demands = {}
    for z in zs:
        adj = sorted(p.pa[z] | p.ne[z] | p.ch[z])
        for x, y in itertools.combinations(adj, 2):
            if p.adj(x, y):
                continue
            s = sepsets.get(x, y)
            if s is None or z in s:
                continue
            for a in (x, y):
                if a in p.ne[z]:
                    demands.setdefault((a, z), []).append((x, z, y))
                elif a in p.ch[z]:
                    _conflict(conflicts, (x, z, y), a, z)
    for (a, z), triples in sorted(demands.items()):
        if (z, a) in demands:
            for t in triples:
                _conflict(conflicts, t, a, z)
            continue
        if p.directed_path(z, a):
            for t in triples:
                _conflict(conflicts, t, a, z)
            continue
        p.orient(a, z)
    return p.freeze()


def _conflict(conflicts, triple, a, z):
    x, _, y = triple
    log.debug("v-structure %s->%s<-%s conflicts at edge %s-%s", x, z, y, a, z)
    if conflicts is not None:
        conflicts.append(triple)


def _meek_pass(p: _Pdag, u, v) -> bool:
    """True if ``u -- v`` must be oriented ``u -> v`` by one of Meek's rules."""
    # R1: a -> u -- v, a not adjacent to v
    for a in p.pa[u]:
        if not p.adj(a, v):
            return True
    # R2: u -> w -> v
    if p.ch[u] & p.pa[v]:
        return True
    # R3: u -- c -> v, u -- d -> v, c and d non-adjacent
    cands = sorted(p.ne[u] & p.pa[v])
    for c, d in itertools.combinations(cands, 2):
        if not p.adj(c, d):
            return True
    # R4: u -- d -> c -> v, c adjacent to u, d not adjacent to v
    for c in p.pa[v]:
        if c == u or not p.adj(u, c):
            continue
        for d in p.pa[c]:
            if d in p.ne[u] and not p.adj(d, v):
                return True
    return False


def _meek_closure(p: _Pdag, restrict=None):
    changed = True
    while changed:
        changed = False
        for a in range(p.n):
            for b in sorted(p.ne[a]):
                if b < a:
                    continue
                if restrict is not None and (a not in restrict or b not in restrict):
                    continue
                # a cycle check guards against PDAGs made inconsistent by
                # skipped v-structure conflicts
                if _meek_pass(p, a, b) and not p.directed_path(b, a):
                    p.orient(a, b)
                    changed = True
                elif _meek_pass(p, b, a) and not p.directed_path(a, b):
                    p.orient(b, a)
                    changed = True


def apply_meek_rules(g: ChainGraph, restrict=None) -> ChainGraph:
    """Close ``g`` under Meek's rules R1-R4.

    If ``restrict`` is given only undirected edges with both endpoints in it
    are eligible for orientation.
    """
    g.topological_order()
    p = g.thaw()
    _meek_closure(p, None if restrict is None else set(restrict))
    return p.freeze()


def dag_to_cpdag(dag: ChainGraph) -> ChainGraph:
    """CPDAG of a DAG's equivalence class: skeleton + v-structures + Meek closure."""
    if dag.undirected:
        raise ValueError("expected a DAG")
    vs = dag.v_structures()
    directed = set()
    for x, z, y in vs:
        directed.add((x, z))
        directed.add((y, z))
    und = [e for e in dag.skeleton()
           if (e[0], e[1]) not in directed and (e[1], e[0]) not in directed]
    return apply_meek_rules(ChainGraph(dag.n, directed, und))


# --------------------------------------------------------------------------
# Extensions and equivalence-class enumeration
# --------------------------------------------------------------------------

def consistent_extension(g: ChainGraph) -> ChainGraph:
    """A DAG with the skeleton and v-structures of ``g`` (Dor & Tarsi).

    Repeatedly removes the lowest-indexed node that has no outgoing directed
    edge and whose undirected neighbours are adjacent to all its other
    adjacent nodes, directing its undirected edges into it.
    """
    if not g.undirected:
        g.topological_order()
        return g
    pa = [set(s) for s in g._pa]
    ch = [set(s) for s in g._ch]
    ne = [set(s) for s in g._ne]
    alive = set(range(g.n))
    directed = set(g.directed)

    def adj(a, b):
        return b in pa[a] or b in ch[a] or b in ne[a]

    while alive:
        pick = None
        for x in sorted(alive):
            if ch[x]:
                continue
            others = pa[x] | ne[x]
            if all(adj(y, w) for y in ne[x] for w in others if w != y):
                pick = x
                break
        if pick is None:
            raise NotExtensibleError(
                f"no admissible sink among nodes {sorted(alive)}; "
                f"undirected edges {sorted((a, b) for a in alive for b in ne[a] if a < b)}")
        x = pick
        for y in ne[x]:
            directed.add((y, x))
            ne[y].discard(x)
        for p_ in pa[x]:
            ch[p_].discard(x)
        ne[x].clear()
        pa[x].clear()
        alive.discard(x)
    return ChainGraph(g.n, directed)



def extend(g: ChainGraph):
    """``(dag, forced)``: the consistent extension of ``g`` when one exists.

    Otherwise undirected edges are oriented along a topological order of the
    directed part and ``forced`` is True.
    """
    try:
        return consistent_extension(g), False
    except NotExtensibleError:
        rank = {v: i for i, v in enumerate(g.topological_order())}
        directed = set(g.directed)
        for a, b in g.undirected:
            directed.add((a, b) if rank[a] < rank[b] else (b, a))
        return ChainGraph(g.n, directed), True


def enumerate_dags(g: ChainGraph, cap: int = DEFAULT_ENUMERATION_CAP) -> list:
    """All DAGs sharing the skeleton and v-structures of ``g``.

    Directed edges of ``g`` are kept; undirected edges are oriented by
    backtracking with early pruning of cycles and foreign v-structures.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    g.topological_order()
    target = g.v_structures()
    edges = _bfs_edge_order(g)
    p = g.thaw()
    out = []

    def foreign_vs(a, z):
        # newly directed a -> z: every other parent b of z non-adjacent to a
        for b in p.pa[z]:
            if b != a and not p.adj(a, b) and (min(a, b), z, max(a, b)) not in target:
                return True
        return False

    def rec(i):
        if i == len(edges):
            dag = p.freeze()
            if dag.v_structures() == target:
                out.append(dag)
                if len(out) > cap:
                    raise EnumerationCapError(cap)
            return
        a, b = edges[i]
        for u, v in ((a, b), (b, a)):
            if p.directed_path(v, u):
                continue
            p.orient(u, v)
            if not foreign_vs(u, v):
                rec(i + 1)
            # undo
            p.ch[u].discard(v)
            p.pa[v].discard(u)
            p.ne[u].add(v)
            p.ne[v].add(u)

    rec(0)
    return out


def _bfs_edge_order(g: ChainGraph) -> list:
    order = []
    seen_e = set()
    seen_v = set()
    for root in range(g.n):
        if root in seen_v or not g.neighbors(root):
            continue
        seen_v.add(root)
        q = deque([root])
        while q:
            v = q.popleft()
            for w in sorted(g.neighbors(v)):
                e = _pair(v, w)
                if e not in seen_e:
                    seen_e.add(e)
                    order.append(e)
                if w not in seen_v:
                    seen_v.add(w)
                    q.append(w)
    return order


# --------------------------------------------------------------------------
# Decomposition helpers
# --------------------------------------------------------------------------

def _chain_components(g: ChainGraph, nodes) -> list:
    nodes = set(nodes)
    comp_of = {}
    comps = []
    for v in sorted(nodes):
        if v in comp_of:
            continue
        cid = len(comps)
        comp = {v}
        comp_of[v] = cid
        stack = [v]
        while stack:
            u = stack.pop()
            for w in g.neighbors(u):
                if w in nodes and w not in comp_of:
                    comp_of[w] = cid
                    comp.add(w)
                    stack.append(w)
        comps.append(comp)
    return comps, comp_of


def lowest_order_nodes(g: ChainGraph, nodes=None) -> frozenset:
    """Union of sink chain components of ``g`` restricted to ``nodes``.

    A chain component is a maximal set connected by undirected edges; it is a
    sink when no directed edge leaves it towards another component in ``nodes``.
    """
    nodes = set(range(g.n)) if nodes is None else set(nodes)
    g.induced(nodes).topological_order()
    comps, comp_of = _chain_components(g, nodes)
    out = set()
    for cid, comp in enumerate(comps):
        if not any(c in nodes and comp_of[c] != cid for v in comp for c in g.children(v)):
            out |= comp
    return frozenset(out)


def connected_components(g: ChainGraph, exclude=(), nodes=None) -> list:
    """Components of ``nodes`` minus ``exclude``, ignoring edge direction.

    Sorted by smallest member.
    """
    exclude = set(exclude)
    pool = set(range(g.n)) if nodes is None else set(nodes)
    pool -= exclude
    seen = set()
    out = []
    for v in sorted(pool):
        if v in seen:
            continue
        comp = {v}
        seen.add(v)
        stack = [v]
        while stack:
            u = stack.pop()
            for w in g.adjacent(u):
                if w in pool and w not in seen:
                    seen.add(w)
                    comp.add(w)
                    stack.append(w)
        out.append(frozenset(comp))
    return out
