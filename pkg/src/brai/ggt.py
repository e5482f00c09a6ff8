"""Graph generative tree construction by recursive bootstrap (B-RAI).

Every internal node of the tree is a bootstrap node: for each of its ``K``
ancestor groups and its descendant group it holds ``s`` subtrees, each grown
on a fresh bootstrap sample of the full data. Leaves hold the subgraph owned
by their group (edges into the group's nodes) and its BDeu score on the full
data.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field

from .citest import CiBudget, CiCache
from .dataset import Dataset, bootstrap_resample, derive_rng
from .graph import ChainGraph, SepsetMap, complete_graph, extend
from .rai import RaiScope, exit_condition, increase_resolution, split_autonomous
from .score import ScoreCache, ScoreConfig, dag_score

__all__ = [
    "BraiConfig",
    "Leaf",
    "BootstrapNode",
    "BuildContext",
    "GgtBuildError",
    "GgtFormatError",
    "brai_build",
    "build_tree",
    "leaf_extension",
    "iter_leaves",
    "count_unique_cpdags",
    "tree_stats",
    "serialize",
    "deserialize",
    "identity_resample",
]

log = logging.getLogger(__name__)

FORMAT_NAME = "brai-ggt"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class BraiConfig:
    s: int = 3
    ess: float = 1.0
    seed: int = 0
    max_order: int | None = None

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError("s must be a positive integer")
        if not self.ess > 0:
            raise ValueError("ess must be positive")
        if self.max_order is not None and self.max_order < 0:
            raise ValueError("max_order must be non-negative")

    @property
    def score_config(self) -> ScoreConfig:
        return ScoreConfig(self.ess)


@dataclass(frozen=True, eq=False)
class Leaf:
    nodes: frozenset
    cpdag: ChainGraph
    score: float

    def structurally_equal(self, other) -> bool:
        return (isinstance(other, Leaf) and self.nodes == other.nodes
                and self.cpdag == other.cpdag and self.score == other.score)


@dataclass(frozen=True, eq=False)
class BootstrapNode:
    """``groups[i][t]`` is the subtree for ancestor group ``i + 1`` at draw ``t + 1``;
    the last group is the descendant group."""

    nodes: frozenset
    order: int
    groups: tuple

    @property
    def s(self) -> int:
        return len(self.groups[0])

    @property
    def k(self) -> int:
        return len(self.groups) - 1

    @property
    def children(self) -> dict:
        """Children keyed by label, in construction order."""
        out = {}
        for t in range(self.s):
            for i in range(self.k):
                out[f"Anc_{i + 1}^{t + 1}"] = self.groups[i][t]
            out[f"Dec^{t + 1}"] = self.groups[-1][t]
        return out

    def structurally_equal(self, other) -> bool:
        if not isinstance(other, BootstrapNode):
            return False
        if (self.nodes, self.order) != (other.nodes, other.order):
            return False
        if [len(g) for g in self.groups] != [len(g) for g in other.groups]:
            return False
        return all(a.structurally_equal(b) for ga, gb in zip(self.groups, other.groups)
                   for a, b in zip(ga, gb))


class GgtBuildError(RuntimeError):
    def __init__(self, path, cause):
        self.path = tuple(path)
        where = "/".join(self.path) or "<root>"
        super().__init__(f"B-RAI build failed at {where}: {cause}")


class GgtFormatError(ValueError):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


def identity_resample(data, rng, seed=None):
    return data


@dataclass
class BuildContext:
    """Shared state of one tree construction."""

    cfg: BraiConfig
    ci_cache: CiCache = field(default_factory=CiCache)
    score_cache: ScoreCache = field(default_factory=ScoreCache)
    budget: CiBudget = field(default_factory=CiBudget)
    resample: object = bootstrap_resample
    forced_extensions: int = 0


def leaf_extension(g: ChainGraph, endo) -> ChainGraph:
    """DAG used to score a leaf: consistent extension of the owned subgraph.

    Falls back to orienting undirected edges along a topological order of the
    directed part when the subgraph admits no consistent extension.
    """
    return extend(g.owned_by(endo))[0]


def _make_leaf(g, endo, full_data, ctx):
    owned = g.owned_by(endo)
    ext, forced = extend(owned)
    if forced:
        ctx.forced_extensions += 1
        log.debug("leaf over %s is not extensible; using forced orientation", sorted(endo))
    sc = dag_score(full_data, ext, ctx.cfg.score_config, ctx.score_cache, nodes=endo)
    return Leaf(frozenset(endo), owned, sc)


def brai_build(g: ChainGraph, endo, exo, n: int, full_data: Dataset, boot_data: Dataset,
               cfg: BraiConfig, sepsets: SepsetMap | None = None, ctx: BuildContext | None = None,
               path=(), labels=()):
    """Grow the subtree for one autonomous group.

    ``path`` is the integer RNG path of this call and ``labels`` the label
    path used in error messages.
    """
    if ctx is None:
        ctx = BuildContext(cfg)
    endo = frozenset(endo)
    exo = frozenset(exo)
    sepsets = SepsetMap() if sepsets is None else sepsets
    try:
        if exit_condition(g, endo, n, cfg.max_order):
            return _make_leaf(g, endo, full_data, ctx)
        scope = RaiScope(endo, exo, n, g, sepsets)
        g2 = increase_resolution(scope, boot_data, ctx.ci_cache, ctx.budget)
        xd, ancestors = split_autonomous(endo, g2)
    except GgtBuildError:
        raise
    except Exception as e:
        raise GgtBuildError(labels, e) from e
    k = len(ancestors)
    groups = [[] for _ in range(k + 1)]
    exo_d = exo.union(*ancestors)
    for t in range(1, cfg.s + 1):
        boot = ctx.resample(full_data, derive_rng(cfg.seed, path + (t, 0)),
                            seed=(cfg.seed, path + (t, 0)))
        for i, a in enumerate(ancestors, 1):
            groups[i - 1].append(brai_build(g2, a, exo, n + 1, full_data, boot, cfg,
                                            scope.sepsets.copy(), ctx, path + (t, i),
                                            labels + (f"Anc_{i}^{t}",)))
        groups[k].append(brai_build(g2, xd, exo_d, n + 1, full_data, boot, cfg,
                                    scope.sepsets.copy(), ctx, path + (t, k + 1),
                                    labels + (f"Dec^{t}",)))
    return BootstrapNode(endo, n, tuple(tuple(gr) for gr in groups))


def build_tree(data: Dataset, cfg: BraiConfig = BraiConfig(), ctx: BuildContext | None = None):
    """Top-level call: complete undirected graph, no exogenous nodes, order 0."""
    if ctx is None:
        ctx = BuildContext(cfg)
    all_nodes = frozenset(range(data.n_vars))
    return brai_build(complete_graph(data.n_vars), all_nodes, frozenset(), 0,
                      data, data, cfg, SepsetMap(), ctx)


def iter_leaves(root):
    stack = [root]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            yield node
        else:
            for gr in reversed(node.groups):
                stack.extend(reversed(gr))


def tree_stats(root) -> dict:
    leaves = bootstrap = 0
    depth = 0
    stack = [(root, 0)]
    while stack:
        node, d = stack.pop()
        depth = max(depth, d)
        if isinstance(node, Leaf):
            leaves += 1
        else:
            bootstrap += 1
            stack.extend((c, d + 1) for gr in node.groups for c in gr)
    return {"leaves": leaves, "bootstrap_nodes": bootstrap, "depth": depth}


# --------------------------------------------------------------------------
# Unique CPDAG count
# --------------------------------------------------------------------------

_MASK = (1 << 128) - 1


def _edge_hash(kind, a, b) -> int:
    return int.from_bytes(hashlib.blake2b(f"{kind}{a},{b}".encode(), digest_size=16).digest(),
                          "big")


def _graph_hash(g: ChainGraph) -> int:
    h = 0
    for u, v in g.directed:
        h += _edge_hash(">", u, v)
    for a, b in g.undirected:
        h += _edge_hash("-", a, b)
    return h & _MASK


def count_unique_cpdags(root, limit: int = 5_000_000) -> int:
    """Number of distinct merged CPDAGs over all label selections.

    Each distinct subgraph is represented by the sum of 128-bit edge hashes;
    groups own disjoint edge sets, so merging is hash addition.
    """
    memo = {}

    def distinct(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Leaf):
            out = {_graph_hash(node.cpdag)}
        else:
            out = {0}
            for gr in node.groups:
                options = set()
                for child in gr:
                    options |= distinct(child)
                if len(out) * len(options) > limit:
                    raise OverflowError(f"more than {limit} distinct subgraphs at one node")
                out = {(a + b) & _MASK for a in out for b in options}
        memo[key] = out
        return out

    return len(distinct(root))


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def _node_to_obj(node, names):
    if isinstance(node, Leaf):
        return {"kind": "leaf",
                "nodes": [names[v] for v in sorted(node.nodes)],
                "cpdag": node.cpdag.to_text(names),
                "score": node.score}
    children = [{"label": lab, "node": _node_to_obj(c, names)}
                for lab, c in node.children.items()]
    return {"kind": "bootstrap", "order": node.order,
            "nodes": [names[v] for v in sorted(node.nodes)], "children": children}


def serialize(root, names, cfg: BraiConfig | None = None, data: Dataset | None = None) -> bytes:
    """Encode a tree as a JSON document (UTF-8 bytes)."""
    names = list(names)
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "variables": names}
    if cfg is not None:
        header["config"] = {"s": cfg.s, "ess": cfg.ess, "seed": cfg.seed,
                            "max_order": cfg.max_order}
    if data is not None:
        header["dataset"] = {"fingerprint": data.fingerprint(), "n_rows": data.n_rows,
                             "cardinalities": list(data.cardinalities)}
    header["root"] = _node_to_obj(root, names)
    return (json.dumps(header, indent=1) + "\n").encode("utf-8")


_ANC = re.compile(r"^Anc_(\d+)\^(\d+)$")
_DEC = re.compile(r"^Dec\^(\d+)$")


def _obj_to_node(obj, names, index, where):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise GgtFormatError(f"{where}: expected a node object")
    try:
        nodes = frozenset(index[v] for v in obj["nodes"])
        if obj["kind"] == "leaf":
            g = ChainGraph.from_text(obj["cpdag"], names)
            score = obj["score"]
            if not isinstance(score, (int, float)):
                raise GgtFormatError(f"{where}: non-numeric score")
            return Leaf(nodes, g, float(score))
        if obj["kind"] != "bootstrap":
            raise GgtFormatError(f"{where}: unknown node kind {obj['kind']!r}")
        anc, dec = {}, {}
        for ch in obj["children"]:
            lab = ch["label"]
            m = _ANC.match(lab)
            child = _obj_to_node(ch["node"], names, index, f"{where}/{lab}")
            if m:
                anc[(int(m.group(1)), int(m.group(2)))] = child
            elif _DEC.match(lab):
                dec[int(_DEC.match(lab).group(1))] = child
            else:
                raise GgtFormatError(f"{where}: bad label {lab!r}")
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, GgtFormatError):
            raise
        raise GgtFormatError(f"{where}: malformed node ({e})") from None
    s = len(dec)
    k = len(anc) // s if s else 0
    if s == 0 or sorted(dec) != list(range(1, s + 1)) or len(anc) != k * s or any(
            (i, t) not in anc for i in range(1, k + 1) for t in range(1, s + 1)):
        raise GgtFormatError(f"{where}: children do not form s*(K+1) labels")
    groups = [tuple(anc[(i, t)] for t in range(1, s + 1)) for i in range(1, k + 1)]
    groups.append(tuple(dec[t] for t in range(1, s + 1)))
    return BootstrapNode(nodes, int(obj["order"]), tuple(groups))


def deserialize(blob):
    """Inverse of :func:`serialize`; returns ``(root, header)``."""
    if isinstance(blob, (bytes, bytearray)):
        try:
            text = bytes(blob).decode("utf-8")
        except UnicodeDecodeError as e:
            raise GgtFormatError("invalid UTF-8", e.start) from None
    else:
        text = blob
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GgtFormatError(f"invalid GGT document: {e.msg}",
                             len(text[:e.pos].encode("utf-8"))) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise GgtFormatError("not a GGT document", 0)
    if doc.get("version") != FORMAT_VERSION:
        raise GgtFormatError(f"unsupported GGT version {doc.get('version')!r}", 0)
    names = doc.get("variables")
    if not isinstance(names, list) or "root" not in doc:
        raise GgtFormatError("GGT header lacks variables or root", 0)
    index = {nm: i for i, nm in enumerate(names)}
    root = _obj_to_node(doc["root"], names, index, "root")
    header = {k: v for k, v in doc.items() if k != "root"}
    return root, header
