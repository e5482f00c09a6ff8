"""Discrete data tables, bootstrap resampling, contingency counts and
ground-truth networks used to generate experimental data.

Category values are dense integers ``0 .. card - 1``. Cardinalities are fixed
per variable and carried by every resample, so scores and CI thresholds see
the same state space on the full data and on every bootstrap sample.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import ChainGraph

__all__ = [
    "Dataset",
    "BootstrapSample",
    "ContingencyTable",
    "GroundTruthNetwork",
    "DataParseError",
    "EmptyDatasetError",
    "load_csv",
    "load_schema",
    "save_csv",
    "bootstrap_resample",
    "counts",
    "forward_sample",
    "derive_rng",
    "load_network",
    "parse_network",
    "format_network",
    "builtin_network",
    "random_network",
]

_MAX_DENSE_CELLS = 1 << 26
_ids = itertools.count(1)


def _fresh_id() -> str:
    return f"ds{next(_ids)}"


class DataParseError(ValueError):
    """Raised for malformed CSV, schema or network files."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of discrete observations.

    ``rows`` is an ``(N, d)`` integer array. It is stored read-only together
    with a column-major copy used for fast projections.
    """

    rows: np.ndarray
    cardinalities: tuple
    variable_names: tuple
    id: str = field(default_factory=_fresh_id)

    def __post_init__(self):
        rows = np.asarray(self.rows)
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        if rows.size and not np.issubdtype(rows.dtype, np.integer):
            raise ValueError("rows must hold integer category indices")
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        cards = tuple(int(c) for c in self.cardinalities)
        names = tuple(str(v) for v in self.variable_names)
        d = rows.shape[1]
        if len(cards) != d or len(names) != d:
            raise ValueError("cardinalities and variable_names must match the row arity")
        if any(c < 1 for c in cards):
            raise ValueError("cardinalities must be >= 1")
        if rows.shape[0]:
            lo = rows.min(axis=0)
            hi = rows.max(axis=0)
            bad = np.nonzero((lo < 0) | (hi >= np.asarray(cards)))[0]
            if bad.size:
                i = int(bad[0])
                raise ValueError(f"variable {names[i]!r} has values outside [0, {cards[i]})")
        rows.setflags(write=False)
        cols = np.ascontiguousarray(rows.T)
        cols.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cardinalities", cards)
        object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "_columns", cols)

    @classmethod
    def from_array(cls, rows, cardinalities=None, variable_names=None):
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim == 1:
            rows = rows.reshape(-1, 1)
        d = rows.shape[1]
        if cardinalities is None:
            if rows.shape[0] == 0:
                raise EmptyDatasetError("cannot infer cardinalities from an empty table")
            cardinalities = tuple(int(m) + 1 for m in rows.max(axis=0))
        if variable_names is None:
            variable_names = tuple(f"X{i}" for i in range(d))
        return cls(rows, tuple(cardinalities), tuple(variable_names))

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_vars(self) -> int:
        return self.rows.shape[1]

    def __len__(self):
        return self.n_rows

    def column(self, i: int) -> np.ndarray:
        return self._columns[i]

    def take(self, index) -> "Dataset":
        """New dataset (fresh id) holding the selected rows."""
        return Dataset(self.rows[np.asarray(index)], self.cardinalities, self.variable_names)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.cardinalities, self.variable_names, self.rows.shape)).encode())
        h.update(self.rows.tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class BootstrapSample(Dataset):
    source_id: str = ""
    seed: object = None


@dataclass(frozen=True)
class ContingencyTable:
    """Dense joint counts over an ordered subset of variables.

    ``counts[c0, c1, ...]`` is the number of rows with ``vars[k] == ck``.
    """

    variable_ids: tuple
    cardinalities: tuple
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict:
        nz = np.argwhere(self.counts > 0)
        return {tuple(int(v) for v in cfg): int(self.counts[tuple(cfg)]) for cfg in nz}

    def marginal(self, keep: Sequence[int]) -> "ContingencyTable":
        keep = tuple(keep)
        axes = [self.variable_ids.index(v) for v in keep]
        drop = tuple(a for a in range(len(self.variable_ids)) if a not in axes)
        summed = self.counts.sum(axis=drop)
        # summed keeps remaining axes in original order; reorder to ``keep``
        remaining = [a for a in range(len(self.variable_ids)) if a in axes]
        perm = [remaining.index(a) for a in axes]
        return ContingencyTable(keep, tuple(self.cardinalities[a] for a in axes),
                                np.transpose(summed, perm))


# --------------------------------------------------------------------------
# CSV / schema
# --------------------------------------------------------------------------

def load_schema(path) -> dict:
    """Read a ``name,cardinality`` sidecar file into a dict."""
    schema = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise DataParseError("expected 'name,cardinality'", lineno)
            try:
                card = int(parts[1])
            except ValueError:
                raise DataParseError(f"non-integer cardinality {parts[1]!r}", lineno) from None
            if card < 1:
                raise DataParseError("cardinality must be >= 1", lineno)
            schema[parts[0]] = card
    return schema


def load_csv(path, schema=None) -> Dataset:
    """Load a header + integer-cell CSV file.

    Cardinalities are ``max + 1`` per column unless ``schema`` (a mapping or
    a path to a sidecar file) pins them.
    """
    if schema is not None and not isinstance(schema, dict):
        schema = load_schema(schema)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: no header") from None
        names = [h.strip() for h in header]
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(names):
                raise DataParseError(f"expected {len(names)} cells, got {len(row)}", lineno)
            try:
                rows.append([int(c) for c in row])
            except ValueError:
                raise DataParseError(f"non-integer cell in {row!r}", lineno) from None
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.int64)
    if (arr < 0).any():
        r = int(np.argwhere(arr < 0)[0][0])
        raise DataParseError("negative category index", r + 2)
    cards = [int(m) + 1 for m in arr.max(axis=0)]
    if schema:
        missing = [n for n in names if n not in schema]
        if missing:
            raise DataParseError(f"schema lacks variables {missing}")
        for i, n in enumerate(names):
            if schema[n] < cards[i]:
                raise DataParseError(f"schema cardinality of {n!r} is below observed values")
            cards[i] = schema[n]
    return Dataset(arr, tuple(cards), tuple(names))


def save_csv(data: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.variable_names)
        w.writerows(data.rows.tolist())


# --------------------------------------------------------------------------
# RNG streams and resampling
# --------------------------------------------------------------------------

def derive_rng(seed, path=()) -> np.random.Generator:
    """Independent generator for the stream at ``path`` below ``seed``.

    ``path`` is a tuple of non-negative ints (branch labels); distinct paths
    give statistically independent streams regardless of evaluation order.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(path)))


def bootstrap_resample(data: Dataset, rng: np.random.Generator, seed=None) -> BootstrapSample:
    """Draw ``len(data)`` rows uniformly with replacement."""
    n = data.n_rows
    if n == 0:
        raise EmptyDatasetError("cannot resample an empty dataset")
    idx = rng.integers(0, n, size=n)
    return BootstrapSample(data.rows[idx], data.cardinalities, data.variable_names,
                           source_id=data.id, seed=seed)


def _encode(data: Dataset, vars_: Sequence[int]):
    """Mixed-radix code per row (first variable most significant)."""
    code = np.zeros(data.n_rows, dtype=np.int64)
    size = 1
    for v in vars_:
        c = data.cardinalities[v]
        code *= c
        code += data.column(v)
        size *= c
    return code, size


def counts(data: Dataset, vars_: Sequence[int]) -> ContingencyTable:
    vars_ = tuple(int(v) for v in vars_)
    if not vars_:
        raise ValueError("vars must be nonempty")
    for v in vars_:
        if not 0 <= v < data.n_vars:
            raise ValueError(f"invalid variable index {v}")
    if len(set(vars_)) != len(vars_):
        raise ValueError("duplicate variable in vars")
    cards = tuple(data.cardinalities[v] for v in vars_)
    size = int(np.prod(cards, dtype=np.int64))
    if size > _MAX_DENSE_CELLS:
        raise ValueError(f"joint state space too large for a dense table ({size} cells)")
    code, _ = _encode(data, vars_)
    table = np.bincount(code, minlength=size).reshape(cards)
    return ContingencyTable(vars_, cards, table)


# --------------------------------------------------------------------------
# Ground-truth networks
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroundTruthNetwork:
    """A discrete Bayesian network.

    ``parents[i]`` fixes the parent order of variable ``i``'s CPT; row ``j``
    of ``cpts[i]`` is the parent configuration with mixed-radix index ``j``
    (first parent most significant), i.e. lexicographic order.
    """

    variable_names: tuple
    cardinalities: tuple
    parents: tuple
    cpts: tuple

    def __post_init__(self):
        d = len(self.variable_names)
        if len(self.cardinalities) != d or len(self.parents) != d or len(self.cpts) != d:
            raise ValueError("inconsistent network sizes")
        cpts = []
        for i in range(d):
            pa = tuple(self.parents[i])
            q = int(np.prod([self.cardinalities[p] for p in pa], dtype=np.int64))
            t = np.asarray(self.cpts[i], dtype=float).reshape(q, self.cardinalities[i])
            if (t < 0).any() or not np.allclose(t.sum(axis=1), 1.0, atol=1e-9, rtol=0):
                raise ValueError(f"CPT of {self.variable_names[i]!r} has rows not summing to 1")
            t = t.copy()
            t.setflags(write=False)
            cpts.append(t)
        object.__setattr__(self, "parents", tuple(tuple(p) for p in self.parents))
        object.__setattr__(self, "cpts", tuple(cpts))
        g = ChainGraph(d, [(p, i) for i in range(d) for p in self.parents[i]])
        g.topological_order()  # raises on cycles
        object.__setattr__(self, "graph", g)

    @property
    def n_vars(self):
        return len(self.variable_names)

    def joint(self) -> np.ndarray:
        """Exact joint distribution by full enumeration (small networks only)."""
        shape = self.cardinalities
        p = np.ones(shape)
        for cfg in itertools.product(*[range(c) for c in shape]):
            val = 1.0
            for i in range(self.n_vars):
                j = 0
                for pa in self.parents[i]:
                    j = j * self.cardinalities[pa] + cfg[pa]
                val *= self.cpts[i][j, cfg[i]]
            p[cfg] = val
        return p


def forward_sample(net: GroundTruthNetwork, n: int, rng: np.random.Generator) -> Dataset:
    """Ancestral sampling of ``n`` rows."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = net.n_vars
    out = np.zeros((n, d), dtype=np.int64)
    for v in net.graph.topological_order():
        j = np.zeros(n, dtype=np.int64)
        for pa in net.parents[v]:
            j = j * net.cardinalities[pa] + out[:, pa]
        cum = np.cumsum(net.cpts[v], axis=1)[j]
        u = rng.random(n)
        val = (u[:, None] >= cum[:, :-1]).sum(axis=1)
        out[:, v] = val
    return Dataset(out, net.cardinalities, net.variable_names)


_SECTION = re.compile(r"^\[(\w+)\]$")


def parse_network(text: str) -> GroundTruthNetwork:
    """Parse the three-section network text format.

    ::

        [variables]
        A 2
        B 3
        [edges]
        A -> B
        [cpts]
        A
        0.3 0.7
        B | A
        0.2 0.3 0.5
        0.1 0.1 0.8
    """
    section = None
    names, cards, edges = [], [], []
    blocks = []  # (child, parents, rows, lineno)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1).lower()
            if section not in ("variables", "edges", "cpts"):
                raise DataParseError(f"unknown section [{section}]", lineno)
            continue
        if section == "variables":
            parts = line.split()
            if len(parts) != 2:
                raise DataParseError("expected 'name cardinality'", lineno)
            try:
                cards.append(int(parts[1]))
            except ValueError:
                raise DataParseError("non-integer cardinality", lineno) from None
            names.append(parts[0])
        elif section == "edges":
            parts = [p.strip() for p in line.split("->")]
            if len(parts) != 2:
                raise DataParseError("expected 'parent -> child'", lineno)
            edges.append((parts[0], parts[1], lineno))
        elif section == "cpts":
            if line[0].isdigit() or line[0] == ".":
                if not blocks:
                    raise DataParseError("probability row before a CPT header", lineno)
                try:
                    blocks[-1][2].append([float(x) for x in line.split()])
                except ValueError:
                    raise DataParseError("non-numeric probability", lineno) from None
            else:
                head, _, tail = line.partition("|")
                blocks.append((head.strip(), tail.split(), [], lineno))
        else:
            raise DataParseError("content outside a section", lineno)
    index = {n: i for i, n in enumerate(names)}
    if len(index) != len(names):
        raise DataParseError("duplicate variable name")
    parent_sets = [set() for _ in names]
    for p, c, lineno in edges:
        if p not in index or c not in index:
            raise DataParseError("edge references unknown variable", lineno)
        parent_sets[index[c]].add(index[p])
    parents = [None] * len(names)
    cpts = [None] * len(names)
    for child, pars, rows, lineno in blocks:
        if child not in index:
            raise DataParseError(f"CPT for unknown variable {child!r}", lineno)
        i = index[child]
        try:
            pa = tuple(index[p] for p in pars)
        except KeyError as e:
            raise DataParseError(f"unknown parent {e.args[0]!r}", lineno) from None
        if set(pa) != parent_sets[i]:
            raise DataParseError(f"CPT parents of {child!r} do not match the edge list", lineno)
        q = int(np.prod([cards[p] for p in pa], dtype=np.int64))
        if len(rows) != q or any(len(r) != cards[i] for r in rows):
            raise DataParseError(f"CPT of {child!r} needs {q} rows of {cards[i]} values", lineno)
        parents[i] = pa
        cpts[i] = np.asarray(rows, dtype=float)
    missing = [names[i] for i in range(len(names)) if cpts[i] is None]
    if missing:
        raise DataParseError(f"missing CPTs for {missing}")
    try:
        return GroundTruthNetwork(tuple(names), tuple(cards), tuple(parents), tuple(cpts))
    except ValueError as e:
        raise DataParseError(str(e)) from None


def load_network(path) -> GroundTruthNetwork:
    return parse_network(Path(path).read_text(encoding="utf-8"))


def format_network(net: GroundTruthNetwork) -> str:
    names = net.variable_names
    out = ["[variables]"] + [f"{n} {c}" for n, c in zip(names, net.cardinalities)]
    out.append("[edges]")
    for i in range(net.n_vars):
        out += [f"{names[p]} -> {names[i]}" for p in net.parents[i]]
    out.append("[cpts]")
    for i in range(net.n_vars):
        pa = net.parents[i]
        out.append(names[i] + (" | " + " ".join(names[p] for p in pa) if pa else ""))
        out += [" ".join(repr(float(x)) for x in row) for row in net.cpts[i]]
    return "\n".join(out) + "\n"


def builtin_network(name: str) -> GroundTruthNetwork:
    """One of the bundled bnlearn networks: asia, cancer, earthquake, survey, child."""
    ref = resources.files("brai.networks").joinpath(f"{name.lower()}.net")
    if not ref.is_file():
        raise ValueError(f"no bundled network named {name!r}")
    return parse_network(ref.read_text(encoding="utf-8"))


def random_network(n_vars: int, rng: np.random.Generator, edge_prob=0.5, cardinality=2,
                   max_parents=3, concentration=1.0) -> GroundTruthNetwork:
    """Random DAG over a random ordering with Dirichlet-distributed CPT rows."""
    order = rng.permutation(n_vars)
    parents = [[] for _ in range(n_vars)]
    for a in range(n_vars):
        for b in range(a + 1, n_vars):
            u, v = int(order[a]), int(order[b])
            if len(parents[v]) < max_parents and rng.random() < edge_prob:
                parents[v].append(u)
    if isinstance(cardinality, int):
        cards = (cardinality,) * n_vars
    else:
        cards = tuple(cardinality)
    cpts = []
    for v in range(n_vars):
        parents[v].sort()
        q = int(np.prod([cards[p] for p in parents[v]], dtype=np.int64))
        cpts.append(rng.dirichlet([concentration] * cards[v], size=q))
    return GroundTruthNetwork(tuple(f"X{i}" for i in range(n_vars)), cards,
                              tuple(tuple(p) for p in parents), tuple(cpts))
