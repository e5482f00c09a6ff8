"""Conditional-independence decisions by thresholding plug-in CMI.

The threshold is the leading term of the plug-in estimator's bias,
``(|X|-1)(|Y|-1) prod|Z_i| / (2 N ln 2)`` bits. Verdicts are cached per
dataset identity and every cache miss is charged to a :class:`CiBudget`.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .dataset import ContingencyTable, Dataset, counts

__all__ = [
    "CiQuery",
    "CiVerdict",
    "CiBudget",
    "CiCache",
    "estimate_cmi",
    "bias_threshold",
    "ci_test",
]


@dataclass(frozen=True)
class CiQuery:
    x: int
    y: int
    z: tuple
    dataset_id: str

    @classmethod
    def make(cls, x, y, z, dataset_id) -> "CiQuery":
        x, y = int(x), int(y)
        if x == y:
            raise ValueError("x and y must differ")
        z = tuple(sorted(int(v) for v in z))
        if x in z or y in z:
            raise ValueError("x, y must not appear in the condition set")
        if len(set(z)) != len(z):
            raise ValueError("duplicate variable in condition set")
        if x > y:
            x, y = y, x
        return cls(x, y, z, dataset_id)


@dataclass(frozen=True)
class CiVerdict:
    cmi: float
    threshold: float
    independent: bool


class CiBudget:
    """Count of executed CI tests, split by condition-set size."""

    def __init__(self):
        self._lock = threading.Lock()
        self.by_order = Counter()

    @property
    def count(self) -> int:
        return sum(self.by_order.values())

    def charge(self, order: int) -> None:
        with self._lock:
            self.by_order[order] += 1

    def merge(self, other: "CiBudget") -> None:
        with self._lock:
            self.by_order.update(other.by_order)

    def report(self) -> str:
        lines = ["order,count"]
        lines += [f"{k},{self.by_order[k]}" for k in sorted(self.by_order)]
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"CiBudget(count={self.count}, by_order={dict(sorted(self.by_order.items()))})"


class CiCache:
    """Verdict store with insert-if-absent semantics."""

    def __init__(self):
        self._lock = threading.Lock()
        self._d = {}

    def get(self, q: CiQuery):
        return self._d.get(q)

    def put_if_absent(self, q: CiQuery, v: CiVerdict) -> CiVerdict:
        with self._lock:
            return self._d.setdefault(q, v)

    def __len__(self):
        return len(self._d)


def _entropy_bits(c: np.ndarray, n: float) -> float:
    c = c[c > 0].astype(float)
    return math.log2(n) - float(np.dot(c, np.log2(c))) / n


def estimate_cmi(table: ContingencyTable) -> float:
    """Plug-in ``CMI(X; Y | Z)`` in bits for a table over ``(x, y, z...)``."""
    t = table.counts
    n = float(t.sum())
    if n < 1:
        raise ValueError("empty contingency table")
    h_xyz = _entropy_bits(t.ravel(), n)
    h_xz = _entropy_bits(t.sum(axis=1).ravel(), n)
    h_yz = _entropy_bits(t.sum(axis=0).ravel(), n)
    if t.ndim > 2:
        h_z = _entropy_bits(t.sum(axis=(0, 1)).ravel(), n)
    else:
        h_z = 0.0
    return max(0.0, h_xz + h_yz - h_xyz - h_z)


def bias_threshold(card_x: int, card_y: int, card_z, n: int) -> float:
    """Leading-order bias of the plug-in CMI, in bits."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if card_x < 1 or card_y < 1 or any(c < 1 for c in card_z):
        raise ValueError("cardinalities must be >= 1")
    dof = (card_x - 1) * (card_y - 1) * math.prod(card_z)
    return dof / (2.0 * n * math.log(2.0))


def ci_test(data: Dataset, q: CiQuery, cache: CiCache | None = None,
            budget: CiBudget | None = None) -> CiVerdict:
    if q.dataset_id != data.id:
        raise ValueError("query was built for a different dataset")
    if cache is not None:
        hit = cache.get(q)
        if hit is not None:
            return hit
    table = counts(data, (q.x, q.y) + q.z)
    cmi = estimate_cmi(table)
    card = data.cardinalities
    thr = bias_threshold(card[q.x], card[q.y], [card[v] for v in q.z], data.n_rows)
    verdict = CiVerdict(cmi, thr, cmi <= thr)
    if budget is not None:
        budget.charge(len(q.z))
    if cache is not None:
        verdict = cache.put_if_absent(q, verdict)
    return verdict
