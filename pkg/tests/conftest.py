import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from brai.dataset import Dataset, GroundTruthNetwork


def collider_network(weak=False) -> GroundTruthNetwork:
    """X -> Z <- Y over binary variables."""
    z_cpt = np.array([[0.9, 0.1], [0.3, 0.7], [0.2, 0.8], [0.6, 0.4]])
    if weak:
        z_cpt = np.array([[0.6, 0.4], [0.45, 0.55], [0.4, 0.6], [0.55, 0.45]])
    return GroundTruthNetwork(
        ("X", "Y", "Z"), (2, 2, 2), ((), (), (0, 1)),
        (np.array([[0.5, 0.5]]), np.array([[0.6, 0.4]]), z_cpt),
    )


def chain_network() -> GroundTruthNetwork:
    """A -> B -> C -> D with strong links."""
    strong = np.array([[0.85, 0.15], [0.2, 0.8]])
    return GroundTruthNetwork(
        ("A", "B", "C", "D"), (2, 2, 2, 2), ((), (0,), (1,), (2,)),
        (np.array([[0.4, 0.6]]), strong, strong, strong),
    )


def product_dataset(cards, reps=1) -> Dataset:
    """Every joint configuration repeated ``reps`` times: all variables exactly independent."""
    grids = np.meshgrid(*[np.arange(c) for c in cards], indexing="ij")
    rows = np.stack([g.ravel() for g in grids], axis=1)
    return Dataset.from_array(np.repeat(rows, reps, axis=0), tuple(cards))


@pytest.fixture
def collider():
    return collider_network()


@pytest.fixture
def chain():
    return chain_network()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
