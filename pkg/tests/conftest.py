from __future__ import annotations

import numpy as np
import pytest

from ivanet.network import FlowNetwork
from ivanet.toy import toy_table

# criterion number -> (name, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def record(number: int, name: str, status: str, detail: str = "") -> None:
    ACCEPTANCE[number] = (name, status, detail)
    print(f"[acceptance {number:2d}] {status}: {name} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, status, detail = ACCEPTANCE[number]
        line = f"{number:2d}. {status:4s} {name}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


def random_network(rng: np.random.Generator, n: int, density: float, sectors: int = 1) -> FlowNetwork:
    """Random non-negative weights on a Bernoulli(density) link pattern."""
    W = rng.uniform(0.0, 1.0, (n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(W, 0.0)
    nodes = tuple((f"c{i // sectors}", f"s{i % sectors}") for i in range(n))
    return FlowNetwork(nodes, W)


def planted_two_blocks(seed: int, n: int = 60, ratio: float = 10.0) -> tuple[FlowNetwork, np.ndarray]:
    """Complete digraph with two equal blocks; within-block weights ``ratio`` times heavier."""
    rng = np.random.default_rng(seed)
    truth = (np.arange(n) >= n // 2).astype(int)
    same = truth[:, None] == truth[None, :]
    W = rng.uniform(0.5, 1.5, (n, n)) * np.where(same, ratio, 1.0)
    np.fill_diagonal(W, 0.0)
    nodes = tuple((f"n{i:02d}", "*") for i in range(n))
    return FlowNetwork(nodes, W), truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_table():
    return toy_table(3, 2, seed=1)


@pytest.fixture
def regional_table():
    return toy_table(8, 3, blocks=2, seed=7)
