"""Portfolio compression of debt cycles and debt removal.

Both operations are pure: they return a new :class:`CreditNetwork` and never
touch external assets.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .errors import CycleLimitExceeded, DuplicateEdge, NoSuchDebt, StaleCycle
from .model import CreditNetwork


@dataclass(frozen=True, order=True)
class DebtEdge:
    borrower: int
    lender: int

    def __post_init__(self):
        if self.borrower == self.lender:
            raise ValueError("a debt edge needs two distinct firms")


@dataclass(frozen=True)
class DebtCycle:
    """Simple directed cycle, stored from its smallest firm index."""

    firms: tuple[int, ...]
    min_liability: float = 0.0

    @classmethod
    def from_firms(cls, firms: Sequence[int], network: CreditNetwork | None = None) -> "DebtCycle":
        firms = tuple(int(f) for f in firms)
        if len(firms) < 2 or len(set(firms)) != len(firms):
            raise ValueError(f"not a simple cycle: {firms}")
        k = firms.index(min(firms))
        firms = firms[k:] + firms[:k]
        mu = cycle_minimum(network.liabilities, firms) if network is not None else 0.0
        return cls(firms, mu)

    def edges(self) -> list[tuple[int, int]]:
        f = self.firms
        return [(f[i], f[(i + 1) % len(f)]) for i in range(len(f))]

    def __len__(self) -> int:
        return len(self.firms)


def cycle_minimum(L: np.ndarray, firms: Sequence[int]) -> float:
    return float(min(L[a, b] for a, b in zip(firms, list(firms[1:]) + [firms[0]])))


def enumerate_simple_cycles(
    network: CreditNetwork, max_len: int | None = None, max_count: int | None = None
) -> list[DebtCycle]:
    """All simple cycles over positive liabilities, longest first then lexicographic."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(network.n))
    graph.add_edges_from(network.edges())
    found = []
    for cyc in nx.simple_cycles(graph, length_bound=max_len):
        found.append(DebtCycle.from_firms(cyc, network))
        if max_count is not None and len(found) > max_count:
            raise CycleLimitExceeded(f"more than {max_count} cycles")
    found.sort(key=lambda c: (-len(c), c.firms))
    return found


def _tie_key(seed: int, cycle: DebtCycle) -> float:
    # Keyed per cycle so that any subset is ordered as a restriction of the full order.
    return random.Random(f"{seed}:{','.join(map(str, cycle.firms))}").random()


def execution_order(cycles: Iterable[DebtCycle], seed: int) -> list[DebtCycle]:
    """Most firms first; equal sizes in a seeded pseudo-random order."""
    return sorted(cycles, key=lambda c: (-len(c), _tie_key(seed, c), c.firms))


@dataclass(frozen=True)
class CompressionStep:
    cycle: DebtCycle
    applied: bool
    amount: float

    def to_dict(self) -> dict:
        return {"cycle": list(self.cycle.firms), "applied": self.applied, "amount": self.amount}


def compress_cycles(
    network: CreditNetwork, cycles: Sequence[DebtCycle], seed: int = 0
) -> tuple[CreditNetwork, list[CompressionStep]]:
    """Compress ``cycles`` one by one in execution order.

    Each cycle's minimum is taken on the current matrix; a cycle that lost an
    edge to an earlier compression is skipped and reported as such.
    """
    L = np.array(network.liabilities)
    for c in cycles:
        if any(not network.liabilities[a, b] > 0 for a, b in c.edges()):
            raise StaleCycle(f"cycle {list(c.firms)} uses an edge absent from the network")
    report = []
    for c in execution_order(cycles, seed):
        src, dst = np.array(c.edges()).T
        flows = L[src, dst]
        if np.any(flows <= 0):
            report.append(CompressionStep(c, False, 0.0))
            continue
        mu = float(flows.min())
        L[src, dst] = flows - mu
        report.append(CompressionStep(c, True, mu))
    return network.with_liabilities(L), report


def remove_debts(network: CreditNetwork, edges: Sequence[DebtEdge]) -> CreditNetwork:
    """Forgive every listed debt in full."""
    seen = set()
    L = np.array(network.liabilities)
    for edge in edges:
        key = (edge.borrower, edge.lender)
        if key in seen:
            raise DuplicateEdge(f"edge {key} listed twice")
        seen.add(key)
        if not (0 <= edge.borrower < network.n and 0 <= edge.lender < network.n) or not L[key] > 0:
            raise NoSuchDebt(f"no debt from firm {edge.borrower} to firm {edge.lender}")
        L[key] = 0.0
    return network.with_liabilities(L)


def net_positions(network: CreditNetwork) -> np.ndarray:
    """Total owed minus total owed-to, per firm."""
    L = network.liabilities
    return L.sum(axis=1) - L.sum(axis=0)
