"""Seeded synthetic credit networks for the experiment topologies.

Draw order from one ``numpy.random.default_rng(seed)`` stream: the edge mask
(an ``n x n`` uniform matrix per attempt), then liabilities row-major over the
chosen edges, then external assets.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import networkx as nx
import numpy as np

from .errors import InvalidSpec
from .model import CreditNetwork, load_network_file, new_network

TOPOLOGIES = ("erdos_renyi", "core_periphery", "isolated_blocks", "dag_sccs", "from_file")

DEFAULT_P = {"erdos_renyi": 0.3, "isolated_blocks": 0.5}

# Blocks are redrawn until each is weakly connected.
MAX_ATTEMPTS = 1000


@dataclass(frozen=True)
class TopologySpec:
    kind: str = "erdos_renyi"
    n: int = 10
    p: float | None = None
    core_size: int = 3
    core_density: float = 0.8
    periphery_density: float = 0.4
    block_sizes: tuple[int, ...] = (5, 5)
    scc_sizes: tuple[int, ...] = (3, 3, 4)
    inter_scc_p: float = 0.15
    path: str | None = None
    liability_range: tuple[float, float] = (15.0, 40.0)
    asset_range: tuple[float, float] = (30.0, 50.0)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TOPOLOGIES:
            raise InvalidSpec(f"unknown topology {self.kind!r}")
        if self.kind == "from_file":
            if not self.path:
                raise InvalidSpec("from_file needs a path")
            return
        if self.n < 1:
            raise InvalidSpec("n must be positive")
        for name in ("liability_range", "asset_range"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise InvalidSpec(f"{name} must satisfy 0 <= low <= high")
        for name in ("core_density", "periphery_density", "inter_scc_p"):
            if not 0 <= getattr(self, name) <= 1:
                raise InvalidSpec(f"{name} must be a probability")
        if self.p is not None and not 0 <= self.p <= 1:
            raise InvalidSpec("p must be a probability")
        if self.kind == "core_periphery" and not 0 < self.core_size <= self.n:
            raise InvalidSpec("core_size must lie in [1, n]")
        if self.kind == "isolated_blocks" and (sum(self.block_sizes) != self.n or min(self.block_sizes) < 1):
            raise InvalidSpec("block sizes must be positive and sum to n")
        if self.kind == "dag_sccs" and (sum(self.scc_sizes) != self.n or min(self.scc_sizes) < 1):
            raise InvalidSpec("SCC sizes must be positive and sum to n")

    @property
    def edge_probability(self) -> float:
        return self.p if self.p is not None else DEFAULT_P.get(self.kind, 0.3)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("block_sizes", "scc_sizes", "liability_range", "asset_range"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TopologySpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidSpec(f"unknown topology fields: {sorted(unknown)}")
        data = dict(data)
        for k in ("block_sizes", "scc_sizes", "liability_range", "asset_range"):
            if k in data:
                data[k] = tuple(data[k])
        return cls(**data)


def _blocks(sizes) -> list[range]:
    out, start = [], 0
    for s in sizes:
        out.append(range(start, start + s))
        start += s
    return out


def _edge_probabilities(spec: TopologySpec) -> np.ndarray:
    n = spec.n
    prob = np.zeros((n, n))
    if spec.kind == "erdos_renyi":
        prob[:] = spec.edge_probability
    elif spec.kind == "core_periphery":
        c = spec.core_size
        prob[:c, :c] = spec.core_density
        prob[:c, c:] = spec.periphery_density
        prob[c:, :c] = spec.periphery_density
    elif spec.kind == "isolated_blocks":
        for b in _blocks(spec.block_sizes):
            prob[b.start:b.stop, b.start:b.stop] = spec.edge_probability
    elif spec.kind == "dag_sccs":
        blocks = _blocks(spec.scc_sizes)
        for k, b in enumerate(blocks):
            prob[b.start:b.stop, b.start:b.stop] = 1.0
            for later in blocks[k + 1:]:
                prob[b.start:b.stop, later.start:later.stop] = spec.inter_scc_p
    np.fill_diagonal(prob, 0.0)
    return prob


def _blocks_connected(mask: np.ndarray, sizes) -> bool:
    for b in _blocks(sizes):
        sub = mask[b.start:b.stop, b.start:b.stop]
        g = nx.from_numpy_array(sub.astype(np.int8), create_using=nx.DiGraph)
        if len(b) > 1 and not nx.is_weakly_connected(g):
            return False
    return True


def generate(spec: TopologySpec) -> CreditNetwork:
    """Deterministic network for ``spec`` (including its seed)."""
    if spec.kind == "from_file":
        return load_network_file(spec.path)
    rng = np.random.default_rng(spec.seed)
    prob = _edge_probabilities(spec)
    for _ in range(MAX_ATTEMPTS):
        mask = rng.random((spec.n, spec.n)) < prob
        if spec.kind != "isolated_blocks" or _blocks_connected(mask, spec.block_sizes):
            break
    else:
        raise InvalidSpec("could not draw weakly connected blocks; raise p")
    L = np.zeros((spec.n, spec.n))
    L[mask] = rng.uniform(*spec.liability_range, size=int(mask.sum()))
    e = rng.uniform(*spec.asset_range, size=spec.n)
    labels = [f"Firm {i + 1}" for i in range(spec.n)]
    return new_network(labels, L, e)


# -- structural predicates ---------------------------------------------------


def _graph(network: CreditNetwork) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(network.n))
    g.add_edges_from(network.edges())
    return g


def in_ranges(network: CreditNetwork, spec: TopologySpec) -> bool:
    L = network.liabilities
    lo, hi = spec.liability_range
    elo, ehi = spec.asset_range
    pos = L[L > 0]
    e = network.external_assets
    return bool(np.all((pos >= lo) & (pos <= hi)) and np.all((e >= elo) & (e <= ehi)))


def is_isolated_blocks(network: CreditNetwork, sizes) -> bool:
    """No edge crosses blocks and each block is weakly connected."""
    groups = [set(b) for b in _blocks(sizes)]
    comps = [set(c) for c in nx.weakly_connected_components(_graph(network))]
    return sorted(map(sorted, comps)) == sorted(map(sorted, groups))


def is_dag_of_sccs(network: CreditNetwork, sizes) -> bool:
    """SCCs are exactly the fully connected blocks and the condensation is acyclic in block order."""
    g = _graph(network)
    blocks = _blocks(sizes)
    sccs = sorted(sorted(c) for c in nx.strongly_connected_components(g))
    if sccs != sorted(sorted(b) for b in blocks):
        return False
    for b in blocks:
        for i in b:
            for j in b:
                if i != j and not network.liabilities[i, j] > 0:
                    return False
    block_of = {i: k for k, b in enumerate(blocks) for i in b}
    if any(block_of[a] > block_of[b] for a, b in g.edges):
        return False
    return nx.is_directed_acyclic_graph(nx.condensation(g))


def is_core_periphery(network: CreditNetwork, core_size: int) -> bool:
    """Periphery firms have no debts among themselves."""
    per = network.liabilities[core_size:, core_size:]
    return not np.any(per > 0)
