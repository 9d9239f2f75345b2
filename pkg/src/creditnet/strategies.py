"""Execution plans for compression and removal, their evaluation, and baselines.

The objective is the system's total assets after clearing. Compression plans
are applied in execution order (most firms first, seeded tie order); every
strategy in one comparison shares the ordering seed so the exhaustive oracle
searches exactly the semantics it certifies.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .clearing import ClearingConfig, ClearingResult, clear
from .errors import CycleLimitExceeded, InvalidPlan, NotConverged, SearchSpaceTooLarge
from .model import CreditNetwork
from .operations import (
    DebtCycle,
    DebtEdge,
    compress_cycles,
    enumerate_simple_cycles,
    execution_order,
    remove_debts,
)

KINDS = ("compression", "removal", "none")
PROVENANCES = ("none", "random", "greedy", "oracle", "llm")
TIE_EPS = 1e-9


@dataclass(frozen=True)
class ExecutionPlan:
    kind: str
    cycles: tuple[DebtCycle, ...] = ()
    edges: tuple[DebtEdge, ...] = ()
    seed: int = 0
    provenance: str = "none"
    rationale: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidPlan(f"unknown plan kind {self.kind!r}")
        if self.provenance not in PROVENANCES:
            raise InvalidPlan(f"unknown provenance {self.provenance!r}")
        if self.kind == "compression" and self.edges:
            raise InvalidPlan("a compression plan cannot list edges")
        if self.kind == "removal" and self.cycles:
            raise InvalidPlan("a removal plan cannot list cycles")
        if self.kind == "none" and (self.cycles or self.edges):
            raise InvalidPlan("an empty plan lists nothing")

    @property
    def size(self) -> int:
        return len(self.cycles) + len(self.edges)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "cycles": [list(c.firms) for c in self.cycles],
            "edges": [[e.borrower, e.lender] for e in self.edges],
            "seed": self.seed,
            "provenance": self.provenance,
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, data: dict, network: CreditNetwork | None = None) -> "ExecutionPlan":
        return cls(
            kind=data["kind"],
            cycles=tuple(DebtCycle.from_firms(c, network) for c in data.get("cycles", [])),
            edges=tuple(DebtEdge(int(a), int(b)) for a, b in data.get("edges", [])),
            seed=int(data.get("seed", 0)),
            provenance=data.get("provenance", "none"),
            rationale=data.get("rationale", ""),
        )


@dataclass(frozen=True, eq=False)
class ObjectiveReport:
    plan: ExecutionPlan
    pre_total: float
    post_total: float
    pre_defaults: int
    post_defaults: int
    pre_clearing: ClearingResult
    post_clearing: ClearingResult
    network_after: CreditNetwork

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "pre_total": self.pre_total,
            "post_total": self.post_total,
            "pre_defaults": self.pre_defaults,
            "post_defaults": self.post_defaults,
            "pre_iterations": self.pre_clearing.iterations,
            "post_iterations": self.post_clearing.iterations,
            "post_residual": self.post_clearing.residual,
        }


def validate_plan(network: CreditNetwork, plan: ExecutionPlan) -> None:
    """Raise :class:`InvalidPlan` if the plan references cycles or debts the network lacks."""
    L = network.liabilities
    for c in plan.cycles:
        if any(not (0 <= f < network.n) for f in c.firms) or any(not L[a, b] > 0 for a, b in c.edges()):
            raise InvalidPlan(f"cycle {list(c.firms)} is not a debt cycle of this network")
    seen = set()
    for e in plan.edges:
        key = (e.borrower, e.lender)
        if key in seen:
            raise InvalidPlan(f"edge {key} listed twice")
        seen.add(key)
        if not (0 <= e.borrower < network.n and 0 <= e.lender < network.n) or not L[key] > 0:
            raise InvalidPlan(f"edge {key} is not a debt of this network")
    if len(set(c.firms for c in plan.cycles)) != len(plan.cycles):
        raise InvalidPlan("a cycle is listed twice")


def apply_plan(network: CreditNetwork, plan: ExecutionPlan) -> CreditNetwork:
    if plan.kind == "compression":
        return compress_cycles(network, plan.cycles, plan.seed)[0]
    if plan.kind == "removal":
        return remove_debts(network, plan.edges)
    return network


def evaluate_plan(network: CreditNetwork, plan: ExecutionPlan, config: ClearingConfig | None = None) -> ObjectiveReport:
    config = config or ClearingConfig()
    pre = clear(network, config)
    after = apply_plan(network, plan)
    post = pre if after is network else clear(after, config)
    return ObjectiveReport(
        plan, pre.total_assets, post.total_assets, len(pre.default_set), len(post.default_set), pre, post, after
    )


# -- strategies -------------------------------------------------------------


def plan_none(network: CreditNetwork) -> ExecutionPlan:
    return ExecutionPlan("none")


def plan_random(network: CreditNetwork, kind: str, seed: int, order_seed: int = 0, max_cycles: int | None = 10_000) -> ExecutionPlan:
    """Include each candidate independently with probability 1/2."""
    rng = np.random.default_rng(seed)
    note = f"independent inclusion p=1/2, selection seed {seed}"
    if kind == "compression":
        cands = enumerate_simple_cycles(network, max_count=max_cycles)
        keep = rng.random(len(cands)) < 0.5
        chosen = [c for c, k in zip(cands, keep) if k]
        return ExecutionPlan(kind, cycles=tuple(execution_order(chosen, order_seed)), seed=order_seed, provenance="random", rationale=note)
    if kind == "removal":
        cands = network.edges()
        keep = rng.random(len(cands)) < 0.5
        chosen = tuple(DebtEdge(a, b) for (a, b), k in zip(cands, keep) if k)
        return ExecutionPlan(kind, edges=chosen, seed=order_seed, provenance="random", rationale=note)
    return plan_none(network)


def weighted_flow(cycle: DebtCycle) -> float:
    return cycle.min_liability * len(cycle)


def plan_greedy_compression(network: CreditNetwork, top_k: int = 3, order_seed: int = 0, max_cycles: int | None = 10_000) -> ExecutionPlan:
    """Compress the ``top_k`` cycles with the largest minimum-liability x size."""
    cands = enumerate_simple_cycles(network, max_count=max_cycles)
    ranked = sorted(cands, key=lambda c: (-weighted_flow(c), -len(c), c.firms))
    chosen = ranked[:top_k]
    return ExecutionPlan(
        "compression",
        cycles=tuple(execution_order(chosen, order_seed)),
        seed=order_seed,
        provenance="greedy",
        rationale=f"top {top_k} cycles by weighted flow",
    )


def _ordered_subsets(amounts: Sequence[float]):
    """Index subsets sorted by (total, size, lexicographic)."""
    idx = range(len(amounts))
    subsets = [s for r in range(1, len(amounts) + 1) for s in itertools.combinations(idx, r)]
    return sorted(subsets, key=lambda s: (sum(amounts[k] for k in s), len(s), s))


def plan_greedy_removal(network: CreditNetwork, config: ClearingConfig | None = None, max_out_degree: int = 20) -> ExecutionPlan:
    """Restore solvency of defaulters with the least debt forgiven.

    Defaulters are visited by increasing shortfall ``L_i - a_i``. For each,
    the cheapest set of its own debts whose total covers the shortfall and
    does not exceed ``(1 - alpha) * a_i`` is removed, provided the re-cleared
    network leaves that firm and every earlier rescue solvent. Firms with no
    such set are skipped.
    """
    config = config or ClearingConfig()
    tol = config.solvency_tolerance
    current = network
    result = clear(current, config)
    removed: list[DebtEdge] = []
    rescued: list[int] = []
    visited: set[int] = set()
    while True:
        pending = [
            (m.total_liability - m.total_assets, i)
            for i, m in enumerate(result.metrics)
            if not m.solvent and i not in visited
        ]
        if not pending:
            break
        shortfall, i = min(pending)
        visited.add(i)
        cap = (1.0 - config.alpha) * result.metrics[i].total_assets
        lenders = [j for j in range(network.n) if current.liabilities[i, j] > 0]
        if len(lenders) > max_out_degree:
            raise SearchSpaceTooLarge(f"firm {i} has {len(lenders)} creditors (> {max_out_degree})")
        amounts = [float(current.liabilities[i, j]) for j in lenders]
        for subset in _ordered_subsets(amounts):
            total = sum(amounts[k] for k in subset)
            if total < shortfall - tol:
                continue
            if total > cap + tol:
                break
            edges = [DebtEdge(i, lenders[k]) for k in subset]
            trial = remove_debts(current, edges)
            trial_result = clear(trial, config)
            if all(trial_result.metrics[f].solvent for f in rescued + [i]):
                current, result = trial, trial_result
                removed.extend(edges)
                rescued.append(i)
                break
    return ExecutionPlan(
        "removal",
        edges=tuple(sorted(removed)),
        provenance="greedy",
        rationale=f"rescued firms {rescued} by increasing shortfall",
    )


@dataclass(frozen=True)
class OracleCaps:
    max_edges: int = 20
    max_cycles: int = 62
    max_evaluations: int = 1 << 20


def plan_brute_force(
    network: CreditNetwork,
    kind: str,
    config: ClearingConfig | None = None,
    caps: OracleCaps | None = None,
    order_seed: int = 0,
) -> ExecutionPlan:
    """Exhaustive search for the plan maximizing post-clearing total assets.

    Ties (within 1e-9) go to fewer elements, then the lexicographically
    smaller candidate index list. Compression subsets that would skip a cycle
    are never better than the subset without it, so the search only branches
    on cycles that are still intact at their turn.
    """
    config = config or ClearingConfig()
    caps = caps or OracleCaps()
    args = (config.alpha, config.convergence_tolerance, config.max_iterations, config.solvency_tolerance, TIE_EPS)
    if kind == "removal":
        cands = network.edges()
        if len(cands) > caps.max_edges:
            raise SearchSpaceTooLarge(f"{len(cands)} candidate debts exceed the cap of {caps.max_edges}")
        mask, total, _ = kernels.removal_search(network.liabilities, network.external_assets, np.array(cands, dtype=np.int64).reshape(-1, 2), *args)
        if mask < 0:
            raise NotConverged("clearing failed to converge during the removal search")
        chosen = tuple(DebtEdge(*cands[k]) for k in range(len(cands)) if mask >> k & 1)
        return ExecutionPlan(kind, edges=chosen, seed=order_seed, provenance="oracle", rationale=f"exhaustive optimum, total {total!r}")
    if kind == "compression":
        try:
            cands = enumerate_simple_cycles(network, max_count=caps.max_cycles)
        except CycleLimitExceeded as exc:
            raise SearchSpaceTooLarge(f"more than {caps.max_cycles} candidate cycles") from exc
        pos = {c.firms: k for k, c in enumerate(cands)}
        order = [pos[c.firms] for c in execution_order(cands, order_seed)]
        ptr = np.zeros(len(cands) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(c) for c in cands])
        nodes = np.array([f for c in cands for f in c.firms], dtype=np.int64)
        mask, total, leaves = kernels.compression_search(
            network.liabilities, network.external_assets, ptr, nodes, np.array(order, dtype=np.int64), *args, caps.max_evaluations
        )
        if mask == -2:
            raise SearchSpaceTooLarge(f"more than {caps.max_evaluations} distinct compression outcomes")
        if mask < 0:
            raise NotConverged("clearing failed to converge during the compression search")
        chosen = [cands[k] for k in range(len(cands)) if mask >> k & 1]
        return ExecutionPlan(
            kind,
            cycles=tuple(execution_order(chosen, order_seed)),
            seed=order_seed,
            provenance="oracle",
            rationale=f"exhaustive optimum over {leaves} outcomes, total {total!r}",
        )
    return plan_none(network)


# -- comparison -------------------------------------------------------------


@dataclass
class StrategyRow:
    strategy: str
    post_total: float
    plan_size: float
    defaults: float
    seed: int
    runtime: float = 0.0
    total_min: float | None = None
    total_max: float | None = None
    status: str = "ok"
    plans: list = field(default_factory=list)


def compare_strategies(
    network: CreditNetwork,
    kind: str,
    strategies: Sequence[str] = ("none", "random", "greedy", "oracle"),
    config: ClearingConfig | None = None,
    seeds: Sequence[int] = (0,),
    order_seed: int = 0,
    llm: Callable[[CreditNetwork, str, ClearingConfig, int], ExecutionPlan] | None = None,
    caps: OracleCaps | None = None,
    top_k: int = 3,
) -> list[StrategyRow]:
    """One row per strategy; the random strategy is averaged over ``seeds``."""
    config = config or ClearingConfig()
    rows = []
    for name in strategies:
        start = time.perf_counter()
        if name == "random":
            reports = [evaluate_plan(network, plan_random(network, kind, s, order_seed), config) for s in seeds]
            totals = [r.post_total for r in reports]
            rows.append(
                StrategyRow(
                    name,
                    float(np.mean(totals)),
                    float(np.mean([r.plan.size for r in reports])),
                    float(np.mean([r.post_defaults for r in reports])),
                    seeds[0],
                    time.perf_counter() - start,
                    min(totals),
                    max(totals),
                    plans=[r.plan for r in reports],
                )
            )
            continue
        try:
            if name == "none":
                plan = plan_none(network)
            elif name == "greedy":
                if kind == "compression":
                    plan = plan_greedy_compression(network, top_k, order_seed)
                elif kind == "removal":
                    plan = plan_greedy_removal(network, config)
                else:
                    plan = plan_none(network)
            elif name == "oracle":
                plan = plan_brute_force(network, kind, config, caps, order_seed)
            elif name == "llm":
                if llm is None:
                    raise ValueError("the llm strategy needs a client")
                plan = llm(network, kind, config, order_seed)
            else:
                raise ValueError(f"unknown strategy {name!r}")
        except SearchSpaceTooLarge as exc:
            rows.append(StrategyRow(name, float("nan"), float("nan"), float("nan"), order_seed, time.perf_counter() - start, status=f"skipped: {exc}"))
            continue
        rep = evaluate_plan(network, plan, config)
        rows.append(StrategyRow(name, rep.post_total, plan.size, rep.post_defaults, order_seed, time.perf_counter() - start, plans=[plan]))
    return rows
