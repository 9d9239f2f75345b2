"""Iterative integration of per-firm records into system-wide credit networks.

Records are folded in order. The first record that contradicts what is
already known raises an alert and stops integration; the conflicting record
is not merged.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..errors import InvariantViolation, MalformedRecord, NegativeAmount, SelfLoop
from ..model import CreditNetwork, new_network, normalize_name, weakly_connected_components
from .records import ExtractionRecord, parse_extraction_record

ANOMALY_KINDS = ("amount_conflict", "duplicate_reporter", "negative_amount", "self_loop", "malformed_record")


@dataclass(frozen=True)
class Anomaly:
    kind: str
    record_index: int
    message: str
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "record_index": self.record_index, "message": self.message, "details": self.details}


@dataclass
class AggregationState:
    """Everything integrated so far, keyed by normalized firm name."""

    known_edges: dict[tuple[str, str], tuple[float, int]] = field(default_factory=dict)
    known_assets: dict[str, tuple[float, int]] = field(default_factory=dict)
    names: dict[str, str] = field(default_factory=dict)
    anomalies: list[Anomaly] = field(default_factory=list)

    @property
    def counterparty_only(self) -> set[str]:
        return {self.names[k] for k in self.names if k not in self.known_assets}

    def _see(self, name: str) -> str:
        key = normalize_name(name)
        self.names.setdefault(key, name)
        return key


def integrate_record(state: AggregationState, record: ExtractionRecord, record_index: int, tolerance: float = 1e-6, merge: bool = True) -> list[Anomaly]:
    """Check ``record`` against ``state`` and merge it if consistent.

    Updates ``state`` in place. Returns the anomalies found (also appended to
    ``state.anomalies``); when there are any, nothing from the record is
    merged. ``merge=False`` only checks.
    """
    found = []
    me = normalize_name(record.firm)
    if me in state.known_assets:
        prev = state.known_assets[me][1]
        found.append(
            Anomaly("duplicate_reporter", record_index, f"{record.firm} already reported in record {prev}", {"firm": record.firm, "previous_record": prev})
        )
    for b, l, amount in record.liabilities:
        key = (normalize_name(b), normalize_name(l))
        if key in state.known_edges:
            known, src = state.known_edges[key]
            if abs(known - amount) > tolerance:
                found.append(
                    Anomaly(
                        "amount_conflict",
                        record_index,
                        f"{b} owes {l}: record {src} says {known!r}, record {record_index} says {amount!r}",
                        {
                            "borrower": b,
                            "lender": l,
                            "amounts": [known, amount],
                            "records": [src, record_index],
                            "difference": abs(known - amount),
                        },
                    )
                )
    state.anomalies.extend(found)
    if found or not merge:
        return found
    state._see(record.firm)
    state.known_assets[me] = (record.external_assets, record_index)
    for b, l, amount in record.liabilities:
        key = (state._see(b), state._see(l))
        state.known_edges.setdefault(key, (amount, record_index))
    return found


@dataclass
class AggregationResult:
    networks: list[CreditNetwork]
    anomalies: list[Anomaly]
    halted_at: int | None
    assets_unknown: set[str]
    state: AggregationState

    def to_dict(self) -> dict:
        return {
            "components": [n.to_dict() for n in self.networks],
            "anomalies": [a.to_dict() for a in self.anomalies],
            "halted_at": self.halted_at,
            "assets_unknown": sorted(self.assets_unknown),
        }


def materialize(state: AggregationState) -> list[CreditNetwork]:
    """Aggregate as weakly connected components; firms without records get zero assets."""
    keys = list(state.names)
    index = {k: i for i, k in enumerate(keys)}
    n = len(keys)
    L = np.zeros((n, n))
    for (b, l), (amount, _) in state.known_edges.items():
        L[index[b], index[l]] = amount
    e = np.array([state.known_assets.get(k, (0.0, -1))[0] for k in keys], dtype=np.float64)
    if n == 0:
        return []
    return weakly_connected_components(new_network([state.names[k] for k in keys], L, e))


def aggregate_statements(records: Sequence[ExtractionRecord], tolerance: float = 1e-6, collect_all: bool = False) -> AggregationResult:
    """Fold ``records`` in order; halt at the first anomaly.

    With ``collect_all`` the scan continues past the first fault, checking
    later records without merging them, so every anomaly is reported.
    """
    state = AggregationState()
    halted_at = None
    for k, record in enumerate(records):
        found = integrate_record(state, record, k, tolerance, merge=halted_at is None)
        if found and halted_at is None:
            halted_at = k
            if not collect_all:
                break
    return AggregationResult(materialize(state), list(state.anomalies), halted_at, state.counterparty_only, state)


def anomaly_from_error(exc: Exception, index: int) -> Anomaly:
    if isinstance(exc, NegativeAmount):
        kind = "negative_amount"
    elif isinstance(exc, SelfLoop):
        kind = "self_loop"
    else:
        kind = "malformed_record"
    details = {}
    if isinstance(exc, MalformedRecord):
        details = {"line": exc.line, "column": exc.column}
    return Anomaly(kind, index, str(exc), details)


def aggregate_texts(texts: Iterable[str], tolerance: float = 1e-6) -> AggregationResult:
    """Parse record texts and aggregate; an unparseable record halts like any anomaly."""
    records = []
    for k, text in enumerate(texts):
        try:
            records.append(parse_extraction_record(text))
        except (MalformedRecord, InvariantViolation) as exc:
            partial = aggregate_statements(records, tolerance)
            if partial.halted_at is not None:
                return partial
            partial.anomalies.append(anomaly_from_error(exc, k))
            partial.state.anomalies.append(partial.anomalies[-1])
            partial.halted_at = k
            return partial
    return aggregate_statements(records, tolerance)


def same_networks(found: Sequence[CreditNetwork], expected: Sequence[CreditNetwork]) -> bool:
    """Equal as sets of networks, up to firm order within each network."""

    def canon(net: CreditNetwork):
        order = sorted(range(net.n), key=lambda i: normalize_name(net.labels[i]))
        return (
            tuple(normalize_name(net.labels[i]) for i in order),
            net.liabilities[np.ix_(order, order)].tobytes(),
            net.external_assets[order].tobytes(),
        )

    return sorted(map(canon, found)) == sorted(map(canon, expected))
