"""Credit network data model: liabilities, external assets and per-firm metrics.

Amounts are float64 in millions. Entry ``liabilities[i, j]`` is the debt firm
``i`` owes firm ``j``; firm order is the order of ``labels``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    DimensionMismatch,
    DuplicateLabel,
    NegativeAmount,
    NonSquareMatrix,
    NonzeroDiagonal,
    ParseError,
    PaymentExceedsLiability,
    SchemaError,
)

TOL = 1e-9

_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Comparison key for a firm name: trimmed, whitespace collapsed, casefolded."""
    return _WS.sub(" ", name.strip()).casefold()


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CreditNetwork:
    labels: tuple[str, ...]
    liabilities: np.ndarray
    external_assets: np.ndarray

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def total_liabilities(self) -> np.ndarray:
        return self.liabilities.sum(axis=1)

    def edges(self) -> list[tuple[int, int]]:
        """Positive-liability edges in row-major order."""
        rows, cols = np.nonzero(self.liabilities > 0)
        return list(zip(rows.tolist(), cols.tolist()))

    def index_of(self, name: str) -> int:
        key = normalize_name(name)
        for i, label in enumerate(self.labels):
            if normalize_name(label) == key:
                return i
        raise KeyError(name)

    def with_liabilities(self, liabilities: np.ndarray) -> "CreditNetwork":
        return new_network(self.labels, liabilities, self.external_assets)

    def subnetwork(self, indices: Sequence[int]) -> "CreditNetwork":
        idx = np.asarray(indices, dtype=np.intp)
        return CreditNetwork(
            tuple(self.labels[i] for i in idx),
            _frozen(self.liabilities[np.ix_(idx, idx)]),
            _frozen(self.external_assets[idx]),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CreditNetwork):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.liabilities, other.liabilities)
            and np.array_equal(self.external_assets, other.external_assets)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"CreditNetwork(n={self.n}, edges={len(self.edges())})"

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "external_assets": self.external_assets.tolist(),
            "liabilities": self.liabilities.tolist(),
        }


def new_network(labels, liabilities, external_assets) -> CreditNetwork:
    """Validate inputs and build an immutable :class:`CreditNetwork`."""
    labels = tuple(str(x) for x in labels)
    L = np.asarray(liabilities, dtype=np.float64)
    e = np.asarray(external_assets, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise NonSquareMatrix(f"liability matrix must be square, got shape {L.shape}")
    n = L.shape[0]
    if e.shape != (n,):
        raise DimensionMismatch(f"external assets have shape {e.shape}, expected ({n},)")
    if len(labels) != n:
        raise DimensionMismatch(f"{len(labels)} labels for a {n}x{n} matrix")
    if not (np.all(np.isfinite(L)) and np.all(np.isfinite(e))):
        raise NegativeAmount("amounts must be finite")
    if np.any(L < 0) or np.any(e < 0):
        raise NegativeAmount("liabilities and external assets must be nonnegative")
    if np.any(np.diag(L) != 0):
        raise NonzeroDiagonal("a firm cannot be liable to itself")
    seen: dict[str, str] = {}
    for label in labels:
        key = normalize_name(label)
        if key in seen:
            raise DuplicateLabel(f"labels {seen[key]!r} and {label!r} collide")
        seen[key] = label
    return CreditNetwork(labels, _frozen(L), _frozen(e))


@dataclass(frozen=True)
class FirmMetrics:
    total_liability: float
    total_assets: float
    equity: float
    solvent: bool


def check_payments(network: CreditNetwork, payments) -> np.ndarray:
    P = np.asarray(payments, dtype=np.float64)
    if P.shape != network.liabilities.shape:
        raise DimensionMismatch(f"payments shape {P.shape} != {network.liabilities.shape}")
    if np.any(P < -TOL):
        raise NegativeAmount("payments must be nonnegative")
    if np.any(P > network.liabilities + TOL):
        raise PaymentExceedsLiability("a payment exceeds the corresponding liability")
    return P


def incoming_assets(network: CreditNetwork, payments: np.ndarray) -> np.ndarray:
    return network.external_assets + payments.sum(axis=0)


def firm_metrics(network: CreditNetwork, payments, solvency_tolerance: float = TOL) -> list[FirmMetrics]:
    P = check_payments(network, payments)
    assets = incoming_assets(network, P)
    owed = network.total_liabilities
    out = []
    for a, L in zip(assets.tolist(), owed.tolist()):
        out.append(FirmMetrics(L, a, max(0.0, a - L), a >= L - solvency_tolerance))
    return out


def total_assets(network: CreditNetwork, payments) -> float:
    """System objective: the sum of every firm's total assets."""
    return float(incoming_assets(network, check_payments(network, payments)).sum())


def weakly_connected_components(network: CreditNetwork) -> list[CreditNetwork]:
    """Split into sub-networks by weak connectivity, ordered by smallest member index."""
    _, comp = connected_components(network.liabilities > 0, directed=True, connection="weak")
    groups: dict[int, list[int]] = {}
    for i, c in enumerate(comp.tolist()):
        groups.setdefault(c, []).append(i)
    return [network.subnetwork(members) for members in sorted(groups.values())]


# -- network file format ----------------------------------------------------

_KEYS = ("labels", "external_assets", "liabilities")


def network_from_dict(data) -> CreditNetwork:
    if not isinstance(data, dict):
        raise SchemaError("network document must be a JSON object")
    unknown = set(data) - set(_KEYS)
    if unknown:
        raise SchemaError(f"unknown keys: {sorted(unknown)}")
    missing = [k for k in _KEYS if k not in data]
    if missing:
        raise SchemaError(f"missing keys: {missing}")
    labels, e, L = data["labels"], data["external_assets"], data["liabilities"]
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise SchemaError("labels must be a list of strings")

    def _num(x):
        return isinstance(x, (int, float)) and not isinstance(x, bool)

    if not isinstance(e, list) or not all(_num(x) for x in e):
        raise SchemaError("external_assets must be a list of numbers")
    if not isinstance(L, list) or not all(isinstance(r, list) and all(_num(x) for x in r) for r in L):
        raise SchemaError("liabilities must be a list of numeric rows")
    if len({len(r) for r in L}) > 1:
        raise SchemaError("liability rows have unequal lengths")
    if not L:
        L = np.zeros((0, 0))
    return new_network(labels, L, e)


def dumps_network(network: CreditNetwork) -> str:
    """Canonical JSON text: fixed key order, one matrix row per line, repr-precision floats."""
    rows = ",\n    ".join(json.dumps(r) for r in network.liabilities.tolist())
    return (
        "{\n"
        f'  "labels": {json.dumps(list(network.labels), ensure_ascii=False)},\n'
        f'  "external_assets": {json.dumps(network.external_assets.tolist())},\n'
        f'  "liabilities": [\n    {rows}\n  ]\n'
        "}\n"
    )


def loads_network(text: str) -> CreditNetwork:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return network_from_dict(data)


def save_network_file(network: CreditNetwork, path) -> None:
    Path(path).write_text(dumps_network(network), encoding="utf-8")


def load_network_file(path) -> CreditNetwork:
    return loads_network(Path(path).read_text(encoding="utf-8"))
