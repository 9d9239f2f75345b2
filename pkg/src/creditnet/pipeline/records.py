"""Extraction records: one firm's view of its debts, in a small Python-literal grammar.

    firm = "Firm A"
    external_assets = 13
    liabilities = [("Firm A", "Firm B", 5), ("Firm E", "Firm A", 3)]
"""
from __future__ import annotations

import ast
import json
import math
import re
import textwrap
from dataclasses import dataclass, replace

import numpy as np

from ..errors import InvariantViolation, MalformedRecord, NegativeAmount, SelfLoop
from ..model import CreditNetwork, normalize_name

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_DECIMAL = re.compile(r"[+-]?\s*(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


@dataclass(frozen=True)
class ExtractionRecord:
    firm: str
    external_assets: float
    liabilities: tuple[tuple[str, str, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "external_assets", float(self.external_assets))
        object.__setattr__(
            self, "liabilities", tuple((str(b), str(l), float(a)) for b, l, a in self.liabilities)
        )
        if not math.isfinite(self.external_assets) or self.external_assets < 0:
            raise NegativeAmount(f"{self.firm}: external assets must be a nonnegative number")
        me = normalize_name(self.firm)
        seen = set()
        for b, l, a in self.liabilities:
            kb, kl = normalize_name(b), normalize_name(l)
            if not math.isfinite(a) or a < 0:
                raise NegativeAmount(f"{self.firm}: negative amount on ({b!r}, {l!r})")
            if kb == kl:
                raise SelfLoop(f"{self.firm}: {b!r} cannot owe itself")
            if me not in (kb, kl):
                raise InvariantViolation(f"{self.firm}: triple ({b!r}, {l!r}) does not involve the reporting firm")
            if (kb, kl) in seen:
                raise InvariantViolation(f"{self.firm}: ({b!r}, {l!r}) reported twice")
            seen.add((kb, kl))


def _strip_fence(text: str) -> str:
    blocks = _FENCE.findall(text)
    return blocks[-1] if blocks else text


def _number(node: ast.expr, src: str) -> float:
    seg = ast.get_source_segment(src, node) or ""
    value = None
    if isinstance(node, ast.Constant) and type(node.value) in (int, float):
        value = float(node.value)
    elif (
        isinstance(node, ast.UnaryOp)
        and isinstance(node.op, (ast.USub, ast.UAdd))
        and isinstance(node.operand, ast.Constant)
        and type(node.operand.value) in (int, float)
    ):
        value = float(node.operand.value) * (-1 if isinstance(node.op, ast.USub) else 1)
    if value is None or not _DECIMAL.fullmatch(seg.strip()):
        raise MalformedRecord(f"expected a decimal number, got {seg!r}", node.lineno, node.col_offset + 1)
    return value


def _string(node: ast.expr, src: str) -> str:
    seg = ast.get_source_segment(src, node) or ""
    if not (isinstance(node, ast.Constant) and isinstance(node.value, str) and seg.startswith('"')):
        raise MalformedRecord(f"expected a double-quoted name, got {seg!r}", node.lineno, node.col_offset + 1)
    return node.value


def parse_extraction_record(text: str) -> ExtractionRecord:
    """Parse the three-assignment grammar, optionally wrapped in a fenced block."""
    src = textwrap.dedent(_strip_fence(text)).strip()
    try:
        tree = ast.parse(src)
    except SyntaxError as exc:
        raise MalformedRecord(f"not a valid record: {exc.msg}", exc.lineno, exc.offset) from None
    names = ("firm", "external_assets", "liabilities")
    if len(tree.body) != 3:
        raise MalformedRecord(f"expected 3 assignments ({', '.join(names)}), found {len(tree.body)} statements", 1, 1)
    values = []
    for stmt, name in zip(tree.body, names):
        if not (
            isinstance(stmt, ast.Assign)
            and len(stmt.targets) == 1
            and isinstance(stmt.targets[0], ast.Name)
            and stmt.targets[0].id == name
        ):
            raise MalformedRecord(f"expected assignment to {name!r}", stmt.lineno, stmt.col_offset + 1)
        values.append(stmt.value)
    firm = _string(values[0], src)
    assets = _number(values[1], src)
    lst = values[2]
    if not isinstance(lst, ast.List):
        raise MalformedRecord("liabilities must be a list", lst.lineno, lst.col_offset + 1)
    triples = []
    for item in lst.elts:
        if not (isinstance(item, ast.Tuple) and len(item.elts) == 3):
            raise MalformedRecord("each liability must be (borrower, lender, amount)", item.lineno, item.col_offset + 1)
        b, l, a = item.elts
        triples.append((_string(b, src), _string(l, src), _number(a, src)))
    return ExtractionRecord(firm, assets, tuple(triples))


def format_amount(x: float) -> str:
    """Shortest text that round-trips: integers without a decimal point."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _quote(name: str) -> str:
    return json.dumps(name, ensure_ascii=False)


def render_extraction_record(record: ExtractionRecord) -> str:
    triples = ", ".join(f"({_quote(b)}, {_quote(l)}, {format_amount(a)})" for b, l, a in record.liabilities)
    return (
        f"firm = {_quote(record.firm)}\n"
        f"external_assets = {format_amount(record.external_assets)}\n"
        f"liabilities = [{triples}]\n"
    )


def records_from_network(network: CreditNetwork) -> list[ExtractionRecord]:
    """Each firm's own view: its payables (by lender) then its receivables (by borrower)."""
    L = network.liabilities
    names = network.labels
    out = []
    for i, firm in enumerate(names):
        owes = [(firm, names[j], float(L[i, j])) for j in np.nonzero(L[i] > 0)[0]]
        owed = [(names[j], firm, float(L[j, i])) for j in np.nonzero(L[:, i] > 0)[0]]
        out.append(ExtractionRecord(firm, float(network.external_assets[i]), tuple(owes + owed)))
    return out


def inject_conflict(records: list[ExtractionRecord], seed: int, delta: float = 1.0) -> tuple[list[ExtractionRecord], int]:
    """Perturb one debt in the later of its two reports.

    Returns the new record list and the index at which integration must halt.
    """
    index = {normalize_name(r.firm): k for k, r in enumerate(records)}
    pairs = []
    for k, r in enumerate(records):
        for t, (b, l, _) in enumerate(r.liabilities):
            other = normalize_name(l) if normalize_name(b) == normalize_name(r.firm) else normalize_name(b)
            if other in index and index[other] < k:
                pairs.append((k, t))
    if not pairs:
        raise ValueError("no debt is reported by both parties; nothing to perturb")
    rng = np.random.default_rng(seed)
    k, t = pairs[int(rng.integers(len(pairs)))]
    rec = records[k]
    triples = list(rec.liabilities)
    b, l, a = triples[t]
    triples[t] = (b, l, a + delta)
    out = list(records)
    out[k] = replace(rec, liabilities=tuple(triples))
    return out, k
