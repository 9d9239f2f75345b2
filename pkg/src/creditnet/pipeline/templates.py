"""Synthetic financial statements rendered from extraction records.

Statements are built from a fixed phrase library, so :func:`read_statement`
can invert them exactly; that inverse backs the offline statement-reading
mock client.
"""
from __future__ import annotations

import random
import re

from ..errors import MalformedRecord, UnknownTemplate
from ..model import normalize_name
from .records import ExtractionRecord, format_amount

TEMPLATES = ("disclosure", "itemized", "narrative")

HEADER = "{firm} - Annual Financial Disclosure (2024)"

ASSETS = (
    "As of December 31, 2024, {firm} maintains ${amt} million in liquid assets, held across cash deposits and short-term Treasury securities.",
    "{firm} reports external assets of ${amt} million, comprising deposits at commercial banks and government bonds.",
)
ENCUMBERED = (
    "However, ${amt} million of these reserves are encumbered as collateral for a standby letter of credit and are unavailable for general use."
)
PAYABLES = (
    "{firm} has entered into a revolving credit facility with {cp}, carrying an outstanding balance of ${amt} million.",
    "A term loan agreement with {cp} requires {firm} to repay ${amt} million by mid-2025.",
    "Trade financing arrangements with {cp} have resulted in ${amt} million of accounts payable for {firm}.",
)
RECEIVABLES = (
    "{cp} has executed a promissory note to {firm} for ${amt} million.",
    "{cp} acknowledges an outstanding ${amt} million trade receivable owed to {firm}.",
    "{firm} holds a ${amt} million loan receivable from {cp}.",
)
NO_PAYABLES = "{firm} reports no outstanding borrowings from other firms."
NO_RECEIVABLES = "{firm} reports no receivables from other firms."

_AMT = r"(?P<amt>[0-9]+(?:\.[0-9]+)?(?:e[+-]?[0-9]+)?)"
# Names never contain ". " or ": " nor start with "- "; a sentence starts a line or item, or follows ": " or ". ".
_NAME = r"(?P<cp>(?!- )(?:(?!\. |: )[^\n])+?)"
_SENTENCE_START = r"(?:(?<=^)|(?<=\n)|(?<=- )|(?<=: )|(?<=\. ))"


def _split_assets(record: ExtractionRecord, rng: random.Random) -> tuple[float, float]:
    """Gross and encumbered amounts whose difference is exactly the usable assets."""
    usable = record.external_assets
    if rng.random() < 0.5:
        enc = float(rng.randint(1, 5))
        gross = usable + enc
        if gross - enc == usable:
            return gross, enc
    return usable, 0.0


def render_statement(record: ExtractionRecord, template: str = "disclosure", seed: int = 0) -> str:
    """Natural-language statement mentioning each counterparty once per debt."""
    if template not in TEMPLATES:
        raise UnknownTemplate(f"unknown template {template!r}; choose from {TEMPLATES}")
    rng = random.Random(f"{template}:{seed}:{record.firm}")
    firm = record.firm
    me = normalize_name(firm)
    gross, enc = _split_assets(record, rng)
    asset_lines = [rng.choice(ASSETS).format(firm=firm, amt=format_amount(gross))]
    if enc:
        asset_lines.append(ENCUMBERED.format(amt=format_amount(enc)))
    payables, receivables = [], []
    for b, l, a in record.liabilities:
        if normalize_name(b) == me:
            payables.append(rng.choice(PAYABLES).format(firm=firm, cp=l, amt=format_amount(a)))
        else:
            receivables.append(rng.choice(RECEIVABLES).format(firm=firm, cp=b, amt=format_amount(a)))
    payables = payables or [NO_PAYABLES.format(firm=firm)]
    receivables = receivables or [NO_RECEIVABLES.format(firm=firm)]
    header = HEADER.format(firm=firm)
    if template == "itemized":
        sections = [
            "Assets:\n" + "\n".join(f"- {s}" for s in asset_lines),
            "Liabilities:\n" + "\n".join(f"- {s}" for s in payables),
            "Receivables:\n" + "\n".join(f"- {s}" for s in receivables),
        ]
    elif template == "narrative":
        sections = [" ".join(asset_lines + payables + receivables)]
    else:
        sections = [
            " ".join(asset_lines),
            "In terms of liabilities: " + " ".join(payables),
            "On the receivables side: " + " ".join(receivables),
        ]
    return "\n\n".join([header] + sections) + "\n"


def _pattern(phrase: str, firm: str) -> re.Pattern:
    parts = re.split(r"(\{firm\}|\{cp\}|\{amt\})", phrase)
    out = [_SENTENCE_START]
    for part in parts:
        if part == "{firm}":
            out.append(re.escape(firm))
        elif part == "{cp}":
            out.append(_NAME)
        elif part == "{amt}":
            out.append(_AMT)
        else:
            out.append(re.escape(part))
    return re.compile("".join(out), re.MULTILINE)


def read_statement(text: str) -> ExtractionRecord:
    """Invert :func:`render_statement`; raises :class:`MalformedRecord` on other text."""
    first = text.strip().splitlines()[0] if text.strip() else ""
    m = re.fullmatch(re.escape(HEADER).replace(re.escape("{firm}"), r"(?P<firm>.+)"), first.strip())
    if not m:
        raise MalformedRecord("statement header not recognized", 1, 1)
    firm = m.group("firm")
    gross = None
    for phrase in ASSETS:
        hit = _pattern(phrase, firm).search(text)
        if hit:
            gross = float(hit.group("amt"))
            break
    if gross is None:
        raise MalformedRecord("no external-asset sentence found")
    enc = _pattern(ENCUMBERED, firm).search(text)
    assets = gross - float(enc.group("amt")) if enc else gross
    found = []
    for phrase in PAYABLES:
        for hit in _pattern(phrase, firm).finditer(text):
            found.append((hit.start(), (firm, hit.group("cp"), float(hit.group("amt")))))
    for phrase in RECEIVABLES:
        for hit in _pattern(phrase, firm).finditer(text):
            found.append((hit.start(), (hit.group("cp"), firm, float(hit.group("amt")))))
    found.sort(key=lambda x: x[0])
    return ExtractionRecord(firm, assets, tuple(t for _, t in found))
