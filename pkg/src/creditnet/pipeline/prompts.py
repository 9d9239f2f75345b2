"""Prompt builders for statement translation and execution-strategy suggestion,
plus the parser for strategy replies."""
from __future__ import annotations

import ast
import inspect
import re

from .. import _pykernels
from ..errors import MalformedPlan
from ..model import CreditNetwork
from ..operations import DebtCycle, DebtEdge
from ..strategies import ExecutionPlan
from .records import format_amount

STATEMENT_SLOT = "<INSERT_FINANCIAL_STATEMENT_HERE>"

NETWORK_INTRO = """\
A credit network is given as a liability matrix L, in which L[i][j] is the amount firm i owes firm j,
together with a vector e, in which e[i] is the amount of external (non-network) assets firm i holds.

Example:

L = [[0, 5, 0, 0],
[0, 0, 4, 0],
[4, 0, 0, 5],
[9, 0, 0, 0]]

e = [3, 4, 5, 6]
"""

EXTRACTION_INSTRUCTIONS = f"""\
Your job is to extract credit-network data from a firm's financial statement.

Report:
1. the name of the reporting firm;
2. its external assets in millions, meaning holdings that originate outside the network
   (bank deposits, government bonds, real estate and similar);
3. every liability that involves the reporting firm, each as borrower name, lender name and amount in millions.

The reporting firm may appear as the borrower or as the lender. List each relationship explicitly.

Answer with Python code of exactly this form:
firm = "<reporting firm name>"
external_assets = <amount>
liabilities = [("<borrower>", "<lender>", <amount>), ...]

Financial statement:

{STATEMENT_SLOT}
"""

OPERATION_TEXT = {
    "compression": (
        "Operation: portfolio compression.\n"
        "Compressing a directed debt cycle lowers every liability on the cycle by the cycle's smallest liability,\n"
        "so at least one debt on it disappears. When several cycles are compressed, cycles with more firms go first;\n"
        "one compression may remove edges of a later cycle, which is then skipped."
    ),
    "removal": (
        "Operation: debt removal.\n"
        "Removing a debt deletes the edge (i, j): firm i no longer owes firm j anything, and j loses that claim."
    ),
}

DEFAULT_OBJECTIVE = "Maximize the sum of the total assets of all firms (external assets plus payments received) after clearing."

REPLY_FORMAT = {
    "compression": "cycles = [[i, j, ...], ...]  # each inner list is a debt cycle in firm-index order",
    "removal": "remove = [(i, j), ...]  # each pair is a debt (borrower i, lender j) to delete",
}


def clearing_source() -> str:
    """Source of the reference clearing routine shipped with this package."""
    return inspect.getsource(_pykernels.picard_clear)


def build_translation_prompt(statement: str) -> str:
    if not statement or not statement.strip():
        raise ValueError("statement is empty")
    return NETWORK_INTRO + "\n" + EXTRACTION_INSTRUCTIONS.replace(STATEMENT_SLOT, statement.strip())


def render_matrix(network: CreditNetwork) -> str:
    rows = ",\n".join("[" + ", ".join(format_amount(x) for x in row) + "]" for row in network.liabilities.tolist())
    e = ", ".join(format_amount(x) for x in network.external_assets.tolist())
    return f"L = [{rows}]\n\ne = [{e}]"


def build_execution_prompt(
    network: CreditNetwork,
    kind: str,
    clearing_text: str | None = None,
    objective: str = DEFAULT_OBJECTIVE,
    task: str | None = None,
    alpha: float = 0.5,
) -> str:
    if kind not in OPERATION_TEXT:
        raise ValueError(f"no prompt for operation {kind!r}")
    firms = "\n".join(f"{i}: {label}" for i, label in enumerate(network.labels))
    instance = (
        f"The network has {network.n} firms, indexed 0 to {network.n - 1}:\n{firms}\n\n"
        "L[i][j] is the amount (millions) firm i owes firm j; e[i] is firm i's external assets.\n"
        f"Payments are cleared with default-cost fraction alpha = {format_amount(alpha)}.\n\n"
        + render_matrix(network)
    )
    if task is None:
        task = (
            f"Choose the {'debt cycles to compress' if kind == 'compression' else 'debts to remove'} so that the objective "
            "is as large as possible after clearing. Explain your reasoning, then give the plan in a fenced code block:\n"
            f"```\n{REPLY_FORMAT[kind]}\n```"
        )
    sections = [
        ("Credit network instance", instance),
        ("Financial operation", OPERATION_TEXT[kind]),
        ("Clearing algorithm", "```python\n" + (clearing_text or clearing_source()).rstrip() + "\n```"),
        ("Optimization objective", objective),
        ("Task", task),
    ]
    return "\n\n".join(f"## {title}\n{body}" for title, body in sections) + "\n"


_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_PLAN = re.compile(r"^\s*(cycles|remove)\s*=", re.MULTILINE)


def parse_plan_reply(text: str, kind: str, seed: int = 0) -> ExecutionPlan:
    """Take the last fenced block holding ``cycles = ...`` or ``remove = ...``."""
    blocks = [m for m in _FENCE.finditer(text) if _PLAN.search(m.group(1))]
    if not blocks:
        raise MalformedPlan("no fenced block with a 'cycles =' or 'remove =' assignment")
    block = blocks[-1]
    try:
        tree = ast.parse(block.group(1).strip())
    except SyntaxError as exc:
        raise MalformedPlan(f"plan block is not valid: {exc.msg}") from None
    assigns = [s for s in tree.body if isinstance(s, ast.Assign) and isinstance(s.targets[0], ast.Name)]
    if len(assigns) != 1 or assigns[0].targets[0].id not in ("cycles", "remove"):
        raise MalformedPlan("plan block must hold exactly one 'cycles' or 'remove' assignment")
    name = assigns[0].targets[0].id
    try:
        value = ast.literal_eval(assigns[0].value)
    except ValueError:
        raise MalformedPlan("plan must be a literal list") from None
    expected = "cycles" if kind == "compression" else "remove"
    if name != expected:
        raise MalformedPlan(f"expected '{expected} = ...' for a {kind} plan, got '{name} = ...'")
    rationale = (text[: block.start()] + text[block.end():]).strip()
    if not isinstance(value, (list, tuple)):
        raise MalformedPlan("plan must be a list")
    try:
        if kind == "compression":
            cycles = tuple(DebtCycle.from_firms(c) for c in value)
            return ExecutionPlan("compression", cycles=cycles, seed=seed, provenance="llm", rationale=rationale)
        edges = tuple(DebtEdge(int(a), int(b)) for a, b in value)
    except (TypeError, ValueError) as exc:
        raise MalformedPlan(f"bad plan entry: {exc}") from None
    return ExecutionPlan("removal", edges=edges, seed=seed, provenance="llm", rationale=rationale)
