"""LLM client boundary: a chat-completion HTTP client and offline mocks.

Every client exposes ``complete(prompt) -> str``. Nothing else in the package
talks to the network.
"""
from __future__ import annotations

import ast
import json
import os
import re
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol, Sequence

from ..clearing import ClearingConfig
from ..errors import InvalidConfig, TransportError
from ..model import CreditNetwork, new_network
from ..operations import DebtCycle
from ..strategies import (
    ExecutionPlan,
    OracleCaps,
    plan_brute_force,
    plan_greedy_compression,
    plan_greedy_removal,
    validate_plan,
)
from .prompts import build_execution_prompt, build_translation_prompt, parse_plan_reply
from .records import ExtractionRecord, parse_extraction_record, render_extraction_record
from .templates import read_statement


class LlmClient(Protocol):
    def complete(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str
    model: str
    api_key: str | None = None
    timeout: float = 60.0
    retries: int = 2
    backoff: float = 1.0

    @classmethod
    def from_env(cls, config_path: str | None = None) -> "LlmConfig":
        """Endpoint, model and key from LLM_* env vars; timeout/retries from an optional JSON file."""
        extra = {}
        if config_path:
            extra = json.loads(Path(config_path).read_text())
            unknown = set(extra) - {"timeout", "retries", "backoff"}
            if unknown:
                raise InvalidConfig(f"unknown LLM config keys: {sorted(unknown)}")
        endpoint = os.environ.get("LLM_ENDPOINT")
        model = os.environ.get("LLM_MODEL")
        if not endpoint or not model:
            raise InvalidConfig("set LLM_ENDPOINT and LLM_MODEL to use a remote model")
        return cls(endpoint, model, os.environ.get("LLM_API_KEY"), **extra)


class HttpLlmClient:
    """Chat-completion client: posts a one-message conversation, returns the first choice's text."""

    def __init__(self, config: LlmConfig):
        self.config = config

    def complete(self, prompt: str) -> str:
        cfg = self.config
        body = json.dumps({"model": cfg.model, "messages": [{"role": "user", "content": prompt}]}).encode()
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        last = None
        for attempt in range(cfg.retries + 1):
            if attempt:
                time.sleep(cfg.backoff * 2 ** (attempt - 1))
            req = urllib.request.Request(cfg.endpoint, data=body, headers=headers, method="POST")
            try:
                with urllib.request.urlopen(req, timeout=cfg.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
            except urllib.error.HTTPError as exc:
                last = exc
                if exc.code < 500 and exc.code != 429:
                    break
                continue
            except (urllib.error.URLError, TimeoutError, OSError, json.JSONDecodeError) as exc:
                last = exc
                continue
            try:
                return payload["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"unexpected reply shape: {exc}") from exc
        raise TransportError(f"LLM request failed after {cfg.retries + 1} attempt(s): {last}")


class ScriptedLlmClient:
    """Replays ``[{"expect_substring": ..., "reply": ...}, ...]`` in order."""

    def __init__(self, script: Sequence[dict]):
        self.script = list(script)
        self.position = 0
        self.prompts: list[str] = []

    @classmethod
    def from_file(cls, path) -> "ScriptedLlmClient":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list) or not all(isinstance(d, dict) and "reply" in d for d in data):
            raise InvalidConfig("mock script must be a JSON array of {expect_substring, reply} objects")
        return cls(data)

    def complete(self, prompt: str) -> str:
        if self.position >= len(self.script):
            raise TransportError("mock script exhausted")
        step = self.script[self.position]
        expect = step.get("expect_substring", "")
        if expect not in prompt:
            raise TransportError(f"mock step {self.position}: prompt lacks {expect!r}")
        self.position += 1
        self.prompts.append(prompt)
        return step["reply"]


class StatementReaderClient:
    """Offline translator for statements produced by the built-in templates."""

    def complete(self, prompt: str) -> str:
        marker = "Financial statement:\n\n"
        if marker not in prompt:
            raise TransportError("not a translation prompt")
        statement = prompt.split(marker, 1)[1]
        return "```python\n" + render_extraction_record(read_statement(statement)) + "```\n"


def _literal_after(text: str, name: str):
    m = re.search(rf"^{name} = ", text, re.MULTILINE)
    if not m:
        raise TransportError(f"prompt has no '{name} =' block")
    depth, start = 0, m.end()
    for k in range(start, len(text)):
        depth += {"[": 1, "]": -1}.get(text[k], 0)
        if depth == 0:
            return ast.literal_eval(text[start:k + 1])
    raise TransportError(f"unterminated '{name}' literal in prompt")


def network_from_prompt(prompt: str) -> CreditNetwork:
    L = _literal_after(prompt, "L")
    e = _literal_after(prompt.split("## Financial operation")[0], "e")
    return new_network([str(i) for i in range(len(e))], L, e)


class StrategyLlmClient:
    """Answers execution prompts by running a built-in strategy on the network in the prompt."""

    def __init__(self, strategy: str = "greedy", config: ClearingConfig | None = None, caps: OracleCaps | None = None, top_k: int = 3, order_seed: int = 0):
        if strategy not in ("greedy", "oracle"):
            raise InvalidConfig(f"mock strategy must be greedy or oracle, got {strategy!r}")
        self.strategy = strategy
        self.config = config or ClearingConfig()
        self.caps = caps
        self.top_k = top_k
        self.order_seed = order_seed

    def complete(self, prompt: str) -> str:
        network = network_from_prompt(prompt)
        kind = "compression" if "Operation: portfolio compression" in prompt else "removal"
        config = self.config
        m = re.search(r"alpha = ([0-9.e+-]+)\.", prompt)
        if m:
            config = replace(config, alpha=float(m.group(1)))
        if self.strategy == "oracle":
            plan = plan_brute_force(network, kind, config, self.caps, self.order_seed)
        elif kind == "compression":
            plan = plan_greedy_compression(network, self.top_k, self.order_seed)
        else:
            plan = plan_greedy_removal(network, config)
        if kind == "compression":
            body = "cycles = " + json.dumps([list(c.firms) for c in plan.cycles])
        else:
            body = "remove = [" + ", ".join(f"({e.borrower}, {e.lender})" for e in plan.edges) + "]"
        return f"Plan chosen by the {self.strategy} strategy ({plan.rationale}).\n\n```\n{body}\n```\n"


def llm_translate(client: LlmClient, statement: str) -> ExtractionRecord:
    """One prompt per statement; an unparseable reply raises MalformedRecord for review."""
    return parse_extraction_record(client.complete(build_translation_prompt(statement)))


def translate_corpus(client: LlmClient, statements: Sequence[str], max_in_flight: int = 1) -> list[ExtractionRecord]:
    """Translate independently, return records in input order."""
    if max_in_flight <= 1:
        return [llm_translate(client, s) for s in statements]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(lambda s: llm_translate(client, s), statements))


def llm_suggest(
    client: LlmClient,
    network: CreditNetwork,
    kind: str,
    config: ClearingConfig | None = None,
    order_seed: int = 0,
    clearing_text: str | None = None,
) -> ExecutionPlan:
    config = config or ClearingConfig()
    prompt = build_execution_prompt(network, kind, clearing_text, alpha=config.alpha)
    plan = parse_plan_reply(client.complete(prompt), kind, order_seed)
    validate_plan(network, plan)
    if plan.cycles:
        plan = ExecutionPlan(
            plan.kind,
            cycles=tuple(DebtCycle.from_firms(c.firms, network) for c in plan.cycles),
            seed=plan.seed,
            provenance="llm",
            rationale=plan.rationale,
        )
    return plan

