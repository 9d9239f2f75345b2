"""Experiment runs: strategy comparisons across generated instances, and corpus translation.

Seeds: everything derives from one base seed. Instance ``k`` of topology
``t`` uses ``derive_seed(base, t, k)`` for generation; its ``r``-th random
plan uses ``derive_seed(base, t, k, 1000 + r)``. ``derive_seed`` is
``numpy.random.SeedSequence(path).generate_state(1)[0]``.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import resource
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, kernels
from .clearing import ClearingConfig
from .errors import InvalidSpec
from .generators import TopologySpec, generate
from .model import load_network_file, save_network_file, weakly_connected_components
from .pipeline.aggregate import AggregationResult, aggregate_statements, anomaly_from_error, same_networks
from .pipeline.llm import ScriptedLlmClient, StatementReaderClient, StrategyLlmClient, llm_suggest, llm_translate
from .pipeline.records import parse_extraction_record
from .strategies import OracleCaps, compare_strategies
from .errors import InvariantViolation, MalformedRecord

log = logging.getLogger(__name__)

CSV_COLUMNS = ("instance", "topology", "strategy", "post_total", "plan_size", "defaults", "seed", "status")
SHORT = {"erdos_renyi": "ER", "core_periphery": "CP", "isolated_blocks": "IB", "dag_sccs": "SCC", "from_file": "FILE"}


def derive_seed(*path: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in path]).generate_state(1)[0])


@dataclass
class ExperimentSpec:
    topologies: list[TopologySpec] = field(default_factory=lambda: [TopologySpec(kind="erdos_renyi")])
    instances: int = 10
    kind: str = "compression"
    strategies: tuple[str, ...] = ("none", "random", "greedy", "oracle")
    seed: int = 0
    random_repeats: int = 1
    clearing: ClearingConfig = field(default_factory=ClearingConfig)
    caps: OracleCaps = field(default_factory=OracleCaps)
    top_k: int = 3
    llm: str | None = None  # "greedy", "oracle" or a mock-script path

    def __post_init__(self):
        if self.kind not in ("compression", "removal"):
            raise InvalidSpec(f"kind must be compression or removal, got {self.kind!r}")
        if self.instances < 1:
            raise InvalidSpec("instances must be positive")
        if "llm" in self.strategies and not self.llm:
            raise InvalidSpec("the llm strategy needs an llm client setting")
        if self.llm and self.llm not in ("greedy", "oracle") and not Path(self.llm).exists():
            raise InvalidSpec(f"mock script {self.llm!r} not found")
        for t in self.topologies:
            if t.kind == "from_file" and not Path(t.path).exists():
                raise InvalidSpec(f"network file {t.path!r} not found")

    def to_dict(self) -> dict:
        return {
            "topologies": [t.to_dict() for t in self.topologies],
            "instances": self.instances,
            "kind": self.kind,
            "strategies": list(self.strategies),
            "seed": self.seed,
            "random_repeats": self.random_repeats,
            "clearing": self.clearing.to_dict(),
            "caps": {"max_edges": self.caps.max_edges, "max_cycles": self.caps.max_cycles, "max_evaluations": self.caps.max_evaluations},
            "top_k": self.top_k,
            "llm": self.llm,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {"topologies", "instances", "kind", "strategies", "seed", "random_repeats", "clearing", "caps", "top_k", "llm"}
        unknown = set(data) - known
        if unknown:
            raise InvalidSpec(f"unknown experiment keys: {sorted(unknown)}")
        d = dict(data)
        if "topologies" in d:
            d["topologies"] = [TopologySpec.from_dict(t) for t in d["topologies"]]
        if "strategies" in d:
            d["strategies"] = tuple(d["strategies"])
        if "clearing" in d:
            d["clearing"] = ClearingConfig(**d["clearing"])
        if "caps" in d:
            d["caps"] = OracleCaps(**d["caps"])
        return cls(**d)


def _instance_rows(spec: ExperimentSpec, t: int, k: int) -> list[dict]:
    topo = spec.topologies[t]
    inst_seed = derive_seed(spec.seed, t, k)
    net = generate(replace(topo, seed=inst_seed))
    llm = None
    if "llm" in spec.strategies:
        if spec.llm in ("greedy", "oracle"):
            client = StrategyLlmClient(spec.llm, spec.clearing, spec.caps, spec.top_k, order_seed=inst_seed)
        else:
            # one scripted reply per instance, taken in (topology, instance) order
            script = ScriptedLlmClient.from_file(spec.llm).script
            position = t * spec.instances + k
            client = ScriptedLlmClient(script[position:position + 1])
        llm = partial(llm_suggest, client)
    seeds = [derive_seed(spec.seed, t, k, 1000 + r) for r in range(spec.random_repeats)]
    rows = compare_strategies(net, spec.kind, spec.strategies, spec.clearing, seeds, order_seed=inst_seed, llm=llm, caps=spec.caps, top_k=spec.top_k)
    name = f"{SHORT[topo.kind]}{k + 1}"
    out = []
    for r in rows:
        out.append(
            {
                "instance": name,
                "topology": topo.kind,
                "strategy": r.strategy,
                "post_total": repr(r.post_total),
                "plan_size": repr(float(r.plan_size)),
                "defaults": repr(float(r.defaults)),
                "seed": r.seed,
                "status": r.status,
                "_runtime": r.runtime,
                "_min": r.total_min,
                "_max": r.total_max,
            }
        )
    return out


def _run_task(args):
    spec, t, k = args
    return _instance_rows(spec, t, k)


def summary_table(rows: list[dict], spec: ExperimentSpec) -> str:
    """Plain-text tables: one block per topology, strategies as rows, instances as columns."""
    buf = io.StringIO()
    label = {"none": "No operation", "random": "Random", "greedy": "Heuristic baseline", "oracle": "Exhaustive optimum", "llm": "LLM suggestion"}
    for topo in dict.fromkeys(r["topology"] for r in rows):
        sub = [r for r in rows if r["topology"] == topo]
        names = list(dict.fromkeys(r["instance"] for r in sub))
        buf.write(f"{topo} ({spec.kind})\n")
        buf.write(f"{'strategy':<20}" + "".join(f"{n:>10}" for n in names) + f"{'mean':>10}\n")
        for strat in spec.strategies:
            vals = [float(r["post_total"]) for n in names for r in sub if r["instance"] == n and r["strategy"] == strat]
            cells = "".join(f"{v:>10.2f}" if np.isfinite(v) else f"{'n/a':>10}" for v in vals)
            finite = [v for v in vals if np.isfinite(v)]
            mean = f"{np.mean(finite):>10.2f}" if finite else f"{'n/a':>10}"
            buf.write(f"{label.get(strat, strat):<20}{cells}{mean}\n")
        buf.write("\n")
    return buf.getvalue()


def _write_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def run_experiment(spec: ExperimentSpec, out_dir, jobs: int = 1) -> list[dict]:
    """Run every (topology, instance) comparison and write results.csv, summary.txt, manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(spec, t, k) for t in range(len(spec.topologies)) for k in range(spec.instances)]
    manifest = {
        "tool": "creditnet",
        "version": __version__,
        "backend": kernels.BACKEND,
        "spec": spec.to_dict(),
        "instance_seeds": {f"{SHORT[spec.topologies[t].kind]}{k + 1}@{t}": derive_seed(spec.seed, t, k) for _, t, k in tasks},
        "seed_scheme": "derive_seed(base, topology_index, instance_index); random plans derive_seed(base, t, k, 1000 + r)",
    }
    rows: list[dict] = []
    start = time.perf_counter()
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for chunk in pool.map(_run_task, tasks):
                    rows.extend(chunk)
        else:
            for task in tasks:
                rows.extend(_run_task(task))
    except Exception as exc:
        _write_csv(out / "results.csv", rows)
        manifest["status"] = f"failed: {type(exc).__name__}: {exc}"
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        (out / "FAILED").write_text(manifest["status"] + "\n")
        raise
    log.info("experiment finished in %.2fs (%d rows)", time.perf_counter() - start, len(rows))
    manifest["status"] = "ok"
    _write_csv(out / "results.csv", rows)
    (out / "summary.txt").write_text(summary_table(rows, spec), encoding="utf-8")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return rows


# -- translation ------------------------------------------------------------


@dataclass
class TranslationReport:
    result: AggregationResult
    verdict: str
    files: list[str]
    runtime: float = 0.0
    peak_rss_mb: float = 0.0

    def to_dict(self) -> dict:
        d = self.result.to_dict()
        d.pop("components")
        d.update(
            {
                "verdict": self.verdict,
                "files": self.files,
                "components": len(self.result.networks),
                "runtime_seconds": self.runtime,
                "peak_rss_mb": self.peak_rss_mb,
            }
        )
        return d


def _corpus_files(corpus: Path) -> tuple[list[Path], str]:
    statements = sorted(corpus.glob("*.txt"))
    records = sorted(corpus.glob("*.rec"))
    if statements and records:
        raise InvalidSpec(f"{corpus} mixes statements (*.txt) and records (*.rec)")
    if statements:
        return statements, "statements"
    if records:
        return records, "records"
    raise InvalidSpec(f"{corpus} holds no *.txt statements or *.rec records")


def make_client(mock: str | None, llm_config: str | None = None, order_seed: int = 0):
    """``reader`` for the template reader, a path for a scripted mock, else the HTTP client."""
    from .pipeline.llm import HttpLlmClient, LlmConfig

    if mock == "reader":
        return StatementReaderClient()
    if mock in ("greedy", "oracle"):
        return StrategyLlmClient(mock, order_seed=order_seed)
    if mock:
        return ScriptedLlmClient.from_file(mock)
    return HttpLlmClient(LlmConfig.from_env(llm_config))


def run_translation(corpus_dir, out_dir, tolerance: float = 1e-6, client=None, truth: Sequence[str] = ()) -> TranslationReport:
    """Translate (or parse) a corpus, aggregate it, write networks and anomaly log, judge against truth."""
    corpus, out = Path(corpus_dir), Path(out_dir)
    files, mode = _corpus_files(corpus)
    if mode == "statements" and client is None:
        raise InvalidSpec("statement corpora need an LLM client (or --mock)")
    records = []
    failure = None
    t0 = time.perf_counter()
    for k, path in enumerate(files):
        text = path.read_text(encoding="utf-8")
        try:
            records.append(llm_translate(client, text) if mode == "statements" else parse_extraction_record(text))
        except (MalformedRecord, InvariantViolation) as exc:
            failure = anomaly_from_error(exc, k)
            break
    result = aggregate_statements(records, tolerance)
    if failure is not None and result.halted_at is None:
        result.anomalies.append(failure)
        result.halted_at = failure.record_index
    elapsed = time.perf_counter() - t0
    peak_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    log.info("integrated %d of %d files in %.2fs, peak RSS %.0f MB", len(records), len(files), elapsed, peak_mb)

    if result.halted_at is not None:
        a = result.anomalies[0]
        verdict = f"anomaly detected at index {result.halted_at} ({a.kind}: {files[result.halted_at].name})"
    elif truth:
        expected = [c for p in truth for c in weakly_connected_components(load_network_file(p))]
        verdict = "success" if same_networks(result.networks, expected) else "mismatch"
    else:
        verdict = "aggregated"

    out.mkdir(parents=True, exist_ok=True)
    comp_dir = out / "components"
    comp_dir.mkdir(exist_ok=True)
    for old in comp_dir.glob("component_*.json"):
        old.unlink()
    if result.halted_at is None:
        width = max(3, len(str(len(result.networks))))
        for i, net in enumerate(result.networks):
            save_network_file(net, comp_dir / f"component_{i + 1:0{width}d}.json")
    report = TranslationReport(result, verdict, [p.name for p in files], elapsed, peak_mb)
    (out / "anomalies.json").write_text(json.dumps([a.to_dict() for a in result.anomalies], indent=2) + "\n")
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return report
