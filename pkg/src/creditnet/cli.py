"""Command-line interface.

Exit codes: 0 success, 2 invalid input or config, 3 anomaly halt,
4 LLM transport failure, 5 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .clearing import ClearingConfig, clear
from .errors import CreditNetError, SearchSpaceTooLarge, TransportError, ValidationError
from .generators import TOPOLOGIES, TopologySpec, generate
from .model import load_network_file, save_network_file
from .operations import DebtEdge, compress_cycles, enumerate_simple_cycles, remove_debts
from .pipeline.records import inject_conflict, records_from_network, render_extraction_record
from .pipeline.templates import TEMPLATES, render_statement

log = logging.getLogger("creditnet")

EXIT_OK, EXIT_INVALID, EXIT_ANOMALY, EXIT_TRANSPORT, EXIT_INTERNAL = 0, 2, 3, 4, 5


class AnomalyHalt(Exception):
    pass


def _manifest(args: argparse.Namespace) -> dict:
    opts = {k: v for k, v in vars(args).items() if k != "func"}
    return {"tool": "creditnet", "version": __version__, "backend": kernels.BACKEND, "command": args.command, "options": opts, "argv": sys.argv[1:]}


def _emit(args, payload: dict) -> None:
    """Write JSON to --out (with a sibling manifest) or to stdout with the manifest embedded."""
    if getattr(args, "out", None):
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(payload, indent=2) + "\n")
        out.with_name(out.name + ".manifest.json").write_text(json.dumps(_manifest(args), indent=2, default=str) + "\n")
    else:
        payload = dict(payload, manifest=_manifest(args))
        print(json.dumps(payload, indent=2, default=str))


def _config(args) -> ClearingConfig:
    return ClearingConfig(alpha=args.alpha, convergence_tolerance=args.tol, max_iterations=args.max_iter)


def _parse_edges(text: str) -> list[DebtEdge]:
    """``"0,1;2,3"`` -> [DebtEdge(0, 1), DebtEdge(2, 3)]."""
    edges = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        try:
            b, l = (int(x) for x in part.split(","))
        except ValueError:
            raise ValidationError(f"bad edge {part!r}; expected 'borrower,lender'") from None
        edges.append(DebtEdge(b, l))
    return edges


def _parse_cycles(text: str) -> list[tuple[int, ...]]:
    """``"0,1,2;3,4"`` -> [(0, 1, 2), (3, 4)]."""
    try:
        return [tuple(int(x) for x in part.split(",")) for part in filter(None, (p.strip() for p in text.split(";")))]
    except ValueError:
        raise ValidationError(f"bad cycle list {text!r}") from None


# -- commands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.spec_file:
        spec = TopologySpec.from_dict(json.loads(Path(args.spec_file).read_text()))
    else:
        spec = TopologySpec(kind=args.topology, n=args.n, p=args.p, seed=args.seed)
    net = generate(spec)
    save_network_file(net, args.out)
    Path(args.out + ".manifest.json").write_text(json.dumps(dict(_manifest(args), spec=spec.to_dict()), indent=2) + "\n")
    print(f"wrote {args.out}: {net.n} firms, {len(net.edges())} debts")
    return EXIT_OK


def cmd_clear(args) -> int:
    net = load_network_file(args.network)
    res = clear(net, _config(args))
    _emit(args, {"network": args.network, "clearing": res.to_dict()})
    return EXIT_OK


def cmd_cycles(args) -> int:
    net = load_network_file(args.network)
    cycles = enumerate_simple_cycles(net, args.max_len, args.max_count)
    _emit(args, {"cycles": [{"firms": list(c.firms), "min_liability": c.min_liability} for c in cycles]})
    return EXIT_OK


def cmd_compress(args) -> int:
    net = load_network_file(args.network)
    if args.cycles == "all":
        cycles = enumerate_simple_cycles(net, max_count=args.max_count)
    else:
        from .operations import DebtCycle

        cycles = [DebtCycle.from_firms(c, net) for c in _parse_cycles(args.cycles)]
    after, steps = compress_cycles(net, cycles, seed=args.order_seed)
    save_network_file(after, args.result)
    _emit(args, {"steps": [{"firms": list(s.cycle.firms), "applied": s.applied, "amount": s.amount} for s in steps], "result": args.result})
    return EXIT_OK


def cmd_remove(args) -> int:
    net = load_network_file(args.network)
    after = remove_debts(net, _parse_edges(args.edges))
    save_network_file(after, args.result)
    _emit(args, {"removed": args.edges, "result": args.result})
    return EXIT_OK


def cmd_strategize(args) -> int:
    from .experiment import make_client
    from .pipeline.llm import llm_suggest
    from .strategies import OracleCaps, compare_strategies

    net = load_network_file(args.network)
    cfg = _config(args)
    strategies = tuple(args.strategies.split(","))
    llm = partial(llm_suggest, make_client(args.mock, args.llm_config, args.order_seed)) if "llm" in strategies else None
    seeds = [int(s) for s in np.random.SeedSequence(args.seed).generate_state(args.repeats)]
    rows = compare_strategies(net, args.kind, strategies, cfg, seeds, args.order_seed, llm, OracleCaps(max_evaluations=args.max_evaluations))
    payload = {
        "rows": [
            {
                "strategy": r.strategy,
                "post_total": r.post_total,
                "plan_size": r.plan_size,
                "defaults": r.defaults,
                "status": r.status,
                "runtime": r.runtime,
                "plans": [p.to_dict() for p in r.plans],
            }
            for r in rows
        ]
    }
    _emit(args, payload)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .experiment import ExperimentSpec, run_experiment

    if args.config:
        data = json.loads(Path(args.config).read_text())
        if isinstance(data, dict) and "spec" in data and "seed_scheme" in data:
            data = data["spec"]  # a previous run's manifest
        if args.seed is not None:
            data["seed"] = args.seed
        spec = ExperimentSpec.from_dict(data)
    else:
        spec = ExperimentSpec(
            topologies=[TopologySpec(kind=t) for t in args.topologies.split(",")],
            instances=args.instances,
            kind=args.kind,
            strategies=tuple(args.strategies.split(",")),
            seed=args.seed or 0,
            random_repeats=args.repeats,
            llm=args.mock,
        )
    run_experiment(spec, args.out_dir, jobs=args.jobs)
    print((Path(args.out_dir) / "summary.txt").read_text(), end="")
    return EXIT_OK


def cmd_translate(args) -> int:
    from .experiment import make_client, run_translation

    client = None
    if args.mock or args.llm:
        client = make_client(args.mock, args.llm_config)
    report = run_translation(args.corpus, args.out_dir, args.tolerance, client, args.truth or ())
    manifest = dict(_manifest(args), verdict=report.verdict)
    (Path(args.out_dir) / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    print(report.verdict)
    if report.result.halted_at is not None:
        raise AnomalyHalt(report.verdict)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    from .pipeline.aggregate import aggregate_statements, anomaly_from_error
    from .pipeline.records import parse_extraction_record
    from .errors import InvariantViolation, MalformedRecord

    paths = []
    for item in args.records:
        p = Path(item)
        paths.extend(sorted(p.glob("*.rec")) if p.is_dir() else [p])
    records, failure = [], None
    for k, path in enumerate(paths):
        try:
            records.append(parse_extraction_record(path.read_text(encoding="utf-8")))
        except (MalformedRecord, InvariantViolation) as exc:
            failure = anomaly_from_error(exc, k)
            break
    result = aggregate_statements(records, args.tolerance, collect_all=args.collect_all)
    if failure is not None and (result.halted_at is None or args.collect_all):
        result.anomalies.append(failure)
        result.halted_at = failure.record_index if result.halted_at is None else result.halted_at
    out = Path(args.out_dir)
    (out / "components").mkdir(parents=True, exist_ok=True)
    if result.halted_at is None:
        for i, net in enumerate(result.networks):
            save_network_file(net, out / "components" / f"component_{i + 1:03d}.json")
    (out / "anomalies.json").write_text(json.dumps([a.to_dict() for a in result.anomalies], indent=2) + "\n")
    (out / "manifest.json").write_text(json.dumps(dict(_manifest(args), files=[str(p) for p in paths]), indent=2, default=str) + "\n")
    if result.halted_at is not None:
        for a in result.anomalies:
            print(f"anomaly at index {a.record_index} ({paths[a.record_index].name}): {a.kind}: {a.message}")
        raise AnomalyHalt()
    print(f"aggregated {len(records)} records into {len(result.networks)} networks")
    return EXIT_OK


def cmd_render(args) -> int:
    net = load_network_file(args.network)
    records = records_from_network(net)
    halt = None
    if args.inject_conflict is not None:
        records, halt = inject_conflict(records, args.inject_conflict)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(len(records))))
    script = []
    for k, rec in enumerate(records):
        stem = f"statement_{k + 1:0{width}d}"
        (out / f"{stem}.txt").write_text(render_statement(rec, args.template, args.seed))
        body = render_extraction_record(rec)
        if args.records_dir:
            Path(args.records_dir).mkdir(parents=True, exist_ok=True)
            (Path(args.records_dir) / f"{stem}.rec").write_text(body)
        script.append({"expect_substring": f"{rec.firm} - Annual Financial Disclosure", "reply": f"```python\n{body}```\n"})
    (out / "mock_script.json").write_text(json.dumps(script, indent=2) + "\n")
    (out / "manifest.json").write_text(json.dumps(dict(_manifest(args), records=len(records), expected_halt_index=halt), indent=2) + "\n")
    print(f"wrote {len(records)} statements to {out}" + (f"; conflict planted at index {halt}" if halt is not None else ""))
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _clearing_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.5, help="recovery rate on defaulted assets (default 0.5)")
    p.add_argument("--tol", type=float, default=1e-9, help="convergence tolerance")
    p.add_argument("--max-iter", type=int, default=100_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="creditnet", description="Credit-network clearing, compression, debt removal and statement translation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a synthetic network")
    p.add_argument("--topology", choices=[t for t in TOPOLOGIES if t != "from_file"], default="erdos_renyi")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec-file", help="JSON topology spec (overrides the flags above)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("clear", help="compute the maximal clearing vector")
    p.add_argument("network")
    _clearing_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_clear)

    p = sub.add_parser("cycles", help="list simple debt cycles")
    p.add_argument("network")
    p.add_argument("--max-len", type=int)
    p.add_argument("--max-count", type=int, default=10_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cycles)

    p = sub.add_parser("compress", help="compress debt cycles")
    p.add_argument("network")
    p.add_argument("--cycles", default="all", help="'all' or firm lists like '0,1,2;3,4'")
    p.add_argument("--order-seed", type=int, default=0)
    p.add_argument("--max-count", type=int, default=10_000)
    p.add_argument("--result", required=True, help="where to write the compressed network")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("remove", help="remove debts")
    p.add_argument("network")
    p.add_argument("--edges", required=True, help="debts like '0,1;2,3' (borrower,lender)")
    p.add_argument("--result", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_remove)

    p = sub.add_parser("strategize", help="compare execution strategies on one network")
    p.add_argument("network")
    p.add_argument("--kind", choices=["compression", "removal"], default="compression")
    p.add_argument("--strategies", default="none,random,greedy,oracle")
    p.add_argument("--seed", type=int, default=0, help="base seed for random plans")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--order-seed", type=int, default=0)
    p.add_argument("--max-evaluations", type=int, default=2**20)
    p.add_argument("--mock", help="offline LLM: greedy, oracle or a mock-script path")
    p.add_argument("--llm-config", help="JSON with timeout/retries/backoff for the HTTP client")
    _clearing_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_strategize)

    p = sub.add_parser("experiment", help="run a strategy comparison over generated instances")
    p.add_argument("--config", help="JSON experiment spec, or a previous manifest.json")
    p.add_argument("--topologies", default="erdos_renyi,core_periphery,isolated_blocks,dag_sccs")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--kind", choices=["compression", "removal"], default="compression")
    p.add_argument("--strategies", default="none,random,greedy,oracle")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--mock", help="offline LLM for the llm strategy")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("translate", help="translate a corpus of statements (or parse records) into networks")
    p.add_argument("corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--truth", nargs="*", help="ground-truth network files")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--mock", help="'reader', or a mock-script path")
    p.add_argument("--llm", action="store_true", help="use the HTTP client (LLM_ENDPOINT, LLM_MODEL, LLM_API_KEY)")
    p.add_argument("--llm-config")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("aggregate", help="aggregate extraction-record files without an LLM")
    p.add_argument("records", nargs="+", help="record files, or directories of *.rec files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--collect-all", action="store_true", help="keep scanning past the first anomaly")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("render-statements", help="render a network as per-firm statements")
    p.add_argument("network")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--template", choices=TEMPLATES, default="disclosure")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--records-dir", help="also write the extraction records here")
    p.add_argument("--inject-conflict", type=int, metavar="SEED", help="plant one conflicting report")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AnomalyHalt:
        return EXIT_ANOMALY
    except TransportError as exc:
        print(f"error: LLM transport failed: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ValidationError, SearchSpaceTooLarge, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CreditNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
