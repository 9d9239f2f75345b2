"""Compiled versus pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel runs on the same inputs under both backends; results must agree
before a timing is reported.
"""
import argparse
import json
import time

import numpy as np

from creditnet import _pykernels
from creditnet.clearing import ClearingConfig
from creditnet.generators import TopologySpec, generate
from creditnet.operations import enumerate_simple_cycles, execution_order
from creditnet.strategies import TIE_EPS

try:
    from creditnet import _ckernels
except ImportError:
    _ckernels = None


def clearing_case(n):
    net = generate(TopologySpec(kind="erdos_renyi", n=n, p=min(1.0, 8 / n), seed=n))
    c = ClearingConfig()
    return "picard_clear", f"n={n}", (net.liabilities, net.external_assets, c.alpha, c.convergence_tolerance, c.max_iterations, c.solvency_tolerance)


def removal_case(m_target):
    c = ClearingConfig()
    seed = 0
    while True:
        net = generate(TopologySpec(kind="erdos_renyi", n=6, p=0.4, seed=seed))
        edges = net.edges()
        if len(edges) == m_target:
            break
        seed += 1
    cands = np.array(edges, dtype=np.int64).reshape(-1, 2)
    args = (net.liabilities, net.external_assets, cands, c.alpha, c.convergence_tolerance, c.max_iterations, c.solvency_tolerance, TIE_EPS)
    return "removal_search", f"{len(edges)} edges", args


def compression_case(seed, max_leaves):
    c = ClearingConfig()
    net = generate(TopologySpec(kind="isolated_blocks", seed=seed))
    cands = enumerate_simple_cycles(net, max_count=62)
    pos = {cy.firms: k for k, cy in enumerate(cands)}
    order = np.array([pos[cy.firms] for cy in execution_order(cands, seed)], dtype=np.int64)
    ptr = np.zeros(len(cands) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(cy) for cy in cands])
    nodes = np.array([f for cy in cands for f in cy.firms], dtype=np.int64)
    args = (net.liabilities, net.external_assets, ptr, nodes, order, c.alpha, c.convergence_tolerance, c.max_iterations,
            c.solvency_tolerance, TIE_EPS, max_leaves)
    return "compression_search", f"{len(cands)} cycles, <= {max_leaves} leaves", args


def best_time(fn, args, repeat):
    out, times = None, []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, atol=1e-9, equal_nan=True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    if _ckernels is None:
        ap.exit(1, "compiled kernels are not built; run `pip install -e . --no-build-isolation` first\n")

    cases = [clearing_case(10), clearing_case(200), removal_case(12), compression_case(3, 4096)]
    rows = []
    print(f"{'kernel':<20}{'case':<34}{'python (s)':>12}{'cython (s)':>12}{'speedup':>10}")
    for name, label, kargs in cases:
        repeat = args.repeat if name == "picard_clear" else max(1, args.repeat // 2)
        t_py, r_py = best_time(getattr(_pykernels, name), kargs, repeat)
        t_c, r_c = best_time(getattr(_ckernels, name), kargs, repeat)
        if not same(r_py, r_c):
            raise SystemExit(f"{name} ({label}): backends disagree: {r_py!r} vs {r_c!r}")
        rows.append({"kernel": name, "case": label, "python_s": t_py, "cython_s": t_c, "speedup": t_py / t_c})
        print(f"{name:<20}{label:<34}{t_py:>12.5f}{t_c:>12.5f}{t_py / t_c:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
