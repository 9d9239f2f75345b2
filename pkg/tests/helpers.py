from __future__ import annotations

from pathlib import Path

import numpy as np

from creditnet import new_network
from creditnet.generators import TopologySpec, generate

DATA = Path(__file__).parent / "data"
TOPOLOGY_KINDS = ("erdos_renyi", "core_periphery", "isolated_blocks", "dag_sccs")


def random_network(rng: np.random.Generator, n: int, p: float = 0.4, lo: float = 1.0, hi: float = 20.0, e_hi: float = 15.0):
    """Small dense-ish network with plenty of defaults; draws are continuous."""
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    L = np.where(mask, rng.uniform(lo, hi, (n, n)), 0.0)
    e = rng.uniform(0.0, e_hi, n)
    return new_network([f"F{i}" for i in range(n)], L, e)


def seeded_instances(count: int, n_max: int = 10):
    """Cycle through the four generator topologies plus small random networks."""
    out = []
    for k in range(count):
        kind = TOPOLOGY_KINDS[k % 5] if k % 5 < 4 else None
        if kind is None:
            rng = np.random.default_rng(k)
            out.append(random_network(rng, int(rng.integers(2, n_max + 1))))
        else:
            out.append(generate(TopologySpec(kind=kind, seed=k)))
    return out


FIRM_A_RECORD = """\
```python
firm = "Firm A"
external_assets = 13
liabilities = [("Firm A", "Firm B", 5), ("Firm A", "Firm C", 4), ("Firm A", "Firm D", 2),
               ("Firm E", "Firm A", 3), ("Firm F", "Firm A", 1)]
```
"""

FIRM_A_STATEMENT = """\
Firm A - Annual Financial Disclosure (2024)

As of December 31, 2024, Firm A maintains $15 million in liquid assets, held across cash deposits and short-term Treasury securities. However, $2 million of these reserves are encumbered as collateral for a standby letter of credit and are unavailable for general use.

In terms of liabilities: Firm A has entered into a revolving credit facility with Firm B, carrying an outstanding balance of $5 million. A term loan agreement with Firm C requires Firm A to repay $4 million by mid-2025. Trade financing arrangements with Firm D have resulted in $2 million of accounts payable for Firm A.

On the receivables side: Firm E has executed a promissory note to Firm A for $3 million. Firm F acknowledges an outstanding $1 million trade receivable owed to Firm A.
"""
