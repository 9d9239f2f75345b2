"""Maximal clearing payments with default costs.

Solvent firms pay every liability in full. A defaulting firm pays each lender
``alpha * a_i * l_ij / L_i``, i.e. a pro-rata share of the recoverable part of
its assets. The greatest fixed point of that rule is reached by iterating
downward from full payment.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatch, InvalidConfig, NotConverged
from .model import CreditNetwork, FirmMetrics, check_payments, firm_metrics


@dataclass(frozen=True)
class ClearingConfig:
    alpha: float = 0.5
    convergence_tolerance: float = 1e-9
    max_iterations: int = 100_000
    solvency_tolerance: float = 1e-9

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfig(f"alpha must lie in [0, 1], got {self.alpha}")
        if not (self.convergence_tolerance > 0 and self.solvency_tolerance > 0):
            raise InvalidConfig("tolerances must be positive")
        if self.max_iterations < 1:
            raise InvalidConfig("max_iterations must be at least 1")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "convergence_tolerance": self.convergence_tolerance,
            "max_iterations": self.max_iterations,
            "solvency_tolerance": self.solvency_tolerance,
        }


@dataclass(frozen=True, eq=False)
class ClearingResult:
    payments: np.ndarray
    metrics: list[FirmMetrics]
    default_set: frozenset[int]
    iterations: int
    converged: bool
    residual: float
    backend: str = field(default=kernels.BACKEND)

    @property
    def total_assets(self) -> float:
        return float(sum(m.total_assets for m in self.metrics))

    def to_dict(self) -> dict:
        return {
            "payments": self.payments.tolist(),
            "metrics": [
                {
                    "total_liability": m.total_liability,
                    "total_assets": m.total_assets,
                    "equity": m.equity,
                    "solvent": m.solvent,
                }
                for m in self.metrics
            ],
            "default_set": sorted(self.default_set),
            "total_assets": self.total_assets,
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
        }


def clear(network: CreditNetwork, config: ClearingConfig | None = None, *, check_monotone: bool = False) -> ClearingResult:
    """Compute the maximal clearing payment matrix.

    Raises :class:`NotConverged` (carrying the last iterate) when the
    iteration budget runs out. ``check_monotone`` asserts that every iterate
    is component-wise no larger than its predecessor.
    """
    config = config or ClearingConfig()
    P, iterations, converged, residual = kernels.picard_clear(
        network.liabilities,
        network.external_assets,
        config.alpha,
        config.convergence_tolerance,
        config.max_iterations,
        config.solvency_tolerance,
        check_monotone,
    )
    if not converged:
        raise NotConverged(
            f"clearing did not converge in {iterations} iterations (residual {residual:.3g})",
            payments=P,
            residual=residual,
            iterations=iterations,
        )
    P.setflags(write=False)
    metrics = firm_metrics(network, P, config.solvency_tolerance)
    defaults = frozenset(i for i, m in enumerate(metrics) if not m.solvent)
    return ClearingResult(P, metrics, defaults, iterations, converged, residual)


@dataclass(frozen=True)
class FixedPointReport:
    residual: float
    row_residuals: list[float]
    solvent: list[bool]

    def to_dict(self) -> dict:
        return {"residual": self.residual, "row_residuals": self.row_residuals, "solvent": self.solvent}


def verify_fixed_point(network: CreditNetwork, payments, config: ClearingConfig | None = None) -> FixedPointReport:
    """Independent check of the payment rule, written without the kernels."""
    config = config or ClearingConfig()
    if np.shape(payments) != network.liabilities.shape:
        raise DimensionMismatch(f"payments shape {np.shape(payments)} != {network.liabilities.shape}")
    P = check_payments(network, payments)
    L = network.liabilities
    n = network.n
    assets = [float(network.external_assets[i]) + sum(float(P[j, i]) for j in range(n)) for i in range(n)]
    rows, solvent = [], []
    for i in range(n):
        owed = float(L[i].sum())
        ok = assets[i] >= owed - config.solvency_tolerance
        if ok:
            implied = L[i]
        else:
            implied = config.alpha * assets[i] * L[i] / owed
        solvent.append(bool(ok))
        rows.append(float(np.max(np.abs(implied - P[i]))) if n else 0.0)
    return FixedPointReport(max(rows, default=0.0), rows, solvent)
