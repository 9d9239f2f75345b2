"""Credit networks: clearing with default costs, compression and debt removal,
execution-strategy search, and statement-to-network translation."""
from .clearing import ClearingConfig, ClearingResult, clear, verify_fixed_point
from .kernels import BACKEND
from .model import (
    CreditNetwork,
    FirmMetrics,
    firm_metrics,
    load_network_file,
    new_network,
    save_network_file,
    total_assets,
    weakly_connected_components,
)
from .operations import DebtCycle, DebtEdge, compress_cycles, enumerate_simple_cycles, remove_debts

__version__ = "0.1.0"
