"""Value-added networks from multi-country input-output tables.

Builds global and international value-added networks, finds flow
communities with the map equation, splits community flows into potential
and circular parts, and measures economic integration from the circulation.
"""

__version__ = "0.1.0"

from .community import Partition, detect_communities, label_regions, threshold_scan
from .config import RunConfig, load_config
from .hodge import HodgeDecomposition, aggregate, bilateral_circulation, decompose
from .ingest import IOTable, drop_regions, load_io_table, validate_accounting, write_io_table
from .integration import integration_index, sectoral_index
from .leontief import build_gvan, build_ivan, build_leontief, threshold_top_k
from .mapequation import codelength, stationary_visits
from .metrics import strength_fit, structural_report
from .network import FlowNetwork

__all__ = [
    "FlowNetwork",
    "HodgeDecomposition",
    "IOTable",
    "Partition",
    "RunConfig",
    "aggregate",
    "bilateral_circulation",
    "build_gvan",
    "build_ivan",
    "build_leontief",
    "codelength",
    "decompose",
    "detect_communities",
    "drop_regions",
    "integration_index",
    "label_regions",
    "load_config",
    "load_io_table",
    "sectoral_index",
    "stationary_visits",
    "strength_fit",
    "structural_report",
    "threshold_scan",
    "threshold_top_k",
    "validate_accounting",
    "write_io_table",
]
