"""hetmpc: a round-accurate simulator of a heterogeneous cluster
(one near-linear-memory machine plus many sublinear machines) with a
library of metered graph algorithms: minimum spanning tree, spanners,
maximal matching, and connectivity via linear sketches."""

from .simcore import (
    BudgetError,
    CapacityError,
    Cluster,
    ClusterConfig,
    ConfigError,
    RunFailed,
    init_cluster,
)
from .graphio import SimGraph

__all__ = [
    "BudgetError",
    "CapacityError",
    "Cluster",
    "ClusterConfig",
    "ConfigError",
    "RunFailed",
    "SimGraph",
    "init_cluster",
]

__version__ = "0.1.0"
