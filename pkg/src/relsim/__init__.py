"""Interactive relational learning on attributed graphs.

Nodes carry attribute vectors and optional class labels; inference propagates
label evidence through similarity in a joint attribute/structure feature
space. The package also ships an iid similarity classifier, a neighbor-vote
baseline, evaluation drivers, and an HTTP service for interactive use.
"""

from .graph import (
    AttributedGraph,
    ChangeRecord,
    GraphError,
    InvalidNodeError,
    MutationError,
    NodePartition,
    neighborhood,
)
from .kernels import KernelSpec, KernelError, MissingClassError, similarity, pairwise
from .features import FeatureMatrix, topology_features
from .engine import (
    DegenerateTaskError,
    Hyperparams,
    PredictionSet,
    certainty,
    classify_iid,
    estimate_priors,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "AttributedGraph",
    "ChangeRecord",
    "DegenerateTaskError",
    "FeatureMatrix",
    "GraphError",
    "Hyperparams",
    "InvalidNodeError",
    "KernelError",
    "KernelSpec",
    "MissingClassError",
    "MutationError",
    "NodePartition",
    "PredictionSet",
    "certainty",
    "classify_iid",
    "estimate_priors",
    "neighborhood",
    "pairwise",
    "run",
    "similarity",
    "topology_features",
    "__version__",
]
