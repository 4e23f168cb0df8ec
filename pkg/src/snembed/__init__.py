"""Latent-space embedding of signed networks with community and anomaly detection."""

__version__ = "0.1.0"

from .detection import (  # noqa: E402
    AnomalyReport,
    CommunityAssignment,
    anomaly_scores,
    community_error,
    default_eta,
    false_discovery_proportion,
    kmeans_embed,
    threshold_anomalies,
)
from .likelihood import LikelihoodGradient, fd_gradient, gradient, neg_log_likelihood  # noqa: E402
from .model import (  # noqa: E402
    EmbeddingState,
    Intercepts,
    LatentDecomposition,
    LinkFunction,
    SignedNetwork,
    latent_matrix,
    prob,
    survival,
)
from .optimizer import FitConfig, FitResult, fit, init_state  # noqa: E402
from .select import SelectionResult, select_m  # noqa: E402
from .synthgen import GroundTruth, gen_example1, gen_example2, sample_edges  # noqa: E402

__all__ = [
    "__version__",
    "AnomalyReport",
    "CommunityAssignment",
    "anomaly_scores",
    "community_error",
    "default_eta",
    "false_discovery_proportion",
    "kmeans_embed",
    "threshold_anomalies",
    "LikelihoodGradient",
    "fd_gradient",
    "gradient",
    "neg_log_likelihood",
    "EmbeddingState",
    "Intercepts",
    "LatentDecomposition",
    "LinkFunction",
    "SignedNetwork",
    "latent_matrix",
    "prob",
    "survival",
    "FitConfig",
    "FitResult",
    "fit",
    "init_state",
    "SelectionResult",
    "select_m",
    "GroundTruth",
    "gen_example1",
    "gen_example2",
    "sample_edges",
]
