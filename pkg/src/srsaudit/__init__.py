"""Speaker-level membership-inference auditing for speaker recognition systems."""

from .core import (
    Embedding,
    Partition,
    PartitionLabel,
    Voice,
    VoiceRole,
    centroid,
    cosine_similarity,
    partition_dataset,
    partition_speakers,
    stable_seed,
)
from .errors import AuditError
from .features import (
    FEATURE_NAMES,
    NUM_FEATURES,
    BlackBoxAccess,
    FeatureRow,
    ImposterBank,
    WhiteBoxAccess,
    compute_features,
)
from .metrics import auroc, eer, roc_curve, tpr_at_fpr
from .pipeline import AuditConfig, Setting2, run_audit
from .queries import QueryCount, Technique, build_plan, execute_plan, predict_counts
from .srs import (
    BlackBoxSession,
    QueryLedger,
    SrsAccessMode,
    SyntheticSrs,
    SyntheticSrsConfig,
    synthetic_train,
)
from .synth import SynthConfig, SyntheticDataset

__all__ = [
    "AuditConfig",
    "AuditError",
    "BlackBoxAccess",
    "BlackBoxSession",
    "Embedding",
    "FEATURE_NAMES",
    "FeatureRow",
    "ImposterBank",
    "NUM_FEATURES",
    "Partition",
    "PartitionLabel",
    "QueryCount",
    "QueryLedger",
    "Setting2",
    "SrsAccessMode",
    "SynthConfig",
    "SyntheticDataset",
    "SyntheticSrs",
    "SyntheticSrsConfig",
    "Technique",
    "Voice",
    "VoiceRole",
    "WhiteBoxAccess",
    "auroc",
    "build_plan",
    "centroid",
    "compute_features",
    "cosine_similarity",
    "eer",
    "execute_plan",
    "partition_dataset",
    "partition_speakers",
    "predict_counts",
    "roc_curve",
    "run_audit",
    "stable_seed",
    "synthetic_train",
    "tpr_at_fpr",
]
