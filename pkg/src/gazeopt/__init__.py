"""Foveated-vision simulation and gaze-policy optimization toolkit.

The package splits into a perception stack (geometry, foveation), a
scene-understanding oracle with its reward algebra (oracle), policy
training (policy), scanpath generation (scanpath), and behavioral
evaluation (evaluation).  `corpus` handles synthetic scene generation and
all on-disk formats; `cli` wires everything into reproducible commands.
"""

from .errors import DataFormatError, DomainError, GazeoptError, NumericError
from .geometry import (
    DEFAULT_FIELD,
    FieldGeometry,
    FixationPoint,
    Placement,
    combined_eccentricity,
    eccentricity_map,
    embed_in_field,
    pixels_per_degree,
)
from .imageio import quantize_like, read_image, write_image
from .foveation import (
    DEFAULT_ALPHA,
    FoveatedImage,
    GaussianPyramid,
    ResolutionMap,
    build_pyramid,
    foveate,
    resolution_map,
)
from .oracle import (
    DescriptionSample,
    RewardTrace,
    Scene,
    SemanticRegion,
    RegionMask,
    build_reward_trace,
    describe,
    mean_entropy,
    semantic_accuracy,
    visibility,
)
from .policy import (
    PolicyChain,
    RolloutResult,
    TrainingConfig,
    load_chain,
    preset_fixations,
    rollout_chain,
    save_chain,
    train_policy_chain,
)
from .scanpath import (
    FixationSequence,
    PriorityMap,
    load_priority_map,
    map_scanpath,
    policy_scanpath,
    random_scanpath,
)
from .evaluation import (
    EvaluationReport,
    FrequencyTable,
    auc,
    bootstrap_ci,
    build_report,
    cc,
    fixation_heatmap,
    frequency_table,
    nll_independent,
    nll_mvn,
    nnll,
)
from .corpus import (
    CorpusSpec,
    generate_corpus,
    load_fixations,
    load_scenes,
    save_fixations,
    save_scenes,
)

__version__ = "0.1.0"

__all__ = [
    "DataFormatError",
    "DomainError",
    "GazeoptError",
    "NumericError",
    "DEFAULT_FIELD",
    "FieldGeometry",
    "FixationPoint",
    "Placement",
    "combined_eccentricity",
    "eccentricity_map",
    "embed_in_field",
    "pixels_per_degree",
    "quantize_like",
    "read_image",
    "write_image",
    "DEFAULT_ALPHA",
    "FoveatedImage",
    "GaussianPyramid",
    "ResolutionMap",
    "build_pyramid",
    "foveate",
    "resolution_map",
    "DescriptionSample",
    "RewardTrace",
    "Scene",
    "SemanticRegion",
    "RegionMask",
    "build_reward_trace",
    "describe",
    "mean_entropy",
    "semantic_accuracy",
    "visibility",
    "PolicyChain",
    "RolloutResult",
    "TrainingConfig",
    "load_chain",
    "preset_fixations",
    "rollout_chain",
    "save_chain",
    "train_policy_chain",
    "FixationSequence",
    "PriorityMap",
    "load_priority_map",
    "map_scanpath",
    "policy_scanpath",
    "random_scanpath",
    "EvaluationReport",
    "FrequencyTable",
    "auc",
    "bootstrap_ci",
    "build_report",
    "cc",
    "fixation_heatmap",
    "frequency_table",
    "nll_independent",
    "nll_mvn",
    "nnll",
    "CorpusSpec",
    "generate_corpus",
    "load_fixations",
    "load_scenes",
    "save_fixations",
    "save_scenes",
    "__version__",
]
