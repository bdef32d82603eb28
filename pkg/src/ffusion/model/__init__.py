"""Multimodal transformer: encoders, fusion, decoders, training."""

from ffusion.model.config import ModelConfig
from ffusion.model.decoders import (
    N_COMMANDS,
    N_SEG_CLASSES,
    CommandHead,
    SegHead,
    command_from_probs,
)
from ffusion.model.encoders import (
    MODALITIES,
    EncoderBranch,
    TokenSequence,
    build_branches,
    patchify,
)
from ffusion.model.fusion import (
    FUSION_BLOCKS,
    AvailabilityMask,
    FusedLatent,
    FusionCore,
    arbitration_weights,
)
from ffusion.model.health import (
    DEGRADED,
    FAILED,
    NOMINAL,
    ModalityHealth,
    camera_health,
    depth_health,
    text_health,
)
from ffusion.model.inputs import (
    DEPTH_SCALE,
    FeatureBatch,
    FeatureSet,
    group_by_availability,
    prepare_features,
    stack_features,
)
from ffusion.model.layers import (
    LayerNorm,
    Linear,
    MultiHeadAttention,
    TransformerBlock,
    init_param,
    key_mask_bias,
)
from ffusion.model.network import ForwardResult, FusionNetwork, SEG_LOSS_WEIGHT
from ffusion.model.training import Metrics, TrainConfig, evaluate, prepare_all, train
from ffusion.model.vocab import (
    BOS_ID,
    DEFAULT_VOCAB,
    EOS_ID,
    PAD_ID,
    UNK_ID,
    Vocab,
)

__all__ = [
    "AvailabilityMask",
    "BOS_ID",
    "CommandHead",
    "DEFAULT_VOCAB",
    "DEGRADED",
    "DEPTH_SCALE",
    "EOS_ID",
    "EncoderBranch",
    "FAILED",
    "FUSION_BLOCKS",
    "FeatureBatch",
    "FeatureSet",
    "ForwardResult",
    "FusedLatent",
    "FusionCore",
    "FusionNetwork",
    "LayerNorm",
    "Linear",
    "Metrics",
    "ModalityHealth",
    "ModelConfig",
    "MODALITIES",
    "MultiHeadAttention",
    "N_COMMANDS",
    "N_SEG_CLASSES",
    "NOMINAL",
    "PAD_ID",
    "SEG_LOSS_WEIGHT",
    "SegHead",
    "TokenSequence",
    "TrainConfig",
    "TransformerBlock",
    "UNK_ID",
    "Vocab",
    "arbitration_weights",
    "build_branches",
    "camera_health",
    "command_from_probs",
    "depth_health",
    "evaluate",
    "group_by_availability",
    "init_param",
    "key_mask_bias",
    "patchify",
    "prepare_all",
    "prepare_features",
    "stack_features",
    "text_health",
    "train",
]
