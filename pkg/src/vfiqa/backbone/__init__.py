"""Six-stage feature extraction over imported or generated weights.

A frame's feature stack holds the raw [0, 1] frame at stage 0 and five
progressively halved convolutional stages above it. Stage spatial sizes are
exact: stage i covers (H / 2^i, W / 2^i) of the padded input.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from .ops import BN_EPS, batch_norm_inference, conv2d, fold_batch_norm, max_pool, relu
from .reference import reference_backbone, reference_stages
from .resnet import resnet50_stages
from .vfiw import (
    BackboneWeights,
    REFERENCE_CHANNELS,
    architecture_shapes,
    load_weights,
    reference_tensor_shapes,
    resnet50_tensor_shapes,
    write_weights,
)

__all__ = [
    "BN_EPS",
    "BackboneWeights",
    "FeatureStack",
    "REFERENCE_CHANNELS",
    "RESNET50_CHANNELS",
    "architecture_shapes",
    "batch_norm_inference",
    "conv2d",
    "extract_features",
    "fold_batch_norm",
    "load_weights",
    "max_pool",
    "reference_backbone",
    "reference_tensor_shapes",
    "relu",
    "resnet50_tensor_shapes",
    "write_weights",
]

RESNET50_CHANNELS = (3, 64, 256, 512, 1024, 2048)

_STAGE_FNS = {
    "resnet50": (resnet50_stages, RESNET50_CHANNELS),
    "reference": (reference_stages, REFERENCE_CHANNELS),
}


@dataclass(frozen=True)
class FeatureStack:
    """Exactly six feature maps, stage 0 being the raw frame."""

    stages: tuple

    def __post_init__(self):
        if len(self.stages) != 6:
            raise InputError(f"feature stack needs 6 stages, got {len(self.stages)}")
        object.__setattr__(self, "stages", tuple(self.stages))

    def __getitem__(self, i):
        return self.stages[i]


def extract_features(model_input, raw, weights):
    """Produce the six-stage FeatureStack for one frame.

    model_input is the padded, standardized array from to_model_input; raw
    is the original Frame, which becomes stage 0 with its unpadded
    dimensions. Inference is pure: identical weights and input give
    bit-identical stacks.
    """
    stage_fn, channels = _STAGE_FNS[weights.arch]
    stages = stage_fn(np.asarray(model_input, dtype=np.float32), weights)
    _, h, w = model_input.shape
    for i, s in enumerate(stages, start=1):
        expect = (channels[i], h >> i, w >> i)
        if s.shape != expect:
            raise InputError(
                f"stage {i} produced shape {s.shape}, contract requires {expect}"
            )
    return FeatureStack((raw.data,) + tuple(stages))
