"""Deterministic desk-scale backbone used as a test double.

Five 3x3 stride-2 convolutions (channels 3 -> 8 -> 16 -> 32 -> 64 -> 128),
ReLU after each, no biases or normalization. Weights are drawn from the
documented splitmix64 stream, uniform in [-1/sqrt(fan-in), 1/sqrt(fan-in)],
so a seed fully determines the network on every platform.
"""

import numpy as np

from ..rng import SplitMix64
from .ops import conv2d, relu
from .vfiw import BackboneWeights, reference_tensor_shapes


def reference_backbone(seed):
    """Build the fixed-topology reference weight table for a seed."""
    stream = SplitMix64(seed)
    tensors = {}
    for name, shape in sorted(reference_tensor_shapes().items()):
        _, cin, kh, kw = shape
        bound = 1.0 / np.sqrt(cin * kh * kw)
        n = int(np.prod(shape))
        flat = np.empty(n, dtype=np.float64)
        for i in range(n):
            flat[i] = (2.0 * stream.next_double() - 1.0) * bound
        tensors[name] = flat.astype(np.float32).reshape(shape)
    return BackboneWeights("reference", tensors)


def reference_stages(x, weights):
    """Run the reference stack; returns the list of five stage outputs."""
    stages = []
    for i in range(1, 6):
        x = relu(conv2d(x, weights[f"conv{i}.weight"], stride=2, padding=1))
        stages.append(x)
    return stages
