"""ResNet-50 stage extraction from an imported weight table.

The five stages are: the stem (7x7 stride-2 convolution, batch norm, ReLU),
then the outputs of the four bottleneck layers, with the stem max-pool
counted as part of the second stage's computation. Bottlenecks place their
stride on the 3x3 convolution, matching how the exported checkpoints were
trained; each layer's first block carries a projection shortcut.
"""

import numpy as np

from .ops import conv2d, fold_batch_norm, max_pool, relu
from .vfiw import RESNET50_LAYERS


def _fold_all(weights):
    """Precompute (scale, shift) for every batch norm in the table."""
    folded = {}
    for name in weights.tensors:
        if name.endswith(".gamma"):
            prefix = name[: -len(".gamma")]
            folded[prefix] = fold_batch_norm(
                weights[f"{prefix}.mean"],
                weights[f"{prefix}.var"],
                weights[f"{prefix}.gamma"],
                weights[f"{prefix}.beta"],
            )
    return folded


def _bn(x, fold):
    scale, shift = fold
    return x * scale[:, None, None] + shift[:, None, None]


def _bottleneck(x, weights, folded, prefix, stride):
    shortcut = x
    out = relu(_bn(conv2d(x, weights[f"{prefix}.conv1.weight"]), folded[f"{prefix}.bn1"]))
    out = relu(
        _bn(
            conv2d(out, weights[f"{prefix}.conv2.weight"], stride=stride, padding=1),
            folded[f"{prefix}.bn2"],
        )
    )
    out = _bn(conv2d(out, weights[f"{prefix}.conv3.weight"]), folded[f"{prefix}.bn3"])
    ds = f"{prefix}.downsample.conv.weight"
    if ds in weights.tensors:
        shortcut = _bn(
            conv2d(x, weights[ds], stride=stride), folded[f"{prefix}.downsample.bn"]
        )
    return relu(out + shortcut)


def resnet50_stages(x, weights):
    """Run the five-stage subgraph; returns the list of stage outputs."""
    folded = _fold_all(weights)
    s1 = relu(_bn(conv2d(x, weights["conv1.weight"], stride=2, padding=3), folded["bn1"]))
    stages = [s1]
    x = max_pool(s1)
    for lidx, (blocks, _mid) in enumerate(RESNET50_LAYERS, start=1):
        layer_stride = 1 if lidx == 1 else 2
        for b in range(blocks):
            x = _bottleneck(
                x, weights, folded, f"layer{lidx}.{b}", layer_stride if b == 0 else 1
            )
        stages.append(x)
    return stages
