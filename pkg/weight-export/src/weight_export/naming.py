"""Tensor naming and shape contract for the exported backbone.

Checkpoint keys follow the training framework's module layout (bn1.weight,
layer1.0.downsample.0.weight, ...). The weight container names the same
tensors by role instead: batch norm parameters become gamma/beta/mean/var
and the projection shortcut pair becomes downsample.conv.weight plus
downsample.bn.*. The classifier head and step counters are not exported;
the five-stage subgraph consumes neither.
"""

import numpy as np

from .errors import ExportError

BN_RENAME = {
    "weight": "gamma",
    "bias": "beta",
    "running_mean": "mean",
    "running_var": "var",
}

# Bottleneck stack: (blocks, mid channels) per layer, expansion 4.
LAYERS = ((3, 64), (4, 128), (6, 256), (3, 512))
EXPANSION = 4

TENSOR_COUNT = 265


def checkpoint_to_vfiw(key):
    """Map one checkpoint key to its container name, or None to drop it.

    fc.* belongs to the classifier and num_batches_tracked is training
    bookkeeping; neither travels. downsample.0 and downsample.1 are the
    projection convolution and its batch norm.
    """
    parts = key.split(".")
    if parts[0] == "fc" or parts[-1] == "num_batches_tracked":
        return None
    if parts[-1] not in ("weight", "bias", "running_mean", "running_var"):
        return None
    if "downsample" in parts:
        i = parts.index("downsample")
        head = ".".join(parts[:i])
        if parts[i + 1] == "0":
            return f"{head}.downsample.conv.weight"
        return f"{head}.downsample.bn.{BN_RENAME[parts[-1]]}"
    if parts[-2].startswith("bn"):
        return ".".join(parts[:-1]) + "." + BN_RENAME[parts[-1]]
    if parts[-1] == "weight":
        return key
    return None


def _norm_entries(table, prefix, channels):
    for part in ("gamma", "beta", "mean", "var"):
        table[f"{prefix}.{part}"] = (channels,)


def expected_shapes():
    """Name -> shape for every tensor a five-stage export must carry.

    Insertion order walks the network front to back so that validation
    reports the first architectural divergence, not an alphabetical one.
    """
    table = {"conv1.weight": (64, 3, 7, 7)}
    _norm_entries(table, "bn1", 64)
    in_ch = 64
    for lidx, (blocks, mid) in enumerate(LAYERS, start=1):
        out_ch = mid * EXPANSION
        for b in range(blocks):
            prefix = f"layer{lidx}.{b}"
            first = in_ch if b == 0 else out_ch
            table[f"{prefix}.conv1.weight"] = (mid, first, 1, 1)
            _norm_entries(table, f"{prefix}.bn1", mid)
            table[f"{prefix}.conv2.weight"] = (mid, mid, 3, 3)
            _norm_entries(table, f"{prefix}.bn2", mid)
            table[f"{prefix}.conv3.weight"] = (out_ch, mid, 1, 1)
            _norm_entries(table, f"{prefix}.bn3", out_ch)
            if b == 0:
                table[f"{prefix}.downsample.conv.weight"] = (out_ch, first, 1, 1)
                _norm_entries(table, f"{prefix}.downsample.bn", out_ch)
        in_ch = out_ch
    return table


def collect_tensors(state_dict):
    """Rename and validate a checkpoint into the export table.

    Returns name -> float32 array covering exactly the expected tensor
    set. Raises ExportError at the first missing or wrong-shape tensor in
    network order, and for leftover names the contract does not cover.
    """
    mapped = {}
    for key, value in state_dict.items():
        name = checkpoint_to_vfiw(key)
        if name is not None:
            mapped[name] = np.asarray(value, dtype=np.float32)
    expected = expected_shapes()
    for name, shape in expected.items():
        if name not in mapped:
            raise ExportError(
                f"missing tensor {name!r}; checkpoint is not a five-stage "
                "bottleneck network"
            )
        if mapped[name].shape != shape:
            raise ExportError(
                f"shape mismatch for {name!r}: got "
                f"{tuple(mapped[name].shape)}, expected {shape}"
            )
    extra = sorted(set(mapped) - set(expected))
    if extra:
        raise ExportError(f"unexpected tensor {extra[0]!r} in checkpoint")
    return {name: mapped[name] for name in expected}
