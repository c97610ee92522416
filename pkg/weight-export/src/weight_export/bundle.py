"""One-shot export: weight container, fixture image, goldens, metadata."""

import hashlib
import json
import os

import torch

from .capture import (
    acquire_model,
    capture_stages,
    populate_norm_stats,
    standardized_input,
    write_fixture,
)
from .formats import write_golden, write_vfiw
from .naming import collect_tensors

# Anything that passes shape validation is this architecture by definition.
ARCH_TAG = "resnet50"


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def export(model_id, out_dir, seed=0, source="auto"):
    """Write the four artifacts for model_id into out_dir.

    Validates the architecture before any heavy work, then emits the
    weight container (sorted tensor names, so identical inputs give a
    byte-identical file), the fixture PNG, golden activations for stages
    1..5 on that fixture, and a metadata JSON with artifact checksums.
    Returns the artifact paths plus the weight origin.

    Parameters
    ----------
    model_id : str
        Zoo model name; anything that is not shaped like the five-stage
        bottleneck network is rejected.
    out_dir : path
        Created if absent.
    seed : int
        Drives the fixture pattern and, for synthetic weights, the
        initialization and statistics batches.
    source : str
        "auto", "zoo", or "synthetic"; see acquire_model.
    """
    torch.set_num_threads(1)  # bit-stable activation capture
    os.makedirs(out_dir, exist_ok=True)
    model, origin = acquire_model(model_id, seed, source)
    tensors = collect_tensors(model.state_dict())
    if origin == "synthetic":
        populate_norm_stats(model, seed)
        tensors = collect_tensors(model.state_dict())

    weights_path = os.path.join(out_dir, f"{model_id}.vfiw")
    write_vfiw(tensors, ARCH_TAG, weights_path)
    fixture_path = os.path.join(out_dir, "fixture.png")
    write_fixture(fixture_path, seed)
    stages = capture_stages(model, standardized_input(fixture_path))
    golden_path = os.path.join(out_dir, "golden.vfig")
    write_golden(stages, golden_path)

    meta = {
        "architecture": ARCH_TAG,
        "model_id": model_id,
        "source": origin,
        "seed": seed,
        "tensor_count": len(tensors),
        "conv1_weight_shape": list(tensors["conv1.weight"].shape),
        "stage_shapes": {str(i): list(stages[i].shape) for i in sorted(stages)},
        "checksums": {
            os.path.basename(p): _sha256(p)
            for p in (weights_path, fixture_path, golden_path)
        },
    }
    meta_path = os.path.join(out_dir, "metadata.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return {
        "weights": weights_path,
        "fixture": fixture_path,
        "golden": golden_path,
        "metadata": meta_path,
        "source": origin,
    }


def create_bundle(out_dir, seed=0, model_id="resnet50"):
    """Deterministic bundle for parity testing; see export."""
    return export(model_id, out_dir, seed=seed)
