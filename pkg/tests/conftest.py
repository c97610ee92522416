"""Shared fixtures: synthetic frames, weights, and a small scored dataset."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from imagefiles import write_png

from vfiqa.backbone import reference_tensor_shapes, write_weights
from vfiqa.backbone.reference import reference_backbone
from vfiqa.backbone.vfiw import BackboneWeights
from vfiqa.core import DatasetManifest, TripletRecord, write_manifest
from vfiqa.coherence import ModelWeights


def random_frame_array(rng, height=32, width=32):
    return rng.uniform(0.0, 1.0, size=(3, height, width)).astype(np.float32)


@pytest.fixture(scope="session")
def reference_weights():
    return reference_backbone(seed=21)


@pytest.fixture(scope="session")
def resnet50_random_weights():
    """Randomly filled full-size weight table; statistics chosen so
    activations stay in a sane range through 50 layers."""
    from vfiqa.backbone import resnet50_tensor_shapes

    rng = np.random.default_rng(7)
    tensors = {}
    for name, shape in resnet50_tensor_shapes().items():
        if name.endswith(".weight"):
            fan_in = int(np.prod(shape[1:]))
            tensors[name] = (
                rng.standard_normal(shape) * (2.0 / fan_in) ** 0.5
            ).astype(np.float32)
        elif name.endswith((".var", ".gamma")):
            tensors[name] = rng.uniform(0.5, 1.5, shape).astype(np.float32)
        else:
            tensors[name] = (0.1 * rng.standard_normal(shape)).astype(np.float32)
    return BackboneWeights(arch="resnet50", tensors=tensors)


@pytest.fixture(scope="session")
def zero_reference_weights():
    tensors = {
        name: np.zeros(shape, dtype=np.float32)
        for name, shape in reference_tensor_shapes().items()
    }
    return BackboneWeights(arch="reference", tensors=tensors)


@pytest.fixture(scope="session")
def uniform_model():
    w = np.full(6, 1.0 / 12.0)
    return ModelWeights(alpha=w, beta=w, backbone="reference")


def build_synthetic_dataset(root, n_triplets=30, gen_seed=99, frame_seed=2024):
    """Scored interpolation triplets whose MOS tracks coherence features.

    Midpoint frames are the neighbor average plus graded noise; MOS is a
    noisy linear readout of the actual similarity features, so a trained
    model can rank the set almost perfectly.
    """
    from vfiqa.backbone import extract_features
    from vfiqa.coherence import similarity_features
    from vfiqa.core import Frame
    from vfiqa.image_io import load_frame, to_model_input

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    frame_rng = np.random.default_rng(frame_seed)
    amplitudes = np.linspace(0.0, 0.45, n_triplets)
    frame_rng.shuffle(amplitudes)

    weights = reference_backbone(seed=21)
    weights_path = root / "ref.vfiw"
    write_weights(weights, weights_path)

    records = []
    rows = []
    for t in range(n_triplets):
        base = np.kron(
            frame_rng.uniform(0.15, 0.85, size=(3, 8, 8)), np.ones((8, 8))
        ).astype(np.float32)
        drift = frame_rng.uniform(-0.08, 0.08, size=base.shape).astype(np.float32)
        i0 = base
        i1 = np.clip(base + drift, 0.0, 1.0).astype(np.float32)
        mid = 0.5 * (i0 + i1)
        noise = amplitudes[t] * frame_rng.standard_normal(base.shape)
        it = np.clip(mid + noise, 0.0, 1.0).astype(np.float32)
        paths = []
        for tag, arr in (("i0", i0), ("it", it), ("i1", i1)):
            p = root / f"t{t:02d}_{tag}.png"
            write_png(p, arr)
            paths.append(p)
        records.append((f"t{t:02d}", paths))

    gen_rng = np.random.default_rng(gen_seed)
    theta = 1.0 / 12.0 + gen_rng.uniform(-0.001, 0.001, size=12)
    features = []
    for _, paths in records:
        frames = [load_frame(p) for p in paths]
        stacks = [
            extract_features(to_model_input(f), f, weights) for f in frames
        ]
        feats = similarity_features(stacks[0], stacks[1], stacks[2])
        features.append(feats.values("both"))
    features = np.asarray(features)
    signal = features @ theta
    spread = signal.max() - signal.min()
    mos = signal + 0.0025 * spread * gen_rng.standard_normal(len(signal))

    manifest_records = [
        TripletRecord(
            id=rid,
            path_i0=str(paths[0]),
            path_it=str(paths[1]),
            path_i1=str(paths[2]),
            mos=float(m),
        )
        for (rid, paths), m in zip(records, mos)
    ]
    manifest = DatasetManifest(records=tuple(manifest_records))
    manifest_path = root / "manifest.csv"
    write_manifest(manifest, manifest_path)
    return {"manifest": manifest_path, "weights": weights_path, "root": root}


@pytest.fixture(scope="session")
def synthetic_dataset(tmp_path_factory):
    return build_synthetic_dataset(tmp_path_factory.mktemp("synth"))
