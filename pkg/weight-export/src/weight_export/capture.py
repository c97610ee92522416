"""Model acquisition, fixture synthesis, and stage activation capture.

The five recorded stages are the stem (7x7 convolution, batch norm, ReLU)
and the outputs of the four bottleneck layers, with the stem max-pool
folded into the second stage. Inputs are standardized with the same
channel statistics the scoring side applies, in the same float32
arithmetic, so the only cross-implementation difference left is
accumulation order inside the convolutions.
"""

import os
from urllib.parse import urlparse

import numpy as np
import torch
from PIL import Image

from .errors import ExportError

# Channel statistics the backbone was trained with; every consumer of the
# fixture must standardize with exactly these constants.
CHANNEL_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
CHANNEL_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

FIXTURE_SIZE = 224

SOURCES = ("auto", "zoo", "synthetic")


def _weight_spec(model_id):
    import torchvision.models as zoo

    try:
        return zoo.get_model_weights(model_id)["IMAGENET1K_V1"]
    except Exception:
        return None


def _in_hub_cache(spec):
    name = os.path.basename(urlparse(spec.url).path)
    return os.path.isfile(os.path.join(torch.hub.get_dir(), "checkpoints", name))


def acquire_model(model_id, seed, source="auto"):
    """Instantiate a zoo model in eval mode; returns (model, origin).

    source "auto" uses zoo weights only when the checkpoint is already in
    the local hub cache and otherwise falls back to a seed-determined
    random initialization; "zoo" insists on pretrained weights (cache or
    download) and raises when they cannot be obtained; "synthetic" never
    consults the zoo. origin is "zoo" or "synthetic" accordingly.
    """
    import torchvision.models as zoo

    if source not in SOURCES:
        raise ExportError(f"unknown weight source {source!r}")
    builder = getattr(zoo, model_id, None)
    if builder is None or not callable(builder):
        raise ExportError(f"unknown model id {model_id!r}")
    if source != "synthetic":
        spec = _weight_spec(model_id)
        if spec is None and source == "zoo":
            raise ExportError(f"no published weights catalogued for {model_id!r}")
        if spec is not None and (source == "zoo" or _in_hub_cache(spec)):
            try:
                model = builder(weights=spec)
                model.eval()
                return model, "zoo"
            except Exception as exc:
                raise ExportError(
                    f"could not obtain zoo weights for {model_id!r}: {exc}"
                ) from exc
    torch.manual_seed(seed)
    model = builder(weights=None)
    model.eval()
    return model, "synthetic"


# Gain on each block's closing norm. Fresh residual branches at full gain
# amplify the stream a little per block, which compounds over sixteen
# blocks into hundreds; training recipes start this gamma at or near zero
# for the same reason. 0.25 keeps every tensor contributing while holding
# stage magnitudes near a trained network's.
RESIDUAL_DAMPING = 0.25


def populate_norm_stats(model, seed):
    """Give a random-initialized network data-driven running statistics.

    Fresh batch norms carry mean 0 / variance 1, which lets the dynamic
    range drift over fifty layers. After damping the residual branches,
    a few cumulative-average passes over seeded batches, standardized like
    real inputs, anchor every norm to the statistics its inputs actually
    have; that bounded range is what the parity tolerance relies on.
    """
    for m in model.modules():
        if isinstance(m, torch.nn.modules.batchnorm._BatchNorm):
            m.momentum = None  # cumulative moving average
            m.reset_running_stats()
        if hasattr(m, "conv3") and hasattr(m, "bn3"):
            with torch.no_grad():
                m.bn3.weight.mul_(RESIDUAL_DAMPING)
    gen = torch.Generator().manual_seed(seed + 1)
    mean = torch.from_numpy(CHANNEL_MEAN).reshape(1, 3, 1, 1)
    std = torch.from_numpy(CHANNEL_STD).reshape(1, 3, 1, 1)
    model.train()
    with torch.no_grad():
        for _ in range(3):
            batch = torch.rand(2, 3, FIXTURE_SIZE, FIXTURE_SIZE, generator=gen)
            model((batch - mean) / std)
    model.eval()


def fixture_pixels(seed):
    """Deterministic 224x224 RGB test card.

    A low-frequency color field from a seeded generator, upsampled with
    bilinear interpolation, mixed over a horizontal luminance ramp: smooth
    regions, gradients, and soft edges, with the PNG itself as the ground
    truth (no float noise survives serialization).
    """
    rng = np.random.default_rng(seed)
    coarse = (rng.uniform(0.0, 1.0, size=(14, 14, 3)) * 255).astype(np.uint8)
    up = Image.fromarray(coarse, "RGB").resize(
        (FIXTURE_SIZE, FIXTURE_SIZE), Image.BILINEAR
    )
    field = np.asarray(up, dtype=np.float64) / 255.0
    ramp = np.linspace(0.15, 0.85, FIXTURE_SIZE)[None, :, None]
    mixed = 0.65 * field + 0.35 * ramp
    return np.clip(np.round(mixed * 255.0), 0, 255).astype(np.uint8)


def write_fixture(path, seed):
    Image.fromarray(fixture_pixels(seed), "RGB").save(path, format="PNG")


def standardized_input(path):
    """Load a fixture PNG exactly as the scoring side prepares input.

    uint8 to [0, 1] by /255 in float32, channels first, then per-channel
    (x - mean) / std, all in float32 so the bytes match bit for bit.
    """
    img = Image.open(path).convert("RGB")
    data = (np.asarray(img, dtype=np.float32) / 255.0).transpose(2, 0, 1)
    out = (data - CHANNEL_MEAN[:, None, None]) / CHANNEL_STD[:, None, None]
    return np.ascontiguousarray(out, dtype=np.float32)


def capture_stages(model, x_chw):
    """Run the five-stage subgraph on one input; stage index -> array."""
    with torch.no_grad():
        x = torch.from_numpy(x_chw[None])
        s1 = model.relu(model.bn1(model.conv1(x)))
        s2 = model.layer1(model.maxpool(s1))
        s3 = model.layer2(s2)
        s4 = model.layer3(s3)
        s5 = model.layer4(s4)
    return {
        i: s.squeeze(0).numpy().copy()
        for i, s in enumerate((s1, s2, s3, s4, s5), start=1)
    }
