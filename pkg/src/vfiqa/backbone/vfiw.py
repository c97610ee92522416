"""VFIW weight container: named float32 tensors in a little-endian file.

Layout: magic "VFIW", version byte 1, u16 architecture-tag length plus the
UTF-8 tag, u32 tensor count; then per tensor a u16 name length, the UTF-8
name, a u8 rank, each dimension as u64, and the float32 payload in C order.

Tensor naming for the "resnet50" architecture:

    conv1.weight                      stem convolution
    bn1.{gamma,beta,mean,var}         stem batch norm
    layer{L}.{B}.conv{1..3}.weight    bottleneck convolutions, L in 1..4
    layer{L}.{B}.bn{1..3}.{...}       matching batch norms
    layer{L}.0.downsample.conv.weight projection shortcut, first block only
    layer{L}.0.downsample.bn.{...}    projection batch norm

The "reference" architecture uses conv{1..5}.weight. Classifier tensors are
never stored; unknown names in a file are ignored at load time.
"""

import os
import struct

import numpy as np

from ..errors import WeightsError

MAGIC = b"VFIW"
VERSION = 1

BN_PARTS = ("gamma", "beta", "mean", "var")

# (blocks per layer, mid channels per layer); expansion 4
RESNET50_LAYERS = ((3, 64), (4, 128), (6, 256), (3, 512))

REFERENCE_CHANNELS = (3, 8, 16, 32, 64, 128)


def resnet50_tensor_shapes():
    """Expected name -> shape table for the five-stage ResNet-50 subgraph."""
    shapes = {"conv1.weight": (64, 3, 7, 7)}
    for part in BN_PARTS:
        shapes[f"bn1.{part}"] = (64,)
    in_ch = 64
    for lidx, (blocks, mid) in enumerate(RESNET50_LAYERS, start=1):
        out_ch = mid * 4
        for b in range(blocks):
            p = f"layer{lidx}.{b}"
            block_in = in_ch if b == 0 else out_ch
            shapes[f"{p}.conv1.weight"] = (mid, block_in, 1, 1)
            shapes[f"{p}.conv2.weight"] = (mid, mid, 3, 3)
            shapes[f"{p}.conv3.weight"] = (out_ch, mid, 1, 1)
            for n, c in (("bn1", mid), ("bn2", mid), ("bn3", out_ch)):
                for part in BN_PARTS:
                    shapes[f"{p}.{n}.{part}"] = (c,)
            if b == 0:
                shapes[f"{p}.downsample.conv.weight"] = (out_ch, block_in, 1, 1)
                for part in BN_PARTS:
                    shapes[f"{p}.downsample.bn.{part}"] = (out_ch,)
        in_ch = out_ch
    return shapes


def reference_tensor_shapes():
    shapes = {}
    ch = REFERENCE_CHANNELS
    for i in range(1, 6):
        shapes[f"conv{i}.weight"] = (ch[i], ch[i - 1], 3, 3)
    return shapes


ARCH_SHAPES = {
    "resnet50": resnet50_tensor_shapes,
    "reference": reference_tensor_shapes,
}


class BackboneWeights:
    """Immutable named-tensor table with an architecture tag."""

    def __init__(self, arch, tensors):
        expected = architecture_shapes(arch)
        table = {}
        for name, shape in expected.items():
            if name not in tensors:
                raise WeightsError(f"missing tensor {name!r} for architecture {arch!r}")
            t = np.asarray(tensors[name], dtype=np.float32)
            if t.shape != shape:
                raise WeightsError(
                    f"tensor {name!r}: shape {t.shape}, expected {shape}"
                )
            t = np.ascontiguousarray(t)
            t.flags.writeable = False
            table[name] = t
        self.arch = arch
        self.tensors = table

    def __getitem__(self, name):
        return self.tensors[name]


def architecture_shapes(arch):
    try:
        return ARCH_SHAPES[arch]()
    except KeyError:
        raise WeightsError(f"unknown backbone architecture {arch!r}") from None


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise WeightsError(f"truncated weight file while reading {what}")
    return buf


def load_weights(path):
    """Read a VFIW file into BackboneWeights.

    Validates magic, version, and the completeness and shapes of every
    tensor the declared architecture requires; extra tensors are ignored.
    """
    if not os.path.isfile(path):
        raise WeightsError(f"weight file not found: {path}")
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != MAGIC:
            raise WeightsError(f"{path}: not a VFIW file (bad magic)")
        (version,) = struct.unpack("<B", _read_exact(fh, 1, "version"))
        if version != VERSION:
            raise WeightsError(f"{path}: unsupported VFIW version {version}")
        (tag_len,) = struct.unpack("<H", _read_exact(fh, 2, "tag length"))
        arch = _read_exact(fh, tag_len, "architecture tag").decode("utf-8")
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "tensor count"))
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "name length"))
            name = _read_exact(fh, name_len, "tensor name").decode("utf-8")
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1, f"{name} rank"))
            dims = struct.unpack(
                f"<{ndim}Q", _read_exact(fh, 8 * ndim, f"{name} dims")
            )
            n = 1
            for d in dims:
                n *= d
            payload = _read_exact(fh, 4 * n, f"{name} payload")
            tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(dims)
    try:
        return BackboneWeights(arch, tensors)
    except WeightsError as exc:
        raise WeightsError(f"{path}: {exc}") from exc


def write_weights(weights, path):
    """Serialize BackboneWeights to a VFIW file (sorted tensor names)."""
    names = sorted(weights.tensors)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        tag = weights.arch.encode("utf-8")
        fh.write(struct.pack("<H", len(tag)))
        fh.write(tag)
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            t = weights.tensors[name]
            nb = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<B", t.ndim))
            fh.write(struct.pack(f"<{t.ndim}Q", *t.shape))
            fh.write(np.ascontiguousarray(t, dtype="<f4").tobytes())
