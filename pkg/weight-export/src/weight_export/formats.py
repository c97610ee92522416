"""Binary emit and independent re-read of the two artifact formats.

Weight container, little-endian: magic "VFIW", version byte 1, u16 tag
length plus the UTF-8 architecture tag, u32 tensor count; per tensor a u16
name length plus the UTF-8 name, a u8 rank, each dimension as u64, then
the float32 payload in C order. Names are written sorted so a re-export is
byte-identical.

Golden activations use a sibling layout: magic "VFIG", version byte 1, u32
record count; per record a u32 stage index, a u8 rank, u64 dimensions, and
the float32 payload, ordered by stage index.

The readers here parse from scratch rather than reusing the writer's
state, so a round-trip check exercises two independent views of the bytes.
"""

import struct

import numpy as np

from .errors import ExportError

WEIGHT_MAGIC = b"VFIW"
GOLDEN_MAGIC = b"VFIG"
VERSION = 1


def write_vfiw(tensors, arch, path):
    """Serialize name -> array as a weight container."""
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        fh.write(struct.pack("<B", VERSION))
        tag = arch.encode("utf-8")
        fh.write(struct.pack("<H", len(tag)))
        fh.write(tag)
        fh.write(struct.pack("<I", len(tensors)))
        for name in sorted(tensors):
            t = np.ascontiguousarray(tensors[name], dtype="<f4")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", t.ndim))
            fh.write(struct.pack(f"<{t.ndim}Q", *t.shape))
            fh.write(t.tobytes())


class _Cursor:
    """Offset-tracked reads over a byte string."""

    def __init__(self, buf, label):
        self.buf = buf
        self.pos = 0
        self.label = label

    def take(self, n, what):
        end = self.pos + n
        if end > len(self.buf):
            raise ExportError(f"{self.label}: truncated while reading {what}")
        out = self.buf[self.pos : end]
        self.pos = end
        return out

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def _read_array(cur, what):
    (ndim,) = cur.unpack("<B", f"{what} rank")
    dims = cur.unpack(f"<{ndim}Q", f"{what} dims")
    n = 1
    for d in dims:
        n *= d
    payload = cur.take(4 * n, f"{what} payload")
    return np.frombuffer(payload, dtype="<f4").reshape(dims)


def parse_vfiw(buf, label="weight data"):
    """Decode a weight container; returns (architecture tag, tensors)."""
    cur = _Cursor(buf, label)
    if cur.take(4, "magic") != WEIGHT_MAGIC:
        raise ExportError(f"{label}: bad magic, not a weight container")
    (version,) = cur.unpack("<B", "version")
    if version != VERSION:
        raise ExportError(f"{label}: unsupported container version {version}")
    (tag_len,) = cur.unpack("<H", "tag length")
    arch = cur.take(tag_len, "architecture tag").decode("utf-8")
    (count,) = cur.unpack("<I", "tensor count")
    tensors = {}
    for _ in range(count):
        (name_len,) = cur.unpack("<H", "name length")
        name = cur.take(name_len, "tensor name").decode("utf-8")
        tensors[name] = _read_array(cur, name)
    return arch, tensors


def read_vfiw(path):
    """Parse a weight container file into name -> float32 array.

    Shape auditing is not this reader's job; it reproduces exactly what
    the file stores.
    """
    with open(path, "rb") as fh:
        _, tensors = parse_vfiw(fh.read(), str(path))
    return tensors


def write_golden(stages, path):
    """Serialize stage index -> activation array as a golden file."""
    with open(path, "wb") as fh:
        fh.write(GOLDEN_MAGIC)
        fh.write(struct.pack("<B", VERSION))
        fh.write(struct.pack("<I", len(stages)))
        for idx in sorted(stages):
            a = np.ascontiguousarray(stages[idx], dtype="<f4")
            fh.write(struct.pack("<I", idx))
            fh.write(struct.pack("<B", a.ndim))
            fh.write(struct.pack(f"<{a.ndim}Q", *a.shape))
            fh.write(a.tobytes())


def read_golden(path):
    """Parse a golden activation file into stage index -> float32 array."""
    with open(path, "rb") as fh:
        cur = _Cursor(fh.read(), str(path))
    if cur.take(4, "magic") != GOLDEN_MAGIC:
        raise ExportError(f"{path}: bad magic, not a golden activation file")
    (version,) = cur.unpack("<B", "version")
    if version != VERSION:
        raise ExportError(f"{path}: unsupported golden file version {version}")
    (count,) = cur.unpack("<I", "record count")
    stages = {}
    for _ in range(count):
        (idx,) = cur.unpack("<I", "stage index")
        stages[idx] = _read_array(cur, f"stage {idx}")
    return stages
