"""Domain types, manifest ingestion, and the deterministic split protocol.

A dataset is a CSV manifest of frame triplets: the interpolated frame and
its two source neighbors, optionally labeled with a mean opinion score on a
0..100 scale. Everything downstream consumes the types defined here.

Array layout convention used across the package: image and feature data are
planar float32 numpy arrays shaped (channels, height, width).
"""

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ManifestError
from .rng import SplitMix64, derive_seed

MANIFEST_COLUMNS = ("id", "path_i0", "path_it", "path_i1")
MOS_MIN, MOS_MAX = 0.0, 100.0


@dataclass(frozen=True)
class Frame:
    """Decoded RGB image.

    data is float32, planar (3, height, width), every intensity in [0, 1].
    Frames smaller than 32x32 are rejected: five halvings of the feature
    pyramid need at least one position per stage.
    """

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if d.ndim != 3 or d.shape[0] != 3:
            raise InputError(f"frame data must be (3, H, W), got {d.shape}")
        if d.shape[1] < 32 or d.shape[2] < 32:
            raise InputError(
                f"frame must be at least 32x32, got {d.shape[2]}x{d.shape[1]}"
            )
        if d.dtype != np.float32:
            raise InputError(f"frame data must be float32, got {d.dtype}")
        lo, hi = float(d.min()), float(d.max())
        if not (0.0 <= lo and hi <= 1.0):
            raise InputError(f"frame intensities outside [0, 1]: [{lo}, {hi}]")

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    @property
    def channels(self):
        return 3


@dataclass(frozen=True)
class TripletRecord:
    """One dataset row: an interpolated frame between two neighbors."""

    id: str
    path_i0: str
    path_it: str
    path_i1: str
    mos: float | None = None
    path_ref: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ManifestError("record id must be non-empty")
        paths = (self.path_i0, self.path_it, self.path_i1)
        if len(set(paths)) != 3:
            raise ManifestError(f"record {self.id!r}: triplet paths must be distinct")
        if self.mos is not None and not (MOS_MIN <= self.mos <= MOS_MAX):
            raise ManifestError(
                f"record {self.id!r}: mos {self.mos} outside [{MOS_MIN}, {MOS_MAX}]"
            )


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered collection of triplet records with unique ids."""

    records: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for r in self.records:
            if r.id in seen:
                raise ManifestError(f"duplicate record id {r.id!r}")
            seen.add(r.id)

    def __len__(self):
        return len(self.records)

    @property
    def has_mos(self):
        return len(self) > 0 and all(r.mos is not None for r in self.records)


@dataclass(frozen=True)
class SplitConfig:
    """Train/test split protocol parameters."""

    train_fraction: float = 0.8
    repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise InputError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.repeats < 1:
            raise InputError(f"repeats must be >= 1, got {self.repeats}")
        if self.seed < 0:
            raise InputError(f"seed must be unsigned, got {self.seed}")


def load_manifest(path):
    """Parse a manifest CSV into a DatasetManifest.

    Header must be `id,path_i0,path_it,path_i1`, optionally followed by
    `mos` and then `path_ref` (ground-truth references for full-reference
    baselines). Paths are resolved relative to the manifest's directory.
    Errors name the offending CSV line or record id.
    """
    if not os.path.isfile(path):
        raise ManifestError(f"manifest not found: {path}")
    base = os.path.dirname(os.path.abspath(path))
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not rows:
        raise ManifestError(f"manifest {path} is empty")

    header = tuple(rows[0])
    has_mos = False
    has_ref = False
    if header == MANIFEST_COLUMNS:
        pass
    elif header == MANIFEST_COLUMNS + ("mos",):
        has_mos = True
    elif header == MANIFEST_COLUMNS + ("path_ref",):
        has_ref = True
    elif header == MANIFEST_COLUMNS + ("mos", "path_ref"):
        has_mos = has_ref = True
    else:
        raise ManifestError(
            f"manifest {path}: bad header {','.join(header)!r}; expected "
            f"{','.join(MANIFEST_COLUMNS)} with optional mos and path_ref columns"
        )

    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ManifestError(
                f"manifest {path} row {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        rid, p0, pt, p1 = row[0], row[1], row[2], row[3]
        mos = None
        if has_mos and row[4] != "":
            try:
                mos = float(row[4])
            except ValueError as exc:
                raise ManifestError(
                    f"manifest {path} row {lineno}: mos {row[4]!r} is not a number"
                ) from exc
        ref = None
        if has_ref:
            cell = row[5] if has_mos else row[4]
            ref = os.path.normpath(os.path.join(base, cell)) if cell else None
        try:
            records.append(
                TripletRecord(
                    id=rid,
                    path_i0=os.path.normpath(os.path.join(base, p0)),
                    path_it=os.path.normpath(os.path.join(base, pt)),
                    path_i1=os.path.normpath(os.path.join(base, p1)),
                    mos=mos,
                    path_ref=ref,
                )
            )
        except ManifestError as exc:
            raise ManifestError(f"manifest {path} row {lineno}: {exc}") from exc
    try:
        return DatasetManifest(records)
    except ManifestError as exc:
        raise ManifestError(f"manifest {path}: {exc}") from exc


def write_manifest(manifest, path):
    """Write a manifest CSV, relativizing paths against the target directory.

    Loading the written file from the same location reproduces the records
    exactly; missing mos/path_ref values become empty cells.
    """
    base = os.path.dirname(os.path.abspath(path))
    any_mos = any(r.mos is not None for r in manifest.records)
    any_ref = any(r.path_ref is not None for r in manifest.records)
    header = list(MANIFEST_COLUMNS)
    if any_mos:
        header.append("mos")
    if any_ref:
        header.append("path_ref")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in manifest.records:
            row = [
                r.id,
                os.path.relpath(r.path_i0, base),
                os.path.relpath(r.path_it, base),
                os.path.relpath(r.path_i1, base),
            ]
            if any_mos:
                row.append(repr(r.mos) if r.mos is not None else "")
            if any_ref:
                row.append(os.path.relpath(r.path_ref, base) if r.path_ref else "")
            writer.writerow(row)


def train_size(n, fraction):
    """Number of training records: fraction of n, rounded half up."""
    return int(math.floor(fraction * n + 0.5))


def split_dataset(manifest, cfg, repeat_index):
    """Split a manifest into disjoint, jointly exhaustive train/test parts.

    Pure function of (record order, cfg.seed, repeat_index): indices are
    shuffled by a splitmix64 stream seeded with seed + repeat_index, the
    first round(train_fraction * N) shuffled indices form the train side,
    and each side is re-sorted into manifest order.
    """
    n = len(manifest)
    if n == 0:
        raise ManifestError("cannot split an empty manifest")
    if not (0 <= repeat_index < cfg.repeats):
        raise InputError(
            f"repeat_index {repeat_index} outside [0, {cfg.repeats})"
        )
    order = list(range(n))
    SplitMix64(derive_seed(cfg.seed, repeat_index)).shuffle(order)
    k = train_size(n, cfg.train_fraction)
    train_idx = sorted(order[:k])
    test_idx = sorted(order[k:])
    recs = manifest.records
    return (
        DatasetManifest([recs[i] for i in train_idx]),
        DatasetManifest([recs[i] for i in test_idx]),
    )
