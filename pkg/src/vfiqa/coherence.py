"""Feature-coherence similarity scoring.

An interpolated frame is compared against each neighbor frame through
global per-channel statistics of every feature stage. Two similarities are
formed per channel,

    luminance  (mu_a * mu_b + c1) / (mu_a^2 + mu_b^2 + c1)
    structure  (cov_ab + c2) / (var_a + var_b + c2)

and the score is a learned per-stage weighting of the channel-averaged
products of the two neighbor comparisons. Both similarities reach 1 only
when the compared statistics vanish; with nonzero identical statistics the
value stays strictly below 1, so the constants act purely as stabilizers,
not as equalizers.

Statistics accumulate in float64; feature maps remain float32.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ModelError

C1 = 1e-6
C2 = 1e-6

N_STAGES = 6

SCORE_MODES = ("both", "left_only")


@dataclass(frozen=True)
class StageStats:
    """Per-channel global mean and population variance of one feature map."""

    mu: np.ndarray
    var: np.ndarray


@dataclass(frozen=True)
class PairStats:
    """Per-channel global population covariance between two feature maps."""

    cov: np.ndarray


@dataclass(frozen=True)
class ModelWeights:
    """Learned per-stage weights for the luminance and structure terms."""

    alpha: np.ndarray
    beta: np.ndarray
    backbone: str = "reference"

    def __post_init__(self):
        for name, v in (("alpha", self.alpha), ("beta", self.beta)):
            arr = np.asarray(v, dtype=np.float64)
            if arr.shape != (N_STAGES,):
                raise ModelError(f"{name} must hold {N_STAGES} values, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ModelError(f"{name} contains non-finite values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class SimilarityFeatures:
    """Per-stage channel-averaged similarity terms for one triplet.

    l_product/s_product hold the products of the two neighbor-side
    similarities (the regular mode); l_single/s_single hold the first
    neighbor's similarities alone, backing the single-pipeline mode.
    """

    l_product: np.ndarray
    s_product: np.ndarray
    l_single: np.ndarray
    s_single: np.ndarray

    def __post_init__(self):
        for name in ("l_product", "s_product", "l_single", "s_single"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (N_STAGES,):
                raise InputError(f"{name} must hold {N_STAGES} values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def values(self, mode):
        """The 12-vector (luminance terms, structure terms) for a mode."""
        if mode == "both":
            return np.concatenate([self.l_product, self.s_product])
        if mode == "left_only":
            return np.concatenate([self.l_single, self.s_single])
        raise InputError(f"unknown scoring mode {mode!r}; choose from {SCORE_MODES}")


def stage_stats(fmap):
    """Global per-channel mean and population variance of a feature map."""
    a = np.asarray(fmap)
    if a.ndim != 3 or a.size == 0:
        raise InputError(f"feature map must be non-empty (C, H, W), got shape {a.shape}")
    a = a.astype(np.float64, copy=False).reshape(a.shape[0], -1)
    mu = a.mean(axis=1)
    var = np.mean((a - mu[:, None]) ** 2, axis=1)
    return StageStats(mu=mu, var=var)


def pair_cov(a, b):
    """Global per-channel population covariance between same-shape maps."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InputError(f"covariance needs matching shapes, got {a.shape} vs {b.shape}")
    a = a.astype(np.float64, copy=False).reshape(a.shape[0], -1)
    b = b.astype(np.float64, copy=False).reshape(b.shape[0], -1)
    da = a - a.mean(axis=1)[:, None]
    db = b - b.mean(axis=1)[:, None]
    return PairStats(cov=np.mean(da * db, axis=1))


def luminance_similarity(s0, st):
    """Per-channel mean agreement between two stages' statistics."""
    if s0.mu.shape != st.mu.shape:
        raise InputError("luminance_similarity: channel counts differ")
    return (s0.mu * st.mu + C1) / (s0.mu**2 + st.mu**2 + C1)


def structure_similarity(s0, st, pair):
    """Per-channel covariance agreement between two stages' statistics."""
    if s0.var.shape != st.var.shape or s0.var.shape != pair.cov.shape:
        raise InputError("structure_similarity: channel counts differ")
    return (pair.cov + C2) / (s0.var + st.var + C2)


def similarity_features(f0, ft, f1):
    """Stage-wise similarities of an interpolated stack against both neighbors.

    For each stage the interpolated frame's map is compared with the same
    stage of each neighbor; the per-channel products of the two luminance
    (and structure) similarities are channel-averaged into one value per
    stage. Swapping the neighbor stacks leaves the products unchanged.
    """
    lp = np.empty(N_STAGES)
    sp = np.empty(N_STAGES)
    ls = np.empty(N_STAGES)
    ss = np.empty(N_STAGES)
    for i in range(N_STAGES):
        m0, mt, m1 = f0[i], ft[i], f1[i]
        if m0.shape != mt.shape or m1.shape != mt.shape:
            raise InputError(
                f"stage {i}: stack shapes differ "
                f"({m0.shape}, {mt.shape}, {m1.shape})"
            )
        st_t = stage_stats(mt)
        st_0 = stage_stats(m0)
        st_1 = stage_stats(m1)
        sl0 = luminance_similarity(st_0, st_t)
        sl1 = luminance_similarity(st_1, st_t)
        ss0 = structure_similarity(st_0, st_t, pair_cov(m0, mt))
        ss1 = structure_similarity(st_1, st_t, pair_cov(m1, mt))
        lp[i] = np.mean(sl0 * sl1)
        sp[i] = np.mean(ss0 * ss1)
        ls[i] = np.mean(sl0)
        ss[i] = np.mean(ss0)
    return SimilarityFeatures(l_product=lp, s_product=sp, l_single=ls, s_single=ss)


def coherence_score(feat, weights, mode="both"):
    """Weighted sum of the per-stage similarity terms.

    Linear in the weights: score = sum_i alpha_i * L_i + beta_i * S_i,
    where (L, S) are the products in mode "both" and the first neighbor's
    plain similarities in mode "left_only".
    """
    v = feat.values(mode)
    return float(np.dot(weights.alpha, v[:N_STAGES]) + np.dot(weights.beta, v[N_STAGES:]))


def save_model_weights(weights, path):
    """Persist ModelWeights as a small JSON document."""
    doc = {
        "alpha": [float(a) for a in weights.alpha],
        "beta": [float(b) for b in weights.beta],
        "backbone": weights.backbone,
        "c1": C1,
        "c2": C2,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model_weights(path):
    """Load and validate a ModelWeights JSON document.

    The stored c1/c2 are provenance only; scoring always uses the package
    constants. Lengths and finiteness are enforced here.
    """
    if not os.path.isfile(path):
        raise ModelError(f"model file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot parse model file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelError(f"model file {path}: expected a JSON object")
    for key in ("alpha", "beta"):
        if key not in doc:
            raise ModelError(f"model file {path}: missing {key!r}")
    for key in ("c1", "c2"):
        if key in doc and not (
            isinstance(doc[key], (int, float)) and math.isfinite(doc[key])
        ):
            raise ModelError(f"model file {path}: {key} must be a finite number")
    try:
        return ModelWeights(
            alpha=np.asarray(doc["alpha"], dtype=np.float64),
            beta=np.asarray(doc["beta"], dtype=np.float64),
            backbone=str(doc.get("backbone", "reference")),
        )
    except (ModelError, ValueError) as exc:
        raise ModelError(f"model file {path}: {exc}") from exc
