"""Weight fitting against opinion scores.

The score is linear in its 12 weights, so minimizing mean squared error is
a convex problem with a closed-form solution; the adaptive-moment loop is
the production path (it follows the published schedule) and the normal
equations solver is the oracle it is verified against. Similarity features
are cached in a table first so training never re-runs the backbone.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np

from .coherence import ModelWeights, N_STAGES, similarity_features
from .errors import InputError, ManifestError, NumericError
from .image_io import load_frame, to_model_input

RIDGE = 1e-9

TABLE_COLUMNS = (
    ("id",)
    + tuple(f"l{i}" for i in range(N_STAGES))
    + tuple(f"s{i}" for i in range(N_STAGES))
    + ("mos",)
)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer schedule and initialization.

    The learning rate starts at initial_lr and is halved every
    lr_halving_interval iterations; one iteration is one full-batch update.
    seed is reserved for future stochastic variants; the full-batch path
    draws no randomness.
    """

    initial_lr: float = 1e-4
    lr_halving_interval: int = 50
    max_iterations: int = 500
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    init_alpha: float = 1.0 / 12.0
    init_beta: float = 1.0 / 12.0
    seed: int = 0

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise InputError(f"initial_lr must be positive, got {self.initial_lr}")
        if self.lr_halving_interval < 1:
            raise InputError(
                f"lr_halving_interval must be >= 1, got {self.lr_halving_interval}"
            )
        if self.max_iterations < 0:
            raise InputError(f"max_iterations must be >= 0, got {self.max_iterations}")
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0):
            raise InputError("adam betas must lie in [0, 1)")
        if self.adam_eps <= 0:
            raise InputError("adam_eps must be positive")


@dataclass(frozen=True)
class SimilarityTable:
    """Cached per-record similarity features and labels.

    features is (n, 12): six luminance columns then six structure columns,
    holding the values of the mode the table was computed under.
    """

    ids: tuple
    features: np.ndarray
    mos: np.ndarray
    backbone: str = "reference"
    mode: str = "both"

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        mos = np.asarray(self.mos, dtype=np.float64)
        n = len(self.ids)
        if feats.shape != (n, 2 * N_STAGES):
            raise InputError(
                f"similarity table features must be ({n}, {2 * N_STAGES}), got {feats.shape}"
            )
        if mos.shape != (n,):
            raise InputError(f"similarity table mos must be ({n},), got {mos.shape}")
        if not np.all(np.isfinite(mos)):
            raise InputError("similarity table mos contains non-finite values")
        feats.flags.writeable = False
        mos.flags.writeable = False
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "mos", mos)

    def __len__(self):
        return len(self.ids)

    def select(self, ids):
        """Sub-table for the given ids, in the given order."""
        index = {rid: i for i, rid in enumerate(self.ids)}
        try:
            rows = [index[rid] for rid in ids]
        except KeyError as exc:
            raise InputError(f"id {exc.args[0]!r} not present in similarity table") from exc
        return SimilarityTable(
            ids=tuple(ids),
            features=self.features[rows],
            mos=self.mos[rows],
            backbone=self.backbone,
            mode=self.mode,
        )


def precompute_similarities(manifest, weights, mode="both"):
    """Score every manifest record's features once, in manifest order.

    Each record's three frames must share dimensions. A record that fails
    to load aborts the run naming the record; silent skipping would bias
    every downstream statistic.
    """
    if len(manifest) == 0:
        raise ManifestError("cannot compute features for an empty manifest")
    ids = []
    rows = []
    labels = []
    for rec in manifest.records:
        if rec.mos is None:
            raise ManifestError(f"record {rec.id!r} has no mos label")
        frames = []
        for path in (rec.path_i0, rec.path_it, rec.path_i1):
            try:
                frames.append(load_frame(path))
            except InputError as exc:
                raise type(exc)(f"record {rec.id!r}: {exc}") from exc
        f0, ft, f1 = frames
        if not (f0.data.shape == ft.data.shape == f1.data.shape):
            raise InputError(
                f"record {rec.id!r}: triplet dimensions differ "
                f"({f0.width}x{f0.height}, {ft.width}x{ft.height}, {f1.width}x{f1.height})"
            )
        stacks = [
            # padding is identical across the triplet since shapes match
            _features_for(frame, weights)
            for frame in frames
        ]
        feat = similarity_features(stacks[0], stacks[1], stacks[2])
        ids.append(rec.id)
        rows.append(feat.values(mode))
        labels.append(rec.mos)
    return SimilarityTable(
        ids=tuple(ids),
        features=np.array(rows, dtype=np.float64),
        mos=np.array(labels, dtype=np.float64),
        backbone=weights.arch,
        mode=mode,
    )


def _features_for(frame, weights):
    from .backbone import extract_features

    return extract_features(to_model_input(frame), frame, weights)


def mse_loss(pred, mos):
    """Mean squared difference between predictions and labels."""
    p = np.asarray(pred, dtype=np.float64)
    m = np.asarray(mos, dtype=np.float64)
    if p.shape != m.shape or p.ndim != 1:
        raise InputError(f"mse_loss: shapes differ ({p.shape} vs {m.shape})")
    if p.size == 0:
        raise InputError("mse_loss: empty inputs")
    return float(np.mean((p - m) ** 2))


def learning_rate(cfg, iteration):
    """Schedule value at an iteration: initial_lr halved every interval."""
    return cfg.initial_lr * 2.0 ** (-(iteration // cfg.lr_halving_interval))


def train(table, cfg, on_iteration=None, init=None):
    """Fit weights by full-batch adaptive-moment descent on the MSE.

    Runs exactly cfg.max_iterations updates of the 12 weights from their
    configured initialization; the analytic gradient of the loss in the
    luminance weight of stage i is 2 * mean((pred - mos) * L_i), likewise
    for structure. Deterministic: identical table and config give
    bit-identical weights. on_iteration, when given, receives
    (iteration, lr, loss-before-update) per step; init, when given, is a
    ModelWeights whose values replace the scalar initialization.
    """
    if len(table) == 0:
        raise InputError("cannot train on an empty table")
    x = table.features
    y = table.mos
    n = len(table)
    if init is not None:
        theta = np.concatenate([init.alpha, init.beta]).astype(np.float64)
    else:
        theta = np.concatenate(
            [np.full(N_STAGES, cfg.init_alpha), np.full(N_STAGES, cfg.init_beta)]
        )
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
    for k in range(cfg.max_iterations):
        lr = learning_rate(cfg, k)
        resid = x @ theta - y
        # Overflow to inf is caught by the finiteness check below.
        with np.errstate(over="ignore"):
            loss = float(np.mean(resid**2))
        if not np.isfinite(loss):
            raise NumericError(
                f"non-finite loss {loss} at iteration {k}; weights {theta.tolist()}"
            )
        if on_iteration is not None:
            on_iteration(k, lr, loss)
        grad = 2.0 * (x.T @ resid) / n
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        m_hat = m / (1.0 - b1 ** (k + 1))
        v_hat = v / (1.0 - b2 ** (k + 1))
        theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
    return ModelWeights(
        alpha=theta[:N_STAGES], beta=theta[N_STAGES:], backbone=table.backbone
    )


def least_squares_fit(table):
    """Closed-form MSE minimizer over the 12 weights.

    Normal equations with ridge damping 1e-9, which both settles rank
    deficiency (picking the minimum-norm minimizer) and guarantees a
    solution; a least-squares fallback covers matrices the direct solve
    rejects as numerically singular.
    """
    if len(table) == 0:
        raise InputError("cannot fit an empty table")
    x = table.features
    y = table.mos
    gram = x.T @ x + RIDGE * np.eye(2 * N_STAGES)
    rhs = x.T @ y
    try:
        theta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        theta = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    return ModelWeights(
        alpha=theta[:N_STAGES], beta=theta[N_STAGES:], backbone=table.backbone
    )


def write_similarity_table(table, path):
    """Persist a table as CSV for audit and backbone-free re-training."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_COLUMNS)
        for i, rid in enumerate(table.ids):
            writer.writerow(
                [rid]
                + [repr(float(v)) for v in table.features[i]]
                + [repr(float(table.mos[i]))]
            )


def read_similarity_table(path, backbone="reference", mode="both"):
    """Load a similarity-table CSV written by write_similarity_table."""
    if not os.path.isfile(path):
        raise InputError(f"similarity table not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TABLE_COLUMNS:
        raise InputError(f"{path}: not a similarity table (bad header)")
    ids = []
    feats = []
    mos = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(TABLE_COLUMNS):
            raise InputError(
                f"{path} row {lineno}: expected {len(TABLE_COLUMNS)} fields, got {len(row)}"
            )
        try:
            values = [float(s) for s in row[1:]]
        except ValueError as exc:
            raise InputError(f"{path} row {lineno}: non-numeric value") from exc
        ids.append(row[0])
        feats.append(values[:-1])
        mos.append(values[-1])
    return SimilarityTable(
        ids=tuple(ids),
        features=np.array(feats, dtype=np.float64),
        mos=np.array(mos, dtype=np.float64),
        backbone=backbone,
        mode=mode,
    )
