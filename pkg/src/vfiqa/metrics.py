"""Evaluation criteria, full-reference baselines, and the split protocol.

Correlations treat constant input as an error rather than zero: a constant
predictor is a degenerate model and silently reporting 0 would bury it.
PLCC and RMSE are computed both on raw predictions and after a fitted
four-parameter logistic mapping; the mapped values are the headline, the
raw ones travel alongside.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import DatasetManifest, split_dataset
from .errors import InputError, ManifestError, NumericError
from .rng import derive_seed
from .trainer import precompute_similarities, train

LOGISTIC_MAX_ITERATIONS = 200

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2

# ITU-R BT.601 luma coefficients
_LUMA = np.array([0.299, 0.587, 0.114])


def _as_pair(x, y, min_len=2):
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or xa.shape != ya.shape:
        raise InputError(f"inputs must be equal-length vectors, got {xa.shape} vs {ya.shape}")
    if xa.size < min_len:
        raise InputError(f"need at least {min_len} values, got {xa.size}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise NumericError("non-finite values in metric inputs")
    return xa, ya


def _reject_constant(v, label):
    if np.all(v == v[0]):
        raise NumericError(
            f"correlation undefined: {label} is constant ({v[0]!r} repeated)"
        )


def _midranks(v):
    """Fractional ranks, ties averaged; rank 1 is the smallest value."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def plcc(x, y):
    """Pearson product-moment correlation."""
    xa, ya = _as_pair(x, y)
    _reject_constant(xa, "first input")
    _reject_constant(ya, "second input")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    return float((dx @ dy) / math.sqrt((dx @ dx) * (dy @ dy)))


def srcc(x, y):
    """Spearman rank correlation: Pearson correlation of midranks."""
    xa, ya = _as_pair(x, y)
    _reject_constant(xa, "first input")
    _reject_constant(ya, "second input")
    return plcc(_midranks(xa), _midranks(ya))


def _tie_pairs(v):
    _, counts = np.unique(v, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def krcc(x, y):
    """Kendall rank correlation, tau-b (tie corrected in both arguments)."""
    xa, ya = _as_pair(x, y)
    _reject_constant(xa, "first input")
    _reject_constant(ya, "second input")
    n = xa.size
    dx = np.sign(xa[:, None] - xa[None, :])
    dy = np.sign(ya[:, None] - ya[None, :])
    iu = np.triu_indices(n, 1)
    concordance = float(np.sum(dx[iu] * dy[iu]))
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(xa)
    n2 = _tie_pairs(ya)
    return concordance / math.sqrt((n0 - n1) * (n0 - n2))


def rmse(x, y):
    """Root mean squared difference."""
    xa, ya = _as_pair(x, y, min_len=1)
    return float(np.sqrt(np.mean((xa - ya) ** 2)))


@dataclass(frozen=True)
class LogisticFit:
    """Fitted monotone mapping from objective scores to the label scale."""

    mapped: np.ndarray
    params: tuple
    fallback: bool
    iterations: int


def _logistic_eval(q, b):
    b1, b2, b3, b4 = b
    u = max(abs(b4), 1e-12)
    z = np.clip(-(q - b3) / u, -700.0, 700.0)  # keep exp inside float range
    s = 1.0 / (1.0 + np.exp(z))
    return (b1 - b2) * s + b2


def logistic_map(pred, mos):
    """Fit Q' = (b1 - b2) / (1 + exp(-(Q - b3)/|b4|)) + b2 to the labels.

    Gauss-Newton with step halving from the documented start
    (b1 = max(mos), b2 = min(mos), b3 = median(pred), b4 = std(pred)),
    stopping early once no step improves the fit. Falls back to the raw
    predictions, with the fallback flag set, when the fitted curve does not
    beat the raw predictions in squared error (e.g. scores already on the
    label scale); mapped error therefore never exceeds raw error. Hitting
    the iteration cap is not a failure: on genuinely affine data the best
    parameters recede toward an ever-flatter curve while the fit keeps
    improving, and the mapping achieved by the cap is already tight.
    """
    q, m = _as_pair(pred, mos, min_len=5)
    _reject_constant(q, "predictions")
    b = np.array([np.max(m), np.min(m), np.median(q), np.std(q)], dtype=np.float64)
    loss = float(np.mean((_logistic_eval(q, b) - m) ** 2))
    it = 0
    for it in range(1, LOGISTIC_MAX_ITERATIONS + 1):
        b1, b2, b3, b4 = b
        u = max(abs(b4), 1e-12)
        z = np.clip(-(q - b3) / u, -700.0, 700.0)
        s = 1.0 / (1.0 + np.exp(z))
        bell = s * (1.0 - s)
        jac = np.stack(
            [
                s,
                1.0 - s,
                -(b1 - b2) * bell / u,
                -(b1 - b2) * bell * (q - b3) / (u * u) * np.sign(b4),
            ],
            axis=1,
        )
        resid = _logistic_eval(q, b) - m
        grad = jac.T @ resid
        hess = jac.T @ jac + 1e-12 * np.eye(4)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break  # flat direction; nothing further to gain
        accepted = False
        t = 1.0
        for _ in range(30):
            cand = b - t * step
            cand_loss = float(np.mean((_logistic_eval(q, cand) - m) ** 2))
            if cand_loss < loss:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break  # no descent direction left at this scale
        improved = loss - cand_loss
        b, loss = cand, cand_loss
        if improved < 1e-15 * max(loss, 1e-30):
            break
    raw_loss = float(np.mean((q - m) ** 2))
    if not math.isfinite(loss) or loss > raw_loss:
        return LogisticFit(mapped=q.copy(), params=tuple(b), fallback=True, iterations=it)
    return LogisticFit(
        mapped=_logistic_eval(q, b), params=tuple(b), fallback=False, iterations=it
    )


def psnr(a, b):
    """Peak signal-to-noise ratio in dB over all channels on [0, 1] range.

    Identical frames yield math.inf, the distinguished "identical" value.
    """
    if a.data.shape != b.data.shape:
        raise InputError(
            f"psnr: frame dimensions differ ({a.width}x{a.height} vs {b.width}x{b.height})"
        )
    mse = float(np.mean((a.data.astype(np.float64) - b.data.astype(np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window(n, sigma):
    # 1-D profile with unit sum; separable use gives a unit-sum 2-D window
    x = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(img, g):
    """Separable valid-mode correlation with a 1-D window along both axes."""
    t = np.lib.stride_tricks.sliding_window_view(img, g.size, axis=0) @ g
    return np.lib.stride_tricks.sliding_window_view(t, g.size, axis=1) @ g


def ssim(a, b):
    """Mean local structural similarity on the luminance channel.

    11x11 Gaussian window (sigma 1.5, unit sum), valid-window statistics,
    stabilizers C1 = 0.01^2 and C2 = 0.03^2 on the [0, 1] range. Identical
    frames score exactly 1.
    """
    if a.data.shape != b.data.shape:
        raise InputError(
            f"ssim: frame dimensions differ ({a.width}x{a.height} vs {b.width}x{b.height})"
        )
    if min(a.height, a.width) < SSIM_WINDOW:
        raise InputError(f"ssim: frames must be at least {SSIM_WINDOW} pixels per side")
    ya = np.tensordot(_LUMA, a.data.astype(np.float64), axes=1)
    yb = np.tensordot(_LUMA, b.data.astype(np.float64), axes=1)
    g = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    mu_a = _filter_valid(ya, g)
    mu_b = _filter_valid(yb, g)
    var_a = _filter_valid(ya * ya, g) - mu_a * mu_a
    var_b = _filter_valid(yb * yb, g) - mu_b * mu_b
    cov = _filter_valid(ya * yb, g) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class RepeatResult:
    """Criteria for one split repeat; pred/mos retained for scatter export."""

    index: int
    seed: int
    n_train: int
    n_test: int
    srcc: float
    krcc: float
    plcc: float
    rmse: float
    plcc_raw: float
    rmse_raw: float
    logistic_params: tuple
    logistic_fallback: bool
    pred: np.ndarray
    mos: np.ndarray


@dataclass(frozen=True)
class EvalReport:
    """Per-repeat criteria plus their arithmetic means."""

    method: str
    mode: str
    backbone: str
    split: object
    repeats: tuple
    averages: dict


AVERAGED_FIELDS = ("srcc", "krcc", "plcc", "rmse", "plcc_raw", "rmse_raw")


def evaluate_protocol(manifest, model, backbone, split_cfg, train_cfg, mode="both", method=None):
    """Repeated-split training and evaluation.

    Records are first put in canonical id order so the report is invariant
    to manifest permutation; similarity features are computed once for the
    whole manifest and reused across repeats. For each repeat the training
    side fits fresh weights (initialized from `model` when given, else from
    train_cfg) and the held-out side is scored; SRCC/KRCC plus mapped and
    raw PLCC/RMSE are reported per repeat and averaged.
    """
    if not manifest.has_mos:
        raise ManifestError("evaluation needs a mos label on every record")
    canonical = DatasetManifest(sorted(manifest.records, key=lambda r: r.id))
    table = precompute_similarities(canonical, backbone, mode=mode)
    results = []
    for r in range(split_cfg.repeats):
        try:
            results.append(
                _run_repeat(canonical, table, model, split_cfg, train_cfg, r)
            )
        except (InputError, NumericError) as exc:
            raise type(exc)(f"repeat {r}: {exc}") from exc
    averages = {
        f: float(np.mean([getattr(res, f) for res in results])) for f in AVERAGED_FIELDS
    }
    if method is None:
        method = "coherence" if mode == "both" else "coherence-single"
    return EvalReport(
        method=method,
        mode=mode,
        backbone=backbone.arch,
        split=split_cfg,
        repeats=tuple(results),
        averages=averages,
    )


def _run_repeat(manifest, table, model, split_cfg, train_cfg, repeat_index):
    train_man, test_man = split_dataset(manifest, split_cfg, repeat_index)
    train_table = table.select([rec.id for rec in train_man.records])
    fitted = train(train_table, train_cfg, init=model)
    test_table = table.select([rec.id for rec in test_man.records])
    theta = np.concatenate([fitted.alpha, fitted.beta])
    pred = test_table.features @ theta
    mos = test_table.mos
    fit = logistic_map(pred, mos)
    return RepeatResult(
        index=repeat_index,
        seed=derive_seed(split_cfg.seed, repeat_index),
        n_train=len(train_man),
        n_test=len(test_man),
        srcc=srcc(pred, mos),
        krcc=krcc(pred, mos),
        plcc=plcc(fit.mapped, mos),
        rmse=rmse(fit.mapped, mos),
        plcc_raw=plcc(pred, mos),
        rmse_raw=rmse(pred, mos),
        logistic_params=fit.params,
        logistic_fallback=fit.fallback,
        pred=pred,
        mos=mos.copy(),
    )
