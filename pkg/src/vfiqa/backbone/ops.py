"""Convolutional inference primitives.

Feature maps are float32 arrays shaped (channels, height, width). All
arithmetic stays in float32; convolution lowers each window into a row and
runs a single matrix product per call, which keeps large inputs inside BLAS.
"""

import numpy as np

from ..errors import InputError

BN_EPS = 1e-5


def conv2d(x, kernel, stride=1, padding=0):
    """Cross-correlate x with a (C_out, C_in, kh, kw) kernel.

    Zero padding on all sides; output spatial dims follow
    floor((H + 2p - k) / stride) + 1. No kernel flip.
    """
    cout, cin, kh, kw = kernel.shape
    if x.shape[0] != cin:
        raise InputError(
            f"conv2d: input has {x.shape[0]} channels, kernel expects {cin}"
        )
    if padding:
        x = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]  # (C_in, Ho, Wo, kh, kw)
    _, ho, wo = windows.shape[:3]
    cols = windows.transpose(1, 2, 0, 3, 4).reshape(ho * wo, cin * kh * kw)
    out = cols @ kernel.reshape(cout, cin * kh * kw).T
    return np.ascontiguousarray(out.T.reshape(cout, ho, wo), dtype=np.float32)


def batch_norm_inference(x, mean, var, gamma, beta, eps=BN_EPS):
    """Normalize each channel with frozen statistics.

    y = gamma * (x - mean) / sqrt(var + eps) + beta, parameters given per
    channel.
    """
    c = x.shape[0]
    for name, p in (("mean", mean), ("var", var), ("gamma", gamma), ("beta", beta)):
        if np.asarray(p).shape != (c,):
            raise InputError(
                f"batch_norm_inference: {name} has shape {np.asarray(p).shape}, "
                f"expected ({c},)"
            )
    mean = np.asarray(mean, dtype=np.float32)[:, None, None]
    var = np.asarray(var, dtype=np.float32)[:, None, None]
    gamma = np.asarray(gamma, dtype=np.float32)[:, None, None]
    beta = np.asarray(beta, dtype=np.float32)[:, None, None]
    inv = gamma / np.sqrt(var + np.float32(eps))
    return ((x - mean) * inv + beta).astype(np.float32)


def fold_batch_norm(mean, var, gamma, beta, eps=BN_EPS):
    """Collapse frozen batch norm into per-channel (scale, shift).

    y = x * scale + shift is algebraically the inference normalization;
    folding happens once per weight table instead of per pixel.
    """
    mean = np.asarray(mean, dtype=np.float32)
    var = np.asarray(var, dtype=np.float32)
    gamma = np.asarray(gamma, dtype=np.float32)
    beta = np.asarray(beta, dtype=np.float32)
    scale = gamma / np.sqrt(var + np.float32(eps))
    return scale, beta - mean * scale


def max_pool(x, k=3, stride=2, padding=1):
    """Per-window maximum; padded positions never win (negative infinity)."""
    if padding:
        x = np.pad(
            x,
            ((0, 0), (padding, padding), (padding, padding)),
            constant_values=-np.inf,
        )
    windows = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]
    return np.ascontiguousarray(windows.max(axis=(3, 4)), dtype=np.float32)


def relu(x):
    return np.maximum(x, np.float32(0.0))
