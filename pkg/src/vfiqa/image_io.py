"""PNG decoding and backbone input preparation.

Frames enter as 8-bit or 16-bit PNG files and leave as [0, 1] float32
arrays. The backbone consumes a padded, channel-standardized variant; the
raw frame itself is kept as the zeroth feature stage, so both forms travel
together through the pipeline.
"""

import os

import cv2
import numpy as np

from .core import Frame
from .errors import ImageIOError

# Channel statistics the imported backbone was trained with.
CHANNEL_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
CHANNEL_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

PAD_MULTIPLE = 32


def load_frame(path):
    """Decode a PNG file into a Frame.

    Intensities are scaled to [0, 1] by the bit-depth maximum (255 or
    65535), channels reordered to RGB, alpha discarded. Images smaller than
    32x32 are rejected.
    """
    if not os.path.isfile(path):
        raise ImageIOError(f"image not found: {path}")
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageIOError(f"cannot decode image: {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageIOError(f"{path}: unsupported sample type {raw.dtype}; need 8- or 16-bit")
    if raw.ndim == 2:
        raw = raw[:, :, None].repeat(3, axis=2)
    if raw.shape[2] == 4:
        raw = raw[:, :, :3]
    if raw.shape[2] != 3:
        raise ImageIOError(f"{path}: expected 1, 3, or 4 channels, got {raw.shape[2]}")
    if raw.shape[0] < 32 or raw.shape[1] < 32:
        raise ImageIOError(
            f"{path}: image {raw.shape[1]}x{raw.shape[0]} is below the 32x32 minimum"
        )
    rgb = raw[:, :, ::-1]  # decoder yields BGR order
    data = (rgb.astype(np.float32) / scale).transpose(2, 0, 1)
    try:
        return Frame(np.ascontiguousarray(data))
    except Exception as exc:
        raise ImageIOError(f"{path}: {exc}") from exc


def _next_multiple(n, m):
    return ((n + m - 1) // m) * m


def to_model_input(frame):
    """Prepare a frame for the convolutional backbone.

    Reflect-pads the bottom and right edges until both dimensions are
    multiples of 32 (five stride-2 stages need the divisibility), then
    standardizes each channel as (x - mean) / std with the channel
    statistics above. The original content occupies the top-left region
    unchanged before standardization.
    """
    data = frame.data
    h, w = data.shape[1], data.shape[2]
    ph = _next_multiple(h, PAD_MULTIPLE) - h
    pw = _next_multiple(w, PAD_MULTIPLE) - w
    if ph or pw:
        # mirror without repeating the edge row/column; h, w >= 32 > pad
        data = np.pad(data, ((0, 0), (0, ph), (0, pw)), mode="reflect")
    out = (data - CHANNEL_MEAN[:, None, None]) / CHANNEL_STD[:, None, None]
    return np.ascontiguousarray(out, dtype=np.float32)
