"""PNG fixture writer shared across test modules."""

import cv2
import numpy as np


def write_png(path, data):
    """Save a (3, H, W) float array in [0, 1] as an 8-bit PNG."""
    rgb = np.round(np.asarray(data).transpose(1, 2, 0) * 255.0).astype(np.uint8)
    ok = cv2.imwrite(str(path), rgb[:, :, ::-1])
    assert ok, f"failed to write {path}"
