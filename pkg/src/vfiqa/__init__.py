"""No-reference quality assessment for interpolated video frames.

A frame synthesized between two originals is scored from the coherence of
its multi-stage convolutional features with each neighbor's features, with
per-stage weights fitted to subjective opinion scores. The package also
ships the full evaluation harness: deterministic splits, rank/linear
correlation criteria, logistic mapping, and PSNR/SSIM reference baselines.

Submodules import the array stack on demand; attribute access below is
lazy so the command-line tool can pin thread settings first.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "backbone",
    "cli",
    "coherence",
    "core",
    "errors",
    "image_io",
    "metrics",
    "report",
    "rng",
    "trainer",
)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
