"""Backbone exporter: weight container, fixture image, golden activations.

Reads a standard five-stage bottleneck network from the model zoo (or
synthesizes a seeded stand-in offline) and emits the artifacts the scoring
engine imports: a VFIW weight file under the documented tensor naming, a
deterministic 224x224 fixture PNG, per-stage golden activations, and a
checksummed metadata JSON.
"""

from .bundle import create_bundle, export
from .errors import ExportError
from .formats import read_golden, read_vfiw

__all__ = [
    "ExportError",
    "create_bundle",
    "export",
    "read_golden",
    "read_vfiw",
]
