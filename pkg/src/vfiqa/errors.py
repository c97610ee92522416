"""Exception taxonomy shared by the library and the command-line tool.

Each error family carries the process exit code the CLI maps it to, so
command implementations can raise from anywhere in the pipeline and let a
single handler translate.
"""


class VfiqaError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class InputError(VfiqaError):
    """Bad user-supplied data: files, manifests, images, argument values."""

    exit_code = 2


class ManifestError(InputError):
    """Dataset manifest missing, malformed, or violating its invariants."""


class ImageIOError(InputError):
    """Image file unreadable, undecodable, or outside the supported contract."""


class WeightsError(VfiqaError):
    """Weight file or model file invalid: format, completeness, shapes."""

    exit_code = 3


class ModelError(WeightsError):
    """Learned-weights document invalid (lengths, finiteness, schema)."""


class NumericError(VfiqaError):
    """Computation cannot proceed: non-finite loss, degenerate statistics."""

    exit_code = 4
