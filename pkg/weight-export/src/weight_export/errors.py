"""Error type for the exporter."""


class ExportError(Exception):
    """Raised for unusable model ids, wrong architectures, bad files."""
