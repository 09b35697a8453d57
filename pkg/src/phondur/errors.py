"""Exception types shared across the package.

All data-level failures derive from PhondurError so the CLI can map them to
a single exit code while config/usage problems stay separate.
"""


class PhondurError(Exception):
    """Base class for data errors (bad input files, corrupted caches, ...)."""


class ParseError(PhondurError):
    """Malformed input file. Carries source name and line number when known."""

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        prefix = ""
        if source is not None:
            prefix = f"{source}:"
        if line is not None:
            prefix += f"{line}:"
        if prefix:
            prefix += " "
        super().__init__(prefix + message)


class UnknownLabelError(PhondurError):
    """A phone label that the inventory neither maps nor excludes."""


class DegenerateProfileError(PhondurError):
    """A duration profile that collapses to the zero vector under normalization."""


class CacheVersionError(PhondurError):
    """A binary cache written by an incompatible version of this package."""


class ConfigError(Exception):
    """Bad run configuration (missing paths, unknown keys, invalid values)."""
