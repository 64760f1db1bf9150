"""Exception types shared across the package.

The CLI maps these onto process exit codes; library callers can catch the
base class to handle anything podsketch raises deliberately.
"""


class PodsketchError(Exception):
    """Base class for errors raised on purpose by this package."""


class ParameterError(PodsketchError):
    """A parameter is outside its documented domain (CLI exit code 2)."""


class FormatError(PodsketchError):
    """A file could not be parsed as PODM/PODF/CSV (CLI exit code 3)."""


class DegenerateDistributionError(PodsketchError):
    """All candidate weights vanish, so no distribution exists (exit code 4)."""
