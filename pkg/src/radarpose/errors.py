"""Exception types that map onto the CLI exit codes."""


class RadarPoseError(Exception):
    """Base class for errors raised by this package."""


class UsageError(RadarPoseError):
    """Bad arguments or configuration (CLI exit code 1)."""


class DataError(RadarPoseError):
    """Malformed or inconsistent data files (CLI exit code 2)."""


class NumericalError(RadarPoseError):
    """Non-finite values encountered during computation (CLI exit code 3)."""
