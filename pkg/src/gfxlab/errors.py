"""Exception hierarchy. The CLI maps these onto distinct exit codes."""


class GfxError(Exception):
    """Base class for gfxlab failures."""


class UsageError(GfxError):
    """Bad arguments or invalid settings (exit code 2)."""


class InvalidSettingsError(UsageError):
    """Settings vector does not match the effect's control inventory."""


class ConditioningError(UsageError):
    """Class-conditioned network called without class ids."""


class StateError(GfxError):
    """Operation called out of order (e.g. backward before forward)."""


class IOFailure(GfxError):
    """File missing/unreadable or wrong format (exit code 3)."""


class NumericalError(GfxError):
    """Non-finite loss, impossible normalization, etc. (exit code 4)."""


class ChecksumMismatch(GfxError):
    """Feature pipeline differs from the one a checkpoint was trained with."""
