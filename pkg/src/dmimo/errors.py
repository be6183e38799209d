"""Exception hierarchy used across the simulator."""


class DmimoError(Exception):
    """Base class for all simulator errors."""


class ConfigError(DmimoError, ValueError):
    """Invalid scenario configuration.

    ``field`` names the offending configuration entry (dotted path) when known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class PrecoderError(DmimoError):
    """Beamformer cannot be built (dimension infeasibility, zero channel)."""


class DegenerateChannelError(PrecoderError):
    """A channel vector or effective gain is exactly zero."""


class NumericalError(DmimoError, ArithmeticError):
    """Iterative solver failed or produced an inconsistent result."""


class InsufficientSamplesError(DmimoError, ValueError):
    """Quantile requested deeper in the tail than the sample count allows."""


class DropError(DmimoError):
    """Failure inside a Monte Carlo drop; carries the drop index."""

    def __init__(self, drop_id: int, cause: Exception):
        self.drop_id = drop_id
        self.cause = cause
        super().__init__(f"drop {drop_id}: {type(cause).__name__}: {cause}")
