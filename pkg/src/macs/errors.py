"""Exception taxonomy shared across the package."""


class MacsError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MacsError):
    """Invalid configuration value or inconsistent config combination."""


class DimensionError(MacsError):
    """Vector or batch dimension does not match the declared contract."""


class ActionBoundsError(MacsError):
    """Action element outside the [-1, 1] action box."""


class InvalidReward(MacsError):
    """Non-finite reward value."""


class UsageError(MacsError):
    """Operation called out of protocol order (e.g. step before reset)."""


class InsufficientData(MacsError):
    """Not enough stored samples to satisfy the request."""


class SupportError(MacsError):
    """KL divergence undefined: q has a zero where p has mass."""


class NumericsError(MacsError):
    """Non-finite value encountered during optimization."""


class StateMismatch(MacsError):
    """Environment is not positioned at the state the caller asserted."""


class ExpertTooWeak(MacsError):
    """Candidate expert policy failed the qualification threshold."""


class ParseError(MacsError):
    """Malformed ratings record; message names the offending line."""


class EmptyDataset(MacsError):
    """Ratings source contained no records."""


class RangeError(MacsError):
    """Rating value outside the 5-star scale."""


class VersionError(MacsError):
    """Checkpoint written by an incompatible format version."""


class CorruptCheckpoint(MacsError):
    """Checkpoint bytes fail structural validation."""
