"""Shared exception types for the bench."""


class ConfigurationError(ValueError):
    """A parameter set or rate combination that no generator/channel can honor."""


class IllegalState(RuntimeError):
    """An operation requested from a session state that does not allow it."""


class RoleConflict(RuntimeError):
    """A device role assignment violating the one-transmitter/one-monitor rule."""


class UnknownWaveform(KeyError):
    """A registry id that is not registered."""


class CompatibilityError(RuntimeError):
    """Descriptor category does not match the bound implementation's chain."""


class DuplicateError(RuntimeError):
    """Registering a waveform name that already exists."""


class ParseError(ValueError):
    """A descriptor or config document that is not syntactically valid."""


class InsufficientData(ValueError):
    """Not enough samples for a statistically meaningful estimate."""
