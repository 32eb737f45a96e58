"""Semantic exception hierarchy shared across triggerlab modules."""


class TriggerLabError(Exception):
    """Base class for all triggerlab errors."""


class DomainError(TriggerLabError):
    """An argument is outside the documented domain of an operation."""


class SizeError(TriggerLabError):
    """An exact-enumeration guard was exceeded."""


class AccessViolation(TriggerLabError):
    """An evaluator touched a capability its access model forbids."""


class ConfigError(TriggerLabError):
    """An experiment config failed to parse or validate."""


class PlotError(TriggerLabError):
    """Plot emission was asked for an impossible chart."""
