"""Exception types shared across the simulator."""


class StickyManetError(Exception):
    """Base class for all errors raised by this package."""


class CapacityExceeded(StickyManetError):
    """A value does not fit the fixed-width wire encoding."""


class MalformedPolicy(StickyManetError):
    """A policy block or packet frame cannot be decoded."""


class UnknownMessage(StickyManetError):
    """A node was asked to forward a message it never received."""


class InvalidScenario(StickyManetError):
    """A scenario failed validation; the message states the reason."""
