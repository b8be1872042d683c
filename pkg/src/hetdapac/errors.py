"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so the split matters:
configuration problems are not protocol failures, and an audit that
refuses to enumerate is not an audit that failed.
"""


class ConfigError(ValueError):
    """Parameters or configuration that the protocols cannot run with."""


class DivisibilityError(ConfigError):
    """Message length incompatible with the sub-packet layout.

    Carries the smallest length that would have worked so callers can
    report it instead of making the user guess.
    """

    def __init__(self, message: str, minimal_length: int):
        super().__init__(f"{message} (smallest valid length: {minimal_length})")
        self.minimal_length = minimal_length


class AccessRefusal(Exception):
    """A query referenced a message outside the server's accessible set."""


class EnumerationRefusal(Exception):
    """An exact audit would need more enumeration than the configured cap."""

    def __init__(self, message: str, size_estimate: int):
        super().__init__(f"{message} (estimated enumeration size: {size_estimate})")
        self.size_estimate = size_estimate


class RetrievalFailure(Exception):
    """Decoding failed past the retry cap."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts
