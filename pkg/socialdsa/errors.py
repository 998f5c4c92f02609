"""Exception hierarchy shared by the simulator modules and the command line."""

from typing import Optional


class SocialDSAError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigurationError(SocialDSAError, ValueError):
    """
    A configuration value violates an invariant.

    Attributes:
        key: Config key path such as ``[channels] lambda``; None when the
            problem is not tied to a single key
        reason: Human-readable explanation
    """

    def __init__(self, key: Optional[str], reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}" if key else reason)


class EdgeListParseError(SocialDSAError, ValueError):
    """A social-graph edge list contains a malformed line."""

    def __init__(self, line_number: int, line: str, reason: str):
        self.line_number = line_number
        self.line = line
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}: {line.strip()!r}")


class ConsistencyError(SocialDSAError, RuntimeError):
    """The simulation reached a state the model rules out (a bug, not bad input)."""
