"""Exception hierarchy shared by every layer of the engine."""


class TmsError(Exception):
    """Base class for all engine errors."""


class InvalidParams(TmsError, ValueError):
    pass


class OutOfRange(TmsError, ValueError):
    pass


class SelfAssertion(TmsError, ValueError):
    pass


class DuplicateDevice(TmsError):
    pass


class DuplicateUser(TmsError):
    pass


class UnknownDevice(TmsError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class UnknownUser(TmsError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class NegativeElapsed(TmsError, ValueError):
    pass


class FeedParseError(TmsError, ValueError):
    pass


class UnknownAttackVector(FeedParseError):
    pass


class ScenarioError(TmsError, ValueError):
    pass


class EventParseError(TmsError, ValueError):
    """A line of an event stream could not be decoded into a SecurityEvent."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ReorderedEvent(TmsError):
    pass


class MalformedPayload(TmsError, ValueError):
    pass


class SnapshotFormatError(TmsError, ValueError):
    pass


class ReplayError(TmsError):
    """Wraps an engine error raised while folding a stream, with its position."""

    def __init__(self, index: int, line: int | None, cause: TmsError):
        self.index = index
        self.line = line
        self.cause = cause
        where = f"event #{index}" + (f" (line {line})" if line is not None else "")
        super().__init__(f"{where}: {type(cause).__name__}: {cause}")
