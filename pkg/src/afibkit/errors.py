"""Exception types shared across the toolkit.

Every domain failure raises a subclass of :class:`AfibkitError`; the CLI maps
these to exit code 1 and prints the class name so scripted callers can match
on it.
"""


class AfibkitError(Exception):
    pass


# WFDB parsing

class MalformedHeader(AfibkitError):
    pass


class UnsupportedFormat(AfibkitError):
    pass


class TruncatedSignal(AfibkitError):
    pass


class ChecksumMismatch(AfibkitError):
    def __init__(self, channel: int, expected: int, got: int):
        super().__init__(
            f"channel {channel}: expected checksum {expected}, got {got}"
        )
        self.channel = channel
        self.expected = expected
        self.got = got


class MalformedAnnotation(AfibkitError):
    pass


# Signal preparation

class ChannelOutOfRange(AfibkitError):
    pass


class DegenerateSignal(AfibkitError):
    pass


class EmptyDataset(AfibkitError):
    pass


class SingleClass(AfibkitError):
    pass


# RR statistics

class SignalTooShort(AfibkitError):
    pass


class TooFewPeaks(AfibkitError):
    pass


# Spectrograms

class NonPowerOfTwo(AfibkitError):
    pass


class SegmentTooShort(AfibkitError):
    pass


# Neural network core

class ShapeMismatch(AfibkitError):
    pass


class DegenerateBatch(AfibkitError):
    pass


class StaleForward(AfibkitError):
    pass


# Model builders

class InputTooShort(AfibkitError):
    pass


class InputTooSmall(AfibkitError):
    pass


# Metrics

class LengthMismatch(AfibkitError):
    pass


class EmptyInput(AfibkitError):
    pass


# Containers

class MalformedContainer(AfibkitError):
    pass
