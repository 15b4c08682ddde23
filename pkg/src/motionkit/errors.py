"""Exception types shared across the toolkit."""

from __future__ import annotations


class MotionKitError(Exception):
    """Base class for all toolkit errors."""


class ManifestError(MotionKitError):
    """Trajectory manifest failed schema validation; message names the field."""


class TrackTextError(MotionKitError):
    """Free-text track output could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class VolumeFormatError(MotionKitError):
    """Motion volume file is malformed (bad magic, dims, or payload)."""


class ProtocolError(MotionKitError):
    """A reasoning reply violated the response contract.

    Carries the raw reply text for audit.
    """

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class TransportError(MotionKitError):
    """A remote client call failed; the operation may be retried.

    ``partial_state`` holds the last good session state when raised from
    the reasoning loop.
    """

    def __init__(self, message: str, partial_state=None):
        super().__init__(message)
        self.partial_state = partial_state


class UndefinedRateError(MotionKitError):
    """Preference rate is undefined because every verdict was a tie."""

    def __init__(self, n_ties: int, n_total: int):
        super().__init__(
            f"preference rate undefined: all {n_ties} of {n_total} verdicts are ties"
        )
        self.n_ties = n_ties
        self.n_total = n_total
