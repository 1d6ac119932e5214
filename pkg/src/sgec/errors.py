"""Exception hierarchy shared by all sgec modules.

Two broad families matter for the CLI exit codes: ``DataError`` (bad or
inconsistent input data, exit code 2) and ``BackendFailure`` (an external
model backend misbehaved, exit code 3).
"""


class SgecError(Exception):
    """Base class for all toolkit errors."""


class DataError(SgecError):
    """Invalid or inconsistent input data."""


class BackendFailure(SgecError):
    """An external backend could not serve requests."""


class EmptyReference(DataError):
    """A reference segment normalized to zero tokens and cannot be scored."""


class SpanOutOfBounds(DataError):
    """An edit span does not fit inside its source token sequence."""


class OverlappingEdits(DataError):
    """Two edits in one set overlap (or duplicate an insertion point)."""


class MalformedM2(DataError):
    """An M2 file violates the format grammar."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SourceMismatch(DataError):
    """Reference and hypothesis edit sets are over different sources."""


class BridgeMismatch(DataError):
    """A bridge alignment does not cover the hypothesis source tokens."""


class MalformedManifest(DataError):
    """A manifest file or utterance record violates its schema."""


class MissingLayer(DataError):
    """A pipeline stage input (transcript layer or audio) is absent."""


class IdMismatch(DataError):
    """Inputs that must cover identical utterance ids do not."""


class BackendUnavailable(BackendFailure):
    """The backend cannot be reached at all; the whole stage fails."""


class BackendError(BackendFailure):
    """The backend failed one request; recorded per utterance, not fatal."""

    def __init__(self, utterance_id: str, message: str):
        super().__init__(f"{utterance_id}: {message}")
        self.utterance_id = utterance_id
        self.message = message
