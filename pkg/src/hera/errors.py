"""Exception taxonomy shared across the toolkit.

Errors are split by the stage that raises them so the CLI can map them
to exit codes without string matching.
"""


class HeraError(Exception):
    """Base class for every error raised by this package."""


class InputFormatError(HeraError):
    """Input bytes or text do not conform to the expected format."""


class CaptureError(InputFormatError):
    """Problems with a PCAP capture file."""


class BadMagic(CaptureError):
    """File does not start with a recognized magic number."""


class TruncatedHeader(CaptureError):
    """File ends inside the global header."""


class UnsupportedLinktype(CaptureError):
    """Capture uses a link layer this reader does not decode."""

    def __init__(self, linktype: int):
        super().__init__(f"unsupported linktype {linktype}")
        self.linktype = linktype


class TruncatedRecord(CaptureError):
    """A record header claims more bytes than remain in the file."""

    def __init__(self, record_index: int):
        super().__init__(f"record {record_index} truncated at end of file")
        self.record_index = record_index


class FlowFileError(InputFormatError):
    """Problems with a .hera flow file."""


class FlowFileBadMagic(FlowFileError):
    """First line is not the expected magic line."""


class UnsupportedVersion(FlowFileError):
    """Flow file declares a version this reader does not understand."""

    def __init__(self, version: str):
        super().__init__(f"unsupported flow file version {version!r}")
        self.version = version


class CorruptRecord(FlowFileError):
    """A record line cannot be parsed."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class UnknownFeature(HeraError):
    """A requested feature name is not in the catalog."""

    def __init__(self, name: str):
        super().__init__(f"unknown feature {name!r}")
        self.name = name


class GroundTruthError(InputFormatError):
    """Problems with a ground-truth CSV."""


class MissingLabelColumn(GroundTruthError):
    """Ground truth has no Label column."""


class EmptyLabelCell(GroundTruthError):
    """A ground-truth row has an empty label."""

    def __init__(self, row_number: int):
        super().__init__(f"row {row_number}: empty label cell")
        self.row_number = row_number


class MalformedTimestamp(GroundTruthError):
    """A ground-truth timestamp cell cannot be parsed."""

    def __init__(self, row_number: int, value: str):
        super().__init__(f"row {row_number}: malformed timestamp {value!r}")
        self.row_number = row_number
        self.value = value


class MalformedField(GroundTruthError):
    """A ground-truth cell holds a value of the wrong shape."""

    def __init__(self, row_number: int, column: str, value: str):
        super().__init__(f"row {row_number}: bad {column} value {value!r}")
        self.row_number = row_number
        self.column = column
        self.value = value


class MissingMatchField(HeraError):
    """A dataset being labelled lacks a column needed for matching."""

    def __init__(self, column: str):
        super().__init__(f"dataset is missing required column {column!r}")
        self.column = column


class UsageError(HeraError):
    """Bad command-line or config value, detected before any IO."""
