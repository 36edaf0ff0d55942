"""Exception hierarchy shared by all shmkb modules."""

from __future__ import annotations


class ShmkbError(Exception):
    """Base class for every error raised by this package."""


class CapacityError(ShmkbError):
    """The arena cannot grow any further."""


class DomainError(ShmkbError):
    """An input value is outside the supported domain."""


class StructureError(ShmkbError):
    """A relation would violate the level/code invariants."""


class FormatError(ShmkbError):
    """An arena file has a bad magic string or format version."""


class CorruptError(ShmkbError):
    """An arena file is truncated or internally inconsistent."""


class StaleSourceError(ShmkbError):
    """A rule file's source path no longer exists."""


class PositionedError(ShmkbError):
    """An error that points at a line/column in rule text."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class LexError(PositionedError):
    """Tokenizer failure."""


class ParseError(PositionedError):
    """Rule parser failure."""


class LinkError(ShmkbError):
    """A called function name resolves to nothing."""


class ArityError(ShmkbError):
    """A builtin was called with the wrong number of arguments."""


class BindingError(ShmkbError):
    """A required variable is unbound, or a binding target is invalid."""


class AssignmentError(ShmkbError):
    """Assignment to something that is not a variable or pattern."""


class EngineTypeError(ShmkbError):
    """An argument has the wrong value kind (e.g. non-numeric for +=)."""


class FileSearchError(ShmkbError):
    """A left-part search names something that is not a file."""


class UnsupportedOperationError(ShmkbError):
    """A disabled kernel function (#Spawn / #SystemR) was invoked."""


class ProposalError(ShmkbError):
    """An unknown generalization proposal id."""


class ExitUnwind(Exception):
    """Control flow: #Exit terminates entry-rule dispatch (not an error)."""
