"""Exception types shared across the analyzer."""

from __future__ import annotations


class SourceError(Exception):
    """Error tied to a position in an input program."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(msg)
        self.msg = msg
        self.line = line
        self.col = col

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.col}: {self.msg}"
        return self.msg


class ParseError(SourceError):
    """Lexical or syntactic error."""


class TypeCheckError(SourceError):
    """Static type error (e.g. lock() applied to a non-mutex)."""


class MissingMainError(Exception):
    """Program has no main function to build the automaton from."""


class UnknownPlaceError(KeyError):
    """Place id was never interned."""


class DivergedError(Exception):
    """Fixpoint iteration exceeded its step budget."""


class MainThreadError(Exception):
    """Thread-multiplicity query asked about the main thread sentinel."""
