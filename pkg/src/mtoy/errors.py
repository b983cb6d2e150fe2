"""Error types shared across the toolchain.

Every user-input fault derives from MtoyError and carries a span when
one is known, so the CLI can report file:line:col without stack traces.
"""

from __future__ import annotations

from typing import Optional

from .ast import Span


class MtoyError(Exception):
    def __init__(self, message: str, span: Optional[Span] = None):
        self.message = message
        self.span = span
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class ParseError(MtoyError):
    pass


class DuplicateDeclaration(MtoyError):
    pass


class UnknownErrorCode(MtoyError):
    pass


class ShadowingError(MtoyError):
    pass


class CyclicDefinition(MtoyError):
    def __init__(self, cycle: list[str], span: Optional[Span] = None):
        self.cycle = cycle
        super().__init__("cyclic definition: " + " -> ".join(cycle + cycle[:1]), span)


class DuplicateDefinition(MtoyError):
    pass


class ShapeMismatch(MtoyError):
    pass


class ArrayAsScalar(MtoyError):
    pass


class BadArity(MtoyError):
    pass


class UnknownKind(MtoyError):
    pass


class UnknownFunction(MtoyError):
    pass


class RecursiveCall(MtoyError):
    pass


class UninitializedLocal(MtoyError):
    pass


class PassLimitExceeded(MtoyError):
    pass


class Starved(MtoyError):
    pass


class IdentifierOverflow(MtoyError):
    pass
