"""AST node definitions for M rules, M++ drivers and sidecar files.

All nodes are immutable and carry a source span so that later stages can
report errors with file:line:col positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .values import ARITY


@dataclass(frozen=True)
class Span:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


SYNTH = Span("<synthetic>", 0, 0)

#: the reserved array-index variable of array assignments
INDEX_VAR = "X"


def scope_class(name: str) -> str:
    """'m' for shared M-scope names (leading uppercase), 'local' otherwise."""
    return "m" if name[:1].isupper() else "local"


# ---------------------------------------------------------------------------
# expressions

@dataclass(frozen=True)
class Expr:
    span: Span = field(repr=False, compare=False)


@dataclass(frozen=True)
class Lit(Expr):
    # value is None for undef, else a binary64 float; text keeps the
    # decimal spelling so the rational mode can be exact
    value: Optional[float] = None
    text: Optional[str] = None


@dataclass(frozen=True)
class Var(Expr):
    name: str = ""


@dataclass(frozen=True)
class IndexAccess(Expr):
    name: str = ""
    index: Expr = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Binop(Expr):
    op: str = ""
    left: Expr = None  # type: ignore[assignment]
    right: Expr = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Unop(Expr):
    op: str = ""  # 'neg' | 'not'
    operand: Expr = None  # type: ignore[assignment]


@dataclass(frozen=True)
class CondExpr(Expr):
    cond: Expr = None  # type: ignore[assignment]
    then: Expr = None  # type: ignore[assignment]
    orelse: Expr = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Call(Expr):
    # builtins from the M function table, plus 'cast' in M++/BIR code
    func: str = ""
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Exists(Expr):
    # M++ only; eliminated by inlining
    kind: str = ""


# ---------------------------------------------------------------------------
# M commands

@dataclass(frozen=True)
class Assign:
    span: Span
    var: str
    expr: Expr


@dataclass(frozen=True)
class ArrayAssign:
    span: Span
    var: str
    length: int
    body: Expr  # X is bound in body


@dataclass(frozen=True)
class RaiseIf:
    span: Span
    cond: Expr
    error: str


Command = Union[Assign, ArrayAssign, RaiseIf]


# ---------------------------------------------------------------------------
# declarations

@dataclass(frozen=True)
class VarDecl:
    span: Span
    name: str
    category: str  # input | intermediate | output
    kind: Optional[str]
    description: str
    length: Optional[int] = None  # None = scalar, else array length

    @property
    def is_array(self) -> bool:
        return self.length is not None


@dataclass(frozen=True)
class ErrorDecl:
    span: Span
    code: str
    description: str


@dataclass
class MProgram:
    decls: dict[str, VarDecl]
    errors: dict[str, ErrorDecl]
    commands: list[Command]

    def inputs(self) -> list[str]:
        return [n for n, d in self.decls.items() if d.category == "input"]

    def outputs(self) -> list[str]:
        return [n for n, d in self.decls.items() if d.category == "output"]


# ---------------------------------------------------------------------------
# M++ commands

@dataclass(frozen=True)
class MppAssign:
    span: Span
    var: str  # scope decided by case of the first letter
    expr: Expr


@dataclass(frozen=True)
class MppIf:
    span: Span
    cond: Expr
    then: tuple["MppCommand", ...]
    orelse: tuple["MppCommand", ...]


@dataclass(frozen=True)
class MppPartition:
    span: Span
    kind: str
    body: tuple["MppCommand", ...]


@dataclass(frozen=True)
class MppCall:
    span: Span
    targets: tuple[str, ...]  # all M-scope names
    func: str  # user function name or 'call_m'


@dataclass(frozen=True)
class MppDel:
    span: Span
    var: str


MppCommand = Union[MppAssign, MppIf, MppPartition, MppCall, MppDel]


@dataclass(frozen=True)
class MppFunction:
    span: Span
    name: str
    body: tuple[MppCommand, ...]


@dataclass
class MppProgram:
    functions: dict[str, MppFunction]


# ---------------------------------------------------------------------------
# sidecar specs

@dataclass(frozen=True)
class AssumptionSpec:
    inputs: frozenset[str]
    outputs: frozenset[str]


@dataclass
class TestCase:
    name: str
    entries: dict[str, float]  # scalar entries
    array_entries: dict[tuple[str, int], float]
    expected: dict[str, Optional[float]]
    expected_error: Optional[str] = None


# ---------------------------------------------------------------------------
# traversal helpers

def free_vars(e: Expr) -> set[str]:
    """Variable names read by an expression (including X and array names)."""
    out: set[str] = set()
    _free_vars(e, out)
    return out


def _free_vars(e: Expr, out: set[str]) -> None:
    match e:
        case Lit():
            pass
        case Var(name=n):
            out.add(n)
        case IndexAccess(name=n, index=i):
            out.add(n)
            _free_vars(i, out)
        case Binop(left=l, right=r):
            _free_vars(l, out)
            _free_vars(r, out)
        case Unop(operand=o):
            _free_vars(o, out)
        case CondExpr(cond=c, then=t, orelse=f):
            _free_vars(c, out)
            _free_vars(t, out)
            _free_vars(f, out)
        case Call(args=args):
            for a in args:
                _free_vars(a, out)
        case Exists():
            pass
        case _:
            raise TypeError(f"unknown expr node {e!r}")


def command_reads(cmd: Command) -> set[str]:
    """Variables a command depends on; X is not a dependency of an
    array-assign body."""
    if isinstance(cmd, Assign):
        return free_vars(cmd.expr)
    if isinstance(cmd, ArrayAssign):
        return free_vars(cmd.body) - {INDEX_VAR}
    if isinstance(cmd, RaiseIf):
        return free_vars(cmd.cond)
    raise TypeError(cmd)


def check_arities(e: Expr) -> None:
    """Raise ValueError on a builtin call violating the arity table."""
    match e:
        case Call(func=f, args=args):
            expected = ARITY.get(f)
            if f == "cast":
                expected = 1
            if expected is not None and len(args) != expected:
                raise ValueError(f"{f} expects {expected} arguments, got {len(args)}")
            for a in args:
                check_arities(a)
        case Binop(left=l, right=r):
            check_arities(l)
            check_arities(r)
        case Unop(operand=o):
            check_arities(o)
        case CondExpr(cond=c, then=t, orelse=o):
            check_arities(c)
            check_arities(t)
            check_arities(o)
        case IndexAccess(index=i):
            check_arities(i)
        case _:
            pass
