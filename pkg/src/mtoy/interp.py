"""Reference interpreter for ordered M programs and M++ drivers.

The store maps variable names to scalar values (undef is None) or to
fixed-length lists of scalars for arrays. Lookup of an absent name
yields undef. A raised error is absorbing: once an assertion fires, no
further command of the M run executes and the error propagates out of
the enclosing driver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

from . import values as V
from .ast import (
    ArrayAssign, Assign, Binop, Call, CondExpr, Exists, Expr, IndexAccess,
    Lit, MppAssign, MppCall, MppCommand, MppDel, MppIf, MppPartition,
    MppProgram, RaiseIf, Unop, Var, scope_class,
)
from .errors import MtoyError, RecursiveCall, UninitializedLocal, UnknownFunction
from .frontend import RESERVED_CALL
from .sema import OrderedProgram
from .values import NumericMode

Store = dict[str, Union[V.Value, list]]

#: raise an internal error if an operation ever produces a non-finite float
debug_checks = True


class InternalFault(Exception):
    """A hole in the semantics: NaN or infinity escaped an operation."""


@dataclass
class RunOutcome:
    store: Optional[Store] = None
    error: Optional[str] = None

    @property
    def raised(self) -> bool:
        return self.error is not None


TraceFn = Callable[[int, str, V.Value], None]


def _check(v: V.Value) -> V.Value:
    if debug_checks and isinstance(v, float) and not math.isfinite(v):
        raise InternalFault(f"non-finite value {v!r}")
    return v


def _lit_value(e: Lit, mode: NumericMode) -> V.Value:
    if e.value is None:
        return None
    if mode is NumericMode.RATIONAL:
        if e.text is not None:
            return Fraction(e.text)
        return Fraction(e.value)
    return e.value


def eval_expr(
    store: Store,
    e: Expr,
    mode: NumericMode = NumericMode.BINARY64,
    kinds: Optional[dict[str, str]] = None,
) -> V.Value:
    """Evaluate an expression; total on well-formed input."""
    match e:
        case Lit():
            return _lit_value(e, mode)
        case Var(name=n):
            v = store.get(n)
            if isinstance(v, list):
                raise InternalFault(f"array {n!r} read as a scalar")
            return v
        case IndexAccess(name=n, index=ie):
            r = eval_expr(store, ie, mode, kinds)
            if r is None:
                return None
            arr = store.get(n)
            if arr is None:
                return None
            if not isinstance(arr, list):
                raise InternalFault(f"scalar {n!r} indexed as an array")
            if r < 0:
                return 0.0 if mode is NumericMode.BINARY64 else Fraction(0)
            if r >= len(arr):
                return None
            # truncation can round an index just below the bound up to it
            k = int(V.truncate_m(r))
            if k >= len(arr):
                return None
            return arr[k]
        case Binop(op=op, left=l, right=r):
            return _check(
                V.eval_binop(op, eval_expr(store, l, mode, kinds), eval_expr(store, r, mode, kinds))
            )
        case Unop(op=op, operand=o):
            return _check(V.eval_unop(op, eval_expr(store, o, mode, kinds)))
        case CondExpr(cond=c, then=t, orelse=f):
            guard = eval_expr(store, c, mode, kinds)
            if guard is None:
                return None
            if guard != 0:
                return eval_expr(store, t, mode, kinds)
            return eval_expr(store, f, mode, kinds)
        case Call(func=fn, args=args):
            vals = [eval_expr(store, a, mode, kinds) for a in args]
            if fn == "cast":
                v = vals[0]
                if v is None:
                    return 0.0 if mode is NumericMode.BINARY64 else Fraction(0)
                return v
            return _check(V.builtin(fn, vals))
        case Exists(kind=k):
            if kinds is None:
                raise InternalFault("exists() evaluated without a kind table")
            truth = any(
                kinds.get(n) == k and not isinstance(v, list) and v is not None
                for n, v in store.items()
            )
            one = 1.0 if mode is NumericMode.BINARY64 else Fraction(1)
            zero = 0.0 if mode is NumericMode.BINARY64 else Fraction(0)
            return one if truth else zero
    raise TypeError(f"unknown expr node {e!r}")


def run_commands(
    store: Store,
    prog: OrderedProgram,
    mode: NumericMode = NumericMode.BINARY64,
    trace: Optional[TraceFn] = None,
) -> RunOutcome:
    """Execute an ordered, typechecked M program over a store, in place."""
    for i, cmd in enumerate(prog.commands):
        if isinstance(cmd, Assign):
            v = eval_expr(store, cmd.expr, mode)
            store[cmd.var] = v
            if trace:
                trace(i, cmd.var, v)
        elif isinstance(cmd, ArrayAssign):
            elems = []
            for idx in range(cmd.length):
                store["X"] = float(idx) if mode is NumericMode.BINARY64 else Fraction(idx)
                elems.append(eval_expr(store, cmd.body, mode))
            store.pop("X", None)
            store[cmd.var] = elems
            if trace:
                trace(i, cmd.var, None)
        elif isinstance(cmd, RaiseIf):
            guard = eval_expr(store, cmd.cond, mode)
            if guard is not None and guard != 0:
                if trace:
                    trace(i, f"raise:{cmd.error}", guard)
                return RunOutcome(error=cmd.error)
        else:
            raise TypeError(cmd)
    return RunOutcome(store=store)


# ---------------------------------------------------------------------------
# M++ evaluation

@dataclass
class MppFrame:
    locals: Store = field(default_factory=dict)


class _Raised(Exception):
    def __init__(self, code: str):
        self.code = code


def run_mpp(
    program: MppProgram,
    m: OrderedProgram,
    entry: str,
    inputs: Store,
    mode: NumericMode = NumericMode.BINARY64,
    trace: Optional[TraceFn] = None,
) -> RunOutcome:
    """Run an M++ function over a fresh M scope seeded with inputs."""
    if entry not in program.functions:
        raise UnknownFunction(f"no function named {entry!r}")
    _check_recursion(program)
    shared: Store = dict(inputs)
    try:
        _run_function(program, m, entry, shared, mode, trace)
    except _Raised as r:
        return RunOutcome(error=r.code)
    return RunOutcome(store=shared)


def _check_recursion(program: MppProgram) -> None:
    calls: dict[str, set[str]] = {}
    for fn in program.functions.values():
        out: set[str] = set()
        _collect_calls(fn.body, out)
        calls[fn.name] = out - {RESERVED_CALL}
    state: dict[str, int] = {}

    def visit(name: str, stack: list[str]) -> None:
        if state.get(name) == 1:
            raise RecursiveCall("recursive M++ call graph: " + " -> ".join(stack + [name]))
        if state.get(name) == 2:
            return
        state[name] = 1
        for callee in sorted(calls.get(name, ())):
            visit(callee, stack + [name])
        state[name] = 2

    for name in program.functions:
        visit(name, [])


def _collect_calls(body, out: set[str]) -> None:
    for cmd in body:
        if isinstance(cmd, MppCall):
            out.add(cmd.func)
        elif isinstance(cmd, MppIf):
            _collect_calls(cmd.then, out)
            _collect_calls(cmd.orelse, out)
        elif isinstance(cmd, MppPartition):
            _collect_calls(cmd.body, out)


def _run_function(
    program: MppProgram,
    m: OrderedProgram,
    name: str,
    shared: Store,
    mode: NumericMode,
    trace: Optional[TraceFn],
) -> None:
    frame = MppFrame()
    _run_block(program, m, program.functions[name].body, shared, frame, mode, trace)


def _run_block(
    program: MppProgram,
    m: OrderedProgram,
    body: tuple[MppCommand, ...],
    shared: Store,
    frame: MppFrame,
    mode: NumericMode,
    trace: Optional[TraceFn],
) -> None:
    for cmd in body:
        if isinstance(cmd, MppAssign):
            v = _eval_mpp(shared, frame, cmd.expr, mode, m.kinds)
            if scope_class(cmd.var) == "m":
                shared[cmd.var] = v
            else:
                frame.locals[cmd.var] = v
        elif isinstance(cmd, MppDel):
            if scope_class(cmd.var) == "m":
                shared[cmd.var] = None
            else:
                frame.locals[cmd.var] = None
        elif isinstance(cmd, MppIf):
            guard = _eval_mpp(shared, frame, cmd.cond, mode, m.kinds)
            if guard is not None and guard != 0:
                _run_block(program, m, cmd.then, shared, frame, mode, trace)
            elif cmd.orelse:
                _run_block(program, m, cmd.orelse, shared, frame, mode, trace)
        elif isinstance(cmd, MppPartition):
            # arrays are never masked by partition (kinds group scalars)
            kind_vars = [
                n
                for n, k in m.kinds.items()
                if k == cmd.kind and not (n in m.decls and m.decls[n].is_array)
            ]
            saved = {n: shared.get(n) for n in kind_vars}
            for n in kind_vars:
                shared[n] = None
            try:
                _run_block(program, m, cmd.body, shared, frame, mode, trace)
            finally:
                for n, v in saved.items():
                    if v is None:
                        shared.pop(n, None)
                    else:
                        shared[n] = v
        elif isinstance(cmd, MppCall):
            copy: Store = {
                n: (list(v) if isinstance(v, list) else v) for n, v in shared.items()
            }
            if cmd.func == RESERVED_CALL:
                outcome = run_commands(copy, m, mode, trace)
                if outcome.raised:
                    raise _Raised(outcome.error)  # type: ignore[arg-type]
            elif cmd.func in program.functions:
                _run_function(program, m, cmd.func, copy, mode, trace)
            else:
                raise UnknownFunction(f"call to undeclared function {cmd.func!r}", cmd.span)
            for target in cmd.targets:
                if target in copy:
                    shared[target] = copy[target]
                else:
                    shared.pop(target, None)
        else:
            raise TypeError(cmd)


def _eval_mpp(
    shared: Store,
    frame: MppFrame,
    e: Expr,
    mode: NumericMode,
    kinds: dict[str, str],
) -> V.Value:
    # resolve local reads against the frame; everything else is shared scope
    match e:
        case Var(name=n) if scope_class(n) == "local":
            if n not in frame.locals:
                raise UninitializedLocal(f"local {n!r} read before assignment", e.span)
            return frame.locals[n]
        case Binop(op=op, left=l, right=r):
            return _check(
                V.eval_binop(
                    op,
                    _eval_mpp(shared, frame, l, mode, kinds),
                    _eval_mpp(shared, frame, r, mode, kinds),
                )
            )
        case Unop(op=op, operand=o):
            return _check(V.eval_unop(op, _eval_mpp(shared, frame, o, mode, kinds)))
        case Call(func=fn, args=args):
            vals = [_eval_mpp(shared, frame, a, mode, kinds) for a in args]
            if fn == "cast":
                v = vals[0]
                if v is None:
                    return 0.0 if mode is NumericMode.BINARY64 else Fraction(0)
                return v
            return _check(V.builtin(fn, vals))
        case _:
            return eval_expr(shared, e, mode, kinds)


# ---------------------------------------------------------------------------
# test execution

@dataclass
class TestReport:
    name: str
    passed: bool
    diffs: list[str]
    raised: Optional[str] = None

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = "" if self.passed else " (" + "; ".join(self.diffs) + ")"
        return f"{status} {self.name}{extra}"


def store_from_test(case, decls) -> Store:
    """Build the input store for a test case; absent entries stay undef."""
    store: Store = {}
    for name, value in case.entries.items():
        store[name] = value
    arrays: dict[str, dict[int, float]] = {}
    for (name, idx), value in case.array_entries.items():
        arrays.setdefault(name, {})[idx] = value
    for name, elems in arrays.items():
        length = decls[name].length or (max(elems) + 1)
        arr: list = [None] * length
        for idx, value in elems.items():
            if idx < length:
                arr[idx] = value
        store[name] = arr
    return store


def rational_store(store: Store) -> Store:
    out: Store = {}
    for n, v in store.items():
        if isinstance(v, list):
            out[n] = [None if x is None else Fraction(str(x)) for x in v]
        elif v is None:
            out[n] = None
        else:
            out[n] = Fraction(str(v))
    return out


def run_test(
    case,
    mpp: MppProgram,
    m: OrderedProgram,
    entry: str = "main",
    mode: NumericMode = NumericMode.BINARY64,
) -> TestReport:
    """Execute a test case and compare against its expectations.

    Output comparison is exact binary64 bit equality, after rounding in
    rational mode.
    """
    store = store_from_test(case, m.decls)
    if mode is NumericMode.RATIONAL:
        store = rational_store(store)
    outcome = run_mpp(mpp, m, entry, store, mode)
    diffs: list[str] = []
    if case.expected_error is not None:
        if not outcome.raised:
            diffs.append(f"expected error {case.expected_error}, no error raised")
        elif outcome.error != case.expected_error:
            diffs.append(f"expected error {case.expected_error}, got {outcome.error}")
        return TestReport(case.name, not diffs, diffs, outcome.error)
    if outcome.raised:
        diffs.append(f"unexpected error {outcome.error}")
        return TestReport(case.name, False, diffs, outcome.error)
    assert outcome.store is not None
    for name, want in case.expected.items():
        got = outcome.store.get(name)
        if isinstance(got, list):
            diffs.append(f"{name}: expected a scalar, got an array")
            continue
        got64 = V.to_binary64(got)
        if not _bit_equal(got64, want):
            diffs.append(f"{name}: expected {_show(want)}, got {_show(got64)}")
    return TestReport(case.name, not diffs, diffs)


def _bit_equal(a: Optional[float], b: Optional[float]) -> bool:
    if a is None or b is None:
        return a is None and b is None
    import struct

    return struct.pack("<d", a) == struct.pack("<d", b)


def _show(v: Optional[float]) -> str:
    return "undef" if v is None else repr(v)
