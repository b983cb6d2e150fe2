"""Dependency ordering and shape checking for M programs.

Rules may arrive in any order; assignments are re-ordered so every
variable is defined before use, cycles are rejected with a deterministic
witness, and shapes (scalar vs array) are checked.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

from .ast import (
    ArrayAssign, Assign, Binop, Call, Command, CondExpr, Exists, Expr,
    IndexAccess, INDEX_VAR, Lit, MppCommand, MppIf, MppPartition, MppProgram,
    MProgram, RaiseIf, Unop, Var, command_reads,
)
from .errors import (
    ArrayAsScalar, BadArity, CyclicDefinition, DuplicateDefinition,
    ShapeMismatch, UnknownKind,
)
from .values import ARITY


@dataclass
class OrderedProgram:
    commands: list[Command]
    var_to_def: dict[str, int]
    kinds: dict[str, str]
    decls: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def assigned_vars(self) -> set[str]:
        return set(self.var_to_def)


def order_rules(program: MProgram) -> OrderedProgram:
    """Topologically sort assignments; place each raise-if after its
    dependencies while keeping raise-ifs in source order among themselves.

    Ties between ready assignments are broken by target name so that the
    result does not depend on the order rules appear in the source.
    """
    assigns: list[Command] = []
    raises: list[RaiseIf] = []
    target_of: dict[str, Command] = {}
    for cmd in program.commands:
        if isinstance(cmd, RaiseIf):
            raises.append(cmd)
            continue
        var = cmd.var  # type: ignore[union-attr]
        if var in target_of:
            raise DuplicateDefinition(f"{var!r} is assigned more than once", cmd.span)
        target_of[var] = cmd
        assigns.append(cmd)

    deps: dict[str, set[str]] = {}
    for cmd in assigns:
        var = cmd.var  # type: ignore[union-attr]
        deps[var] = {v for v in command_reads(cmd) if v in target_of and v != var}
        if var in command_reads(cmd):
            deps[var].add(var)  # self-reference is a 1-cycle

    # Kahn's algorithm, ready queue keyed by target name
    dependents: dict[str, set[str]] = {v: set() for v in target_of}
    indegree: dict[str, int] = {}
    for var, ds in deps.items():
        indegree[var] = len(ds)
        for d in ds:
            if d != var:
                dependents[d].add(var)
    ready = [v for v, n in indegree.items() if n == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        var = heapq.heappop(ready)
        order.append(var)
        for succ in sorted(dependents[var]):
            indegree[succ] -= 1
            if indegree[succ] == 0:
                heapq.heappush(ready, succ)
    if len(order) != len(target_of):
        remaining = {v for v in target_of if v not in set(order)}
        raise CyclicDefinition(_find_cycle(deps, remaining))

    pos_of = {v: i for i, v in enumerate(order)}
    commands: list[Command] = [target_of[v] for v in order]

    # insert raise-ifs after their dependencies, preserving their mutual order
    insert_at: list[tuple[int, RaiseIf]] = []
    floor_pos = 0
    for r in raises:
        dep_pos = max(
            (pos_of[v] + 1 for v in command_reads(r) if v in pos_of), default=0
        )
        floor_pos = max(floor_pos, dep_pos)
        insert_at.append((floor_pos, r))
    for offset, (pos, r) in enumerate(insert_at):
        commands.insert(pos + offset, r)

    var_to_def = {
        cmd.var: i
        for i, cmd in enumerate(commands)
        if isinstance(cmd, (Assign, ArrayAssign))
    }
    kinds = {n: d.kind for n, d in program.decls.items() if d.kind is not None}
    return OrderedProgram(commands, var_to_def, kinds, program.decls, program.errors)


def _find_cycle(deps: dict[str, set[str]], remaining: set[str]) -> list[str]:
    """Deterministic cycle witness: start from the smallest name in the
    cyclic region and follow smallest-first edges until a repeat."""
    sub = {v: sorted(d for d in deps[v] if d in remaining) for v in remaining}
    start = min(remaining)
    path = [start]
    seen = {start: 0}
    cur = start
    while True:
        nxt = sub[cur][0]
        if nxt in seen:
            return path[seen[nxt]:]
        seen[nxt] = len(path)
        path.append(nxt)
        cur = nxt


# ---------------------------------------------------------------------------
# typing

SCALAR = "scalar"
ARRAY = "array"

TypeEnv = dict[str, str]


def typecheck(ordered: OrderedProgram) -> TypeEnv:
    """Shape-check an ordered program, returning the final environment.

    Declarations pre-seed the environment; assignments may also introduce
    undeclared variables. A bare reference to an array is rejected, and a
    variable never changes shape.
    """
    env: TypeEnv = {}
    for name, decl in ordered.decls.items():
        env[name] = ARRAY if decl.is_array else SCALAR
    for cmd in ordered.commands:
        if isinstance(cmd, Assign):
            if env.get(cmd.var) == ARRAY:
                raise ShapeMismatch(
                    f"{cmd.var!r} is an array but is assigned as a scalar", cmd.span
                )
            check_expr(env, cmd.expr, allow_index_var=False)
            env[cmd.var] = SCALAR
        elif isinstance(cmd, ArrayAssign):
            if env.get(cmd.var) == SCALAR:
                raise ShapeMismatch(
                    f"{cmd.var!r} is a scalar but is assigned as an array", cmd.span
                )
            decl = ordered.decls.get(cmd.var)
            if decl is not None and decl.length != cmd.length:
                raise ShapeMismatch(
                    f"{cmd.var!r} is declared with length {decl.length}, "
                    f"assigned with length {cmd.length}",
                    cmd.span,
                )
            check_expr(env, cmd.body, allow_index_var=True)
            env[cmd.var] = ARRAY
        elif isinstance(cmd, RaiseIf):
            check_expr(env, cmd.cond, allow_index_var=False)
    return env


def check_expr(env: TypeEnv, e: Expr, allow_index_var: bool) -> None:
    match e:
        case Lit():
            return
        case Var(name=n):
            if n == INDEX_VAR and not allow_index_var:
                raise ShapeMismatch("X may only appear in array-assign bodies", e.span)
            if env.get(n) == ARRAY:
                raise ArrayAsScalar(f"array {n!r} referenced as a scalar", e.span)
        case IndexAccess(name=n, index=i):
            if env.get(n) == SCALAR:
                raise ShapeMismatch(f"scalar {n!r} indexed as an array", e.span)
            check_expr(env, i, allow_index_var)
        case Binop(left=l, right=r):
            check_expr(env, l, allow_index_var)
            check_expr(env, r, allow_index_var)
        case Unop(operand=o):
            check_expr(env, o, allow_index_var)
        case CondExpr(cond=c, then=t, orelse=f):
            check_expr(env, c, allow_index_var)
            check_expr(env, t, allow_index_var)
            check_expr(env, f, allow_index_var)
        case Call(func=fn, args=args):
            arity = ARITY.get(fn, 1 if fn == "cast" else None)
            if arity is not None and len(args) != arity:
                raise BadArity(f"{fn} expects {arity} argument(s)", e.span)
            for a in args:
                check_expr(env, a, allow_index_var)
        case Exists():
            return
        case _:
            raise TypeError(f"unknown expr node {e!r}")


# ---------------------------------------------------------------------------
# kinds

def build_kind_index(program: MProgram) -> dict[str, set[str]]:
    index: dict[str, set[str]] = {}
    for name, decl in program.decls.items():
        if decl.kind is not None:
            index.setdefault(decl.kind, set()).add(name)
    return index


def check_kind_uses(mpp: MppProgram, kind_index: dict[str, set[str]]) -> None:
    """Reject exists()/partition over kinds no declared variable carries."""
    for fn in mpp.functions.values():
        _check_kind_block(fn.body, kind_index)


def _check_kind_block(body, kind_index: dict[str, set[str]]) -> None:
    for cmd in body:
        if isinstance(cmd, MppPartition):
            if cmd.kind not in kind_index:
                raise UnknownKind(f"unknown kind {cmd.kind!r}", cmd.span)
            _check_kind_block(cmd.body, kind_index)
        elif isinstance(cmd, MppIf):
            _check_kind_expr(cmd.cond, kind_index)
            _check_kind_block(cmd.then, kind_index)
            _check_kind_block(cmd.orelse, kind_index)
        elif hasattr(cmd, "expr"):
            _check_kind_expr(cmd.expr, kind_index)


def _check_kind_expr(e: Expr, kind_index: dict[str, set[str]]) -> None:
    match e:
        case Exists(kind=k):
            if k not in kind_index:
                raise UnknownKind(f"unknown kind {k!r}", e.span)
        case Binop(left=l, right=r):
            _check_kind_expr(l, kind_index)
            _check_kind_expr(r, kind_index)
        case Unop(operand=o):
            _check_kind_expr(o, kind_index)
        case Call(args=args):
            for a in args:
                _check_kind_expr(a, kind_index)
        case CondExpr(cond=c, then=t, orelse=f):
            _check_kind_expr(c, kind_index)
            _check_kind_expr(t, kind_index)
            _check_kind_expr(f, kind_index)
        case _:
            pass


def emit_order(ordered: OrderedProgram) -> str:
    """The --emit-order debug dump: index, target, free variables."""
    lines = []
    for i, cmd in enumerate(ordered.commands):
        if isinstance(cmd, RaiseIf):
            target = f"raise:{cmd.error}"
        else:
            target = cmd.var  # type: ignore[union-attr]
        reads = ",".join(sorted(command_reads(cmd)))
        lines.append(f"{i}\t{target}\t{reads}")
    return "\n".join(lines) + "\n"
