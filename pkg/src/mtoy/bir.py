"""Backend IR: the M++ driver and M rules inlined into one flat list of
assignments, conditionals and raises.

Call and partition scope discipline is made explicit through generated
temporaries (reserved ``__`` prefix). After inlining there are no calls,
no partitions and no exists/X left: everything is first-order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from . import interp
from .ast import (
    ArrayAssign, Assign, AssumptionSpec, Binop, Call, CondExpr, Exists, Expr,
    IndexAccess, INDEX_VAR, Lit, MppAssign, MppCall, MppCommand, MppDel,
    MppIf, MppPartition, MppProgram, RaiseIf, SYNTH, Unop, Var, scope_class,
)
from .errors import UnknownFunction
from .frontend import RESERVED_CALL, format_expr
from .sema import OrderedProgram
from .values import NumericMode


@dataclass
class BirAssign:
    target: str
    index: Optional[int]  # static element index for array targets
    expr: Expr

    @property
    def key(self) -> tuple[str, Optional[int]]:
        return (self.target, self.index)


@dataclass
class BirRaise:
    code: str
    guard: Expr


@dataclass
class BirCond:
    guard: Expr
    then: list["BirInstr"]
    orelse: list["BirInstr"]


BirInstr = Union[BirAssign, BirRaise, BirCond]


@dataclass
class BirProgram:
    instrs: list[BirInstr]
    inputs: frozenset[str]
    outputs: frozenset[str]
    arrays: dict[str, int]  # array name -> length

    @property
    def instr_count(self) -> int:
        return count_instructions(self.instrs)


def count_instructions(instrs: list[BirInstr]) -> int:
    """Assign/raise count 1; a conditional counts 1 plus both branches."""
    total = 0
    for ins in instrs:
        if isinstance(ins, BirCond):
            total += 1 + count_instructions(ins.then) + count_instructions(ins.orelse)
        else:
            total += 1
    return total


# ---------------------------------------------------------------------------
# inlining

class _Inliner:
    def __init__(self, mpp: MppProgram, m: OrderedProgram, spec: AssumptionSpec):
        self.mpp = mpp
        self.m = m
        self.spec = spec
        self.frame_counter = 0
        self.kind_index: dict[str, list[str]] = {}
        for name, kind in m.kinds.items():
            self.kind_index.setdefault(kind, []).append(name)
        for names in self.kind_index.values():
            names.sort()
        self.arrays: dict[str, int] = {
            n: d.length for n, d in m.decls.items() if d.length is not None
        }
        for cmd in m.commands:
            if isinstance(cmd, ArrayAssign):
                self.arrays[cmd.var] = cmd.length

    def fresh_frame(self) -> int:
        self.frame_counter += 1
        return self.frame_counter

    def element_keys(self, name: str) -> list[tuple[str, Optional[int]]]:
        if name in self.arrays:
            return [(name, i) for i in range(self.arrays[name])]
        return [(name, None)]

    def lower_function(self, name: str) -> list[BirInstr]:
        frame = self.fresh_frame()
        locals_map: dict[str, str] = {}
        fn = self.mpp.functions[name]
        return self.lower_block(fn.body, frame, locals_map)

    def lower_block(
        self, body: tuple[MppCommand, ...], frame: int, locals_map: dict[str, str]
    ) -> list[BirInstr]:
        out: list[BirInstr] = []
        for cmd in body:
            out.extend(self.lower_command(cmd, frame, locals_map))
        return out

    def lower_command(
        self, cmd: MppCommand, frame: int, locals_map: dict[str, str]
    ) -> list[BirInstr]:
        if isinstance(cmd, MppAssign):
            target = self.local_name(cmd.var, frame, locals_map)
            return [BirAssign(target, None, self.lower_expr(cmd.expr, locals_map))]
        if isinstance(cmd, MppDel):
            target = self.local_name(cmd.var, frame, locals_map)
            return [BirAssign(target, None, Lit(SYNTH, None, None))]
        if isinstance(cmd, MppIf):
            return [
                BirCond(
                    self.lower_expr(cmd.cond, locals_map),
                    self.lower_block(cmd.then, frame, locals_map),
                    self.lower_block(cmd.orelse, frame, locals_map),
                )
            ]
        if isinstance(cmd, MppPartition):
            kind_vars = [
                v for v in self.kind_index.get(cmd.kind, []) if v not in self.arrays
            ]
            body = self.lower_block(cmd.body, frame, locals_map)
            if not kind_vars:
                return body
            pframe = self.fresh_frame()
            out: list[BirInstr] = []
            for v in kind_vars:
                out.append(BirAssign(self.temp(pframe, v), None, Var(SYNTH, v)))
                out.append(BirAssign(v, None, Lit(SYNTH, None, None)))
            out.extend(body)
            for v in kind_vars:
                out.append(BirAssign(v, None, Var(SYNTH, self.temp(pframe, v))))
            return out
        if isinstance(cmd, MppCall):
            cframe = self.fresh_frame()
            if cmd.func == RESERVED_CALL:
                body = self.lower_m_rules()
            elif cmd.func in self.mpp.functions:
                body = self.lower_function(cmd.func)
            else:
                raise UnknownFunction(f"call to undeclared function {cmd.func!r}", cmd.span)
            written = sorted(written_keys(body))
            targets = set(cmd.targets)
            out = []
            restores = []
            for name, idx in written:
                if name in targets or name.startswith("__"):
                    continue
                tname = self.temp(cframe, name if idx is None else f"{name}_{idx}")
                read = (
                    Var(SYNTH, name)
                    if idx is None
                    else IndexAccess(SYNTH, name, Lit(SYNTH, float(idx), None))
                )
                out.append(BirAssign(tname, None, read))
                restores.append(BirAssign(name, idx, Var(SYNTH, tname)))
            out.extend(body)
            out.extend(restores)
            return out
        raise TypeError(cmd)

    def lower_m_rules(self) -> list[BirInstr]:
        out: list[BirInstr] = []
        for cmd in self.m.commands:
            if isinstance(cmd, Assign):
                out.append(BirAssign(cmd.var, None, cmd.expr))
            elif isinstance(cmd, ArrayAssign):
                for i in range(cmd.length):
                    body = subst_vars(
                        cmd.body, {INDEX_VAR: Lit(SYNTH, float(i), str(i))}
                    )
                    out.append(BirAssign(cmd.var, i, body))
            elif isinstance(cmd, RaiseIf):
                out.append(BirRaise(cmd.error, cmd.cond))
        return out

    def local_name(self, name: str, frame: int, locals_map: dict[str, str]) -> str:
        if scope_class(name) == "m":
            return name
        if name not in locals_map:
            locals_map[name] = f"__l_{frame}_{name}"
        return locals_map[name]

    @staticmethod
    def temp(frame: int, var: str) -> str:
        return f"__t_{frame}_{var}"

    def lower_expr(self, e: Expr, locals_map: dict[str, str]) -> Expr:
        match e:
            case Exists(kind=k):
                # arrays never count as a kind-k presence witness
                names = [n for n in self.kind_index.get(k, []) if n not in self.arrays]
                acc: Expr = Lit(e.span, 0.0, "0")
                for n in names:
                    acc = Binop(e.span, "+", acc, Call(e.span, "present", (Var(e.span, n),)))
                return Binop(e.span, ">", acc, Lit(e.span, 0.0, "0"))
            case Var(name=n) if scope_class(n) == "local":
                return Var(e.span, locals_map.get(n, n))
            case Binop(op=op, left=l, right=r):
                return Binop(e.span, op, self.lower_expr(l, locals_map), self.lower_expr(r, locals_map))
            case Unop(op=op, operand=o):
                return Unop(e.span, op, self.lower_expr(o, locals_map))
            case Call(func=fn, args=args):
                return Call(e.span, fn, tuple(self.lower_expr(a, locals_map) for a in args))
            case CondExpr(cond=c, then=t, orelse=f):
                return CondExpr(
                    e.span,
                    self.lower_expr(c, locals_map),
                    self.lower_expr(t, locals_map),
                    self.lower_expr(f, locals_map),
                )
            case _:
                return e


def written_keys(instrs: list[BirInstr]) -> set[tuple[str, Optional[int]]]:
    out: set[tuple[str, Optional[int]]] = set()
    for ins in instrs:
        if isinstance(ins, BirAssign):
            out.add(ins.key)
        elif isinstance(ins, BirCond):
            out |= written_keys(ins.then)
            out |= written_keys(ins.orelse)
    return out


def subst_vars(e: Expr, mapping: dict[str, Expr]) -> Expr:
    match e:
        case Var(name=n) if n in mapping:
            return mapping[n]
        case Binop(op=op, left=l, right=r):
            return Binop(e.span, op, subst_vars(l, mapping), subst_vars(r, mapping))
        case Unop(op=op, operand=o):
            return Unop(e.span, op, subst_vars(o, mapping))
        case CondExpr(cond=c, then=t, orelse=f):
            return CondExpr(
                e.span, subst_vars(c, mapping), subst_vars(t, mapping), subst_vars(f, mapping)
            )
        case Call(func=fn, args=args):
            return Call(e.span, fn, tuple(subst_vars(a, mapping) for a in args))
        case IndexAccess(name=n, index=i):
            return IndexAccess(e.span, n, subst_vars(i, mapping))
        case _:
            return e


def inline(
    mpp: MppProgram,
    m: OrderedProgram,
    spec: AssumptionSpec,
    entry: str = "main",
) -> BirProgram:
    """Flatten the driver and rules into a BirProgram.

    Variables the assumption spec does not treat as inputs are seeded
    with undef assignments up front, making the restriction explicit.
    """
    if entry not in mpp.functions:
        raise UnknownFunction(f"no function named {entry!r}")
    interp._check_recursion(mpp)
    inliner = _Inliner(mpp, m, spec)
    instrs: list[BirInstr] = []
    undef = Lit(SYNTH, None, None)
    for name in sorted(m.decls):
        if name in spec.inputs:
            continue
        decl = m.decls[name]
        if decl.is_array:
            for i in range(decl.length):  # type: ignore[arg-type]
                instrs.append(BirAssign(name, i, undef))
        else:
            instrs.append(BirAssign(name, None, undef))
    instrs.extend(inliner.lower_function(entry))
    return BirProgram(instrs, frozenset(spec.inputs), frozenset(spec.outputs), inliner.arrays)


# ---------------------------------------------------------------------------
# BIR interpretation (internal oracle and coverage host)

AssignHook = Callable[[int, BirAssign, object], None]


def run_bir(
    program: BirProgram,
    inputs: interp.Store,
    mode: NumericMode = NumericMode.BINARY64,
    on_assign: Optional[AssignHook] = None,
) -> interp.RunOutcome:
    """Interpret a BirProgram with the same value kernel as the reference
    interpreter. ``on_assign`` sees (assignment index, instr, value)."""
    store: interp.Store = {
        n: (list(v) if isinstance(v, list) else v) for n, v in inputs.items()
    }
    counter = [0]
    err = _run_instrs(program, program.instrs, store, mode, on_assign, counter)
    if err is not None:
        return interp.RunOutcome(error=err)
    return interp.RunOutcome(store=store)


def _run_instrs(
    program: BirProgram,
    instrs: list[BirInstr],
    store: interp.Store,
    mode: NumericMode,
    on_assign: Optional[AssignHook],
    counter: list[int],
) -> Optional[str]:
    for ins in instrs:
        if isinstance(ins, BirAssign):
            idx = counter[0]
            counter[0] += 1
            v = interp.eval_expr(store, ins.expr, mode)
            if ins.index is None:
                store[ins.target] = v
            else:
                arr = store.get(ins.target)
                if not isinstance(arr, list):
                    arr = [None] * program.arrays[ins.target]
                    store[ins.target] = arr
                arr[ins.index] = v
            if on_assign is not None:
                on_assign(idx, ins, v)
        elif isinstance(ins, BirRaise):
            guard = interp.eval_expr(store, ins.guard, mode)
            if guard is not None and guard != 0:
                return ins.code
        elif isinstance(ins, BirCond):
            guard = interp.eval_expr(store, ins.guard, mode)
            branch = ins.then if (guard is not None and guard != 0) else ins.orelse
            err = _run_instrs(program, branch, store, mode, on_assign, counter)
            if err is not None:
                return err
        else:
            raise TypeError(ins)
    return None


def assignment_index(program: BirProgram) -> list[BirAssign]:
    """Pre-order list of assignments; positions match run_bir's indices."""
    out: list[BirAssign] = []

    def walk(instrs: list[BirInstr]) -> None:
        for ins in instrs:
            if isinstance(ins, BirAssign):
                out.append(ins)
            elif isinstance(ins, BirCond):
                walk(ins.then)
                walk(ins.orelse)

    walk(program.instrs)
    return out


# ---------------------------------------------------------------------------
# textual dump

def format_bir(program: BirProgram) -> str:
    lines: list[str] = []
    _format_instrs(program.instrs, 0, lines)
    return "\n".join(lines) + "\n"


def _format_instrs(instrs: list[BirInstr], depth: int, lines: list[str]) -> None:
    pad = "  " * depth
    for ins in instrs:
        if isinstance(ins, BirAssign):
            target = ins.target if ins.index is None else f"{ins.target}[{ins.index}]"
            lines.append(f"{pad}{target} = {format_expr(ins.expr)}")
        elif isinstance(ins, BirRaise):
            lines.append(f"{pad}raise {ins.code} if {format_expr(ins.guard)}")
        elif isinstance(ins, BirCond):
            lines.append(f"{pad}cond {format_expr(ins.guard)}:")
            _format_instrs(ins.then, depth + 1, lines)
            lines.append(f"{pad}else:")
            _format_instrs(ins.orelse, depth + 1, lines)


# ---------------------------------------------------------------------------
# helpers for tests

def rename_generated(program: BirProgram, name_map: dict[str, str]) -> BirProgram:
    """Consistently rename generated temporaries/locals; observationally
    identical by construction (used to test alpha-renamability)."""
    expr_map = {old: Var(SYNTH, new) for old, new in name_map.items()}

    def rn_instrs(instrs: list[BirInstr]) -> list[BirInstr]:
        out: list[BirInstr] = []
        for ins in instrs:
            if isinstance(ins, BirAssign):
                out.append(
                    BirAssign(
                        name_map.get(ins.target, ins.target),
                        ins.index,
                        subst_vars(ins.expr, expr_map),
                    )
                )
            elif isinstance(ins, BirRaise):
                out.append(BirRaise(ins.code, subst_vars(ins.guard, expr_map)))
            else:
                out.append(
                    BirCond(
                        subst_vars(ins.guard, expr_map),
                        rn_instrs(ins.then),
                        rn_instrs(ins.orelse),
                    )
                )
        return out

    return BirProgram(
        rn_instrs(program.instrs), program.inputs, program.outputs, dict(program.arrays)
    )


def generated_names(program: BirProgram) -> set[str]:
    names: set[str] = set()

    def walk(instrs: list[BirInstr]) -> None:
        for ins in instrs:
            if isinstance(ins, BirAssign):
                if ins.target.startswith("__"):
                    names.add(ins.target)
                walk_expr(ins.expr)
            elif isinstance(ins, BirRaise):
                walk_expr(ins.guard)
            else:
                walk_expr(ins.guard)
                walk(ins.then)
                walk(ins.orelse)

    def walk_expr(e: Expr) -> None:
        from .ast import free_vars

        for n in free_vars(e):
            if n.startswith("__"):
                names.add(n)

    walk(program.instrs)
    return names
