"""Optimization pipeline over the CFG form of BIR.

The pipeline is: convert to OIR, run a forward definedness/constant
analysis, partially evaluate (with the unsafe +0/*0 rules gated behind
fast_math), eliminate dead code against the declared outputs, convert
back, and iterate to a fixpoint.

The definedness lattice is the four-point diamond
bottom < undef#, float# < top; the analysis additionally tracks exact
constants, which the partial evaluator uses for constant propagation
under the CFG's dominance discipline (a forward dataflow with joins at
merges computes exactly that).

Programs are loop-free, so every dataflow fixpoint is reached in a
single structural pass.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from . import values as V
from .ast import (
    Binop, Call, CondExpr, Expr, IndexAccess, Lit, SYNTH, Unop, Var,
)
from .bir import (
    BirAssign, BirCond, BirInstr, BirProgram, BirRaise, count_instructions,
)
from .errors import PassLimitExceeded
from .frontend import format_expr


class Definedness(Enum):
    BOTTOM = "bottom"
    UNDEF = "undef#"
    FLOAT = "float#"
    TOP = "top"


def join_def(a: Definedness, b: Definedness) -> Definedness:
    if a is b:
        return a
    if a is Definedness.BOTTOM:
        return b
    if b is Definedness.BOTTOM:
        return a
    return Definedness.TOP


def absorb(a: Definedness, b: Definedness) -> Definedness:
    """Transfer for *, / and boolean operators: undef absorbs."""
    if Definedness.BOTTOM in (a, b):
        return Definedness.BOTTOM
    if Definedness.UNDEF in (a, b):
        return Definedness.UNDEF
    if a is Definedness.FLOAT and b is Definedness.FLOAT:
        return Definedness.FLOAT
    return Definedness.TOP


def cast_def(a: Definedness, b: Definedness) -> Definedness:
    """Transfer for + and -: a single undef behaves like 0."""
    if Definedness.BOTTOM in (a, b):
        return Definedness.BOTTOM
    if Definedness.FLOAT in (a, b):
        return Definedness.FLOAT
    if a is Definedness.UNDEF and b is Definedness.UNDEF:
        return Definedness.UNDEF
    return Definedness.TOP


def _bits(v: Optional[float]) -> bytes:
    return b"undef" if v is None else struct.pack("<d", v)


@dataclass(frozen=True)
class AbsVal:
    """Abstract value: a definedness tag, optionally refined to an exact
    constant (bit-pattern identity for floats)."""

    tag: Definedness
    const: Optional[float] = None
    is_const: bool = False

    def __post_init__(self):
        if self.is_const:
            want = Definedness.UNDEF if self.const is None else Definedness.FLOAT
            object.__setattr__(self, "tag", want)


BOT = AbsVal(Definedness.BOTTOM)
UNDEF_A = AbsVal(Definedness.UNDEF)
FLOAT_A = AbsVal(Definedness.FLOAT)
TOP_A = AbsVal(Definedness.TOP)


def const_a(v: Optional[float]) -> AbsVal:
    return AbsVal(Definedness.BOTTOM, v, True)


def join_abs(a: AbsVal, b: AbsVal) -> AbsVal:
    if a.is_const and b.is_const and _bits(a.const) == _bits(b.const):
        return a
    return AbsVal(join_def(a.tag, b.tag))


Key = tuple[str, Optional[int]]


class AbsEnv:
    """Abstract store. Unknown names default to the declared-input (top)
    or never-assigned (constant undef) interpretation."""

    def __init__(self, inputs: frozenset[str], arrays: dict[str, int]):
        self.inputs = inputs
        self.arrays = arrays
        self.map: dict[Key, AbsVal] = {}

    def get(self, key: Key) -> AbsVal:
        if key in self.map:
            return self.map[key]
        if key[0] in self.inputs:
            return TOP_A
        return const_a(None)

    def set(self, key: Key, v: AbsVal) -> None:
        self.map[key] = v

    def copy(self) -> "AbsEnv":
        env = AbsEnv(self.inputs, self.arrays)
        env.map = dict(self.map)
        return env

    def join_with(self, other: "AbsEnv") -> "AbsEnv":
        env = AbsEnv(self.inputs, self.arrays)
        for key in set(self.map) | set(other.map):
            env.map[key] = join_abs(self.get(key), other.get(key))
        return env


# ---------------------------------------------------------------------------
# abstract expression evaluation

def abs_eval(e: Expr, env: AbsEnv) -> AbsVal:
    match e:
        case Lit(value=v):
            return const_a(v)
        case Var(name=n):
            return env.get((n, None))
        case IndexAccess(name=n, index=i):
            idx = abs_eval(i, env)
            if idx.tag is Definedness.UNDEF:
                return const_a(None)
            return TOP_A
        case Binop(op=op, left=l, right=r):
            a, b = abs_eval(l, env), abs_eval(r, env)
            if a.is_const and b.is_const:
                return const_a(V.eval_binop(op, a.const, b.const))
            fn = cast_def if op in ("+", "-") else absorb
            return AbsVal(fn(a.tag, b.tag))
        case Unop(op=op, operand=o):
            a = abs_eval(o, env)
            if a.is_const:
                return const_a(V.eval_unop(op, a.const))
            return AbsVal(a.tag)
        case CondExpr(cond=c, then=t, orelse=f):
            g = abs_eval(c, env)
            if g.is_const:
                if g.const is None:
                    return const_a(None)
                return abs_eval(t, env) if g.const != 0 else abs_eval(f, env)
            branches = join_abs(abs_eval(t, env), abs_eval(f, env))
            if g.tag is Definedness.FLOAT:
                return branches
            if g.tag is Definedness.UNDEF:
                return const_a(None)
            return join_abs(branches, UNDEF_A)
        case Call(func=fn, args=args):
            vals = [abs_eval(a, env) for a in args]
            return _abs_call(fn, vals)
    raise TypeError(f"unknown expr node {e!r}")


def _abs_call(fn: str, vals: list[AbsVal]) -> AbsVal:
    if all(v.is_const for v in vals):
        if fn == "cast":
            c = vals[0].const
            return const_a(0.0 if c is None else c)
        return const_a(V.builtin(fn, [v.const for v in vals]))
    if fn == "present":
        if vals[0].tag is Definedness.UNDEF:
            return const_a(0.0)
        if vals[0].tag is Definedness.FLOAT:
            return const_a(1.0)
        return FLOAT_A
    if fn == "cast":
        return FLOAT_A
    if fn in ("min", "max"):
        a, b = vals
        if a.tag is Definedness.UNDEF and b.tag is Definedness.UNDEF:
            return UNDEF_A
        # a single certain float forces a float result
        if Definedness.FLOAT in (a.tag, b.tag):
            return FLOAT_A
        return TOP_A
    # round, truncate, abs, pos, pos_or_null, null: undef in, undef out
    return AbsVal(vals[0].tag)


# ---------------------------------------------------------------------------
# OIR

@dataclass
class OirGraph:
    """CFG view of a BIR program.

    The structured instruction skeleton is retained (programs are
    reducible and loop-free), and basic blocks/edges/dominators are
    derived from it for inspection and the DOT dump.
    """

    instrs: list[BirInstr]
    inputs: frozenset[str]
    outputs: frozenset[str]
    arrays: dict[str, int]

    def build_cfg(self):
        blocks: list[list] = [[]]
        edges: list[tuple[int, int, str]] = []

        def new_block() -> int:
            blocks.append([])
            return len(blocks) - 1

        def walk(instrs: list[BirInstr], cur: int) -> int:
            for ins in instrs:
                if isinstance(ins, BirCond):
                    blocks[cur].append(("branch", ins.guard))
                    t, f = new_block(), new_block()
                    edges.append((cur, t, "true"))
                    edges.append((cur, f, "false"))
                    te = walk(ins.then, t)
                    fe = walk(ins.orelse, f)
                    join = new_block()
                    edges.append((te, join, ""))
                    edges.append((fe, join, ""))
                    cur = join
                else:
                    blocks[cur].append(ins)
            return cur

        exit_block = walk(self.instrs, 0)
        return blocks, edges, exit_block

    def dominators(self) -> dict[int, int]:
        """Immediate dominators, entry mapped to itself."""
        blocks, edges, _ = self.build_cfg()
        preds: dict[int, list[int]] = {i: [] for i in range(len(blocks))}
        succs: dict[int, list[int]] = {i: [] for i in range(len(blocks))}
        for a, b, _lbl in edges:
            preds[b].append(a)
            succs[a].append(b)
        # reverse postorder
        order: list[int] = []
        seen = set()

        def dfs(n: int) -> None:
            seen.add(n)
            for s in succs[n]:
                if s not in seen:
                    dfs(s)
            order.append(n)

        dfs(0)
        rpo = list(reversed(order))
        rpo_idx = {n: i for i, n in enumerate(rpo)}
        idom = {0: 0}
        changed = True
        while changed:
            changed = False
            for n in rpo[1:]:
                candidates = [p for p in preds[n] if p in idom]
                if not candidates:
                    continue
                new = candidates[0]
                for p in candidates[1:]:
                    new = _intersect(new, p, idom, rpo_idx)
                if idom.get(n) != new:
                    idom[n] = new
                    changed = True
        return idom

    def to_dot(self) -> str:
        blocks, edges, _ = self.build_cfg()
        lines = ["digraph oir {", "  node [shape=box fontname=monospace];"]
        for i, block in enumerate(blocks):
            rows = []
            for item in block:
                if isinstance(item, tuple):
                    rows.append(f"branch {format_expr(item[1])}")
                elif isinstance(item, BirAssign):
                    tgt = item.target if item.index is None else f"{item.target}[{item.index}]"
                    rows.append(f"{tgt} = {format_expr(item.expr)}")
                else:
                    rows.append(f"raise {item.code} if {format_expr(item.guard)}")
            label = "\\l".join([f"B{i}"] + rows) + "\\l"
            label = label.replace('"', '\\"')
            lines.append(f'  b{i} [label="{label}"];')
        for a, b, lbl in edges:
            attr = f' [label="{lbl}"]' if lbl else ""
            lines.append(f"  b{a} -> b{b}{attr};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _intersect(a: int, b: int, idom: dict[int, int], rpo_idx: dict[int, int]) -> int:
    while a != b:
        while rpo_idx[a] > rpo_idx[b]:
            a = idom[a]
        while rpo_idx[b] > rpo_idx[a]:
            b = idom[b]
    return a


def to_oir(b: BirProgram) -> OirGraph:
    return OirGraph(b.instrs, b.inputs, b.outputs, dict(b.arrays))


def from_oir(g: OirGraph) -> BirProgram:
    return BirProgram(g.instrs, g.inputs, g.outputs, dict(g.arrays))


# ---------------------------------------------------------------------------
# definedness analysis (public 4-point view)

def analyze_definedness(g: OirGraph) -> dict[Key, Definedness]:
    """Run the forward analysis to the end of the program and return each
    variable's definedness there."""
    env = AbsEnv(g.inputs, g.arrays)
    _analyze_instrs(g.instrs, env)
    return {key: val.tag for key, val in env.map.items()}


def _analyze_instrs(instrs: list[BirInstr], env: AbsEnv) -> None:
    for ins in instrs:
        if isinstance(ins, BirAssign):
            env.set(ins.key, abs_eval(ins.expr, env))
        elif isinstance(ins, BirCond):
            then_env = env.copy()
            else_env = env.copy()
            _analyze_instrs(ins.then, then_env)
            _analyze_instrs(ins.orelse, else_env)
            env.map = then_env.join_with(else_env).map


# ---------------------------------------------------------------------------
# partial evaluation

def _lit(v: Optional[float]) -> Lit:
    return Lit(SYNTH, v, None)


def _is_plus_zero(e: Expr) -> bool:
    return isinstance(e, Lit) and e.value is not None and _bits(e.value) == _bits(0.0)


def _is_undef_lit(e: Expr) -> bool:
    return isinstance(e, Lit) and e.value is None


def _is_float_sharp(e: Expr, env: AbsEnv) -> bool:
    return abs_eval(e, env).tag is Definedness.FLOAT


def rewrite_expr(e: Expr, env: AbsEnv, fast_math: bool) -> Expr:
    """One bottom-up simplification pass over an expression."""
    match e:
        case Lit() | Var():
            pass
        case IndexAccess(name=n, index=i):
            e = IndexAccess(e.span, n, rewrite_expr(i, env, fast_math))
        case Binop(op=op, left=l, right=r):
            e = Binop(e.span, op, rewrite_expr(l, env, fast_math), rewrite_expr(r, env, fast_math))
        case Unop(op=op, operand=o):
            e = Unop(e.span, op, rewrite_expr(o, env, fast_math))
        case CondExpr(cond=c, then=t, orelse=f):
            c = rewrite_expr(c, env, fast_math)
            g = abs_eval(c, env)
            if g.is_const:
                if g.const is None:
                    return _lit(None)
                return rewrite_expr(t if g.const != 0 else f, env, fast_math)
            if g.tag is Definedness.UNDEF:
                return _lit(None)
            e = CondExpr(e.span, c, rewrite_expr(t, env, fast_math), rewrite_expr(f, env, fast_math))
        case Call(func=fn, args=args):
            e = Call(e.span, fn, tuple(rewrite_expr(a, env, fast_math) for a in args))

    # constant propagation / folding via the analysis
    a = abs_eval(e, env)
    if a.is_const and not isinstance(e, Lit):
        return _lit(a.const)

    # algebraic rules
    if isinstance(e, Binop):
        l, r = e.left, e.right
        if e.op == "*":
            if isinstance(r, Lit) and r.value == 1.0:
                return l
            if isinstance(l, Lit) and l.value == 1.0:
                return r
            if fast_math:
                if _is_plus_zero(r) and _is_float_sharp(l, env):
                    return _lit(0.0)
                if _is_plus_zero(l) and _is_float_sharp(r, env):
                    return _lit(0.0)
        elif e.op == "+":
            if fast_math:
                if _is_undef_lit(r):
                    return l
                if _is_undef_lit(l):
                    return r
                if _is_plus_zero(r) and _is_float_sharp(l, env):
                    return l
                if _is_plus_zero(l) and _is_float_sharp(r, env):
                    return r
    if isinstance(e, Call):
        if e.func == "max" and _is_plus_zero(e.args[0]):
            inner = e.args[1]
            # max(0, min(0, x)) and max(0, -max(0, x)) are 0 for every
            # definedness of x (brute-force certified in the test suite)
            if isinstance(inner, Call) and inner.func == "min" and _is_plus_zero(inner.args[0]):
                return _lit(0.0)
            if (
                isinstance(inner, Unop)
                and inner.op == "neg"
                and isinstance(inner.operand, Call)
                and inner.operand.func == "max"
                and _is_plus_zero(inner.operand.args[0])
            ):
                return _lit(0.0)
    return e


def partial_eval(g: OirGraph, fast_math: bool = False) -> OirGraph:
    """Apply constant propagation, folding and the rewrite rules in one
    forward pass; conditionals with statically known guards are folded
    into the surviving branch (an undef guard selects the else branch,
    and a statically false raise guard deletes the raise)."""
    env = AbsEnv(g.inputs, g.arrays)
    new_instrs = _peval_instrs(g.instrs, env, fast_math)
    return OirGraph(new_instrs, g.inputs, g.outputs, dict(g.arrays))


def _peval_instrs(instrs: list[BirInstr], env: AbsEnv, fast_math: bool) -> list[BirInstr]:
    out: list[BirInstr] = []
    for ins in instrs:
        if isinstance(ins, BirAssign):
            expr = rewrite_expr(ins.expr, env, fast_math)
            env.set(ins.key, abs_eval(expr, env))
            out.append(BirAssign(ins.target, ins.index, expr))
        elif isinstance(ins, BirRaise):
            guard = rewrite_expr(ins.guard, env, fast_math)
            a = abs_eval(guard, env)
            if a.is_const and (a.const is None or a.const == 0):
                continue
            if a.tag is Definedness.UNDEF:
                continue
            out.append(BirRaise(ins.code, guard))
        elif isinstance(ins, BirCond):
            guard = rewrite_expr(ins.guard, env, fast_math)
            a = abs_eval(guard, env)
            if a.is_const or a.tag is Definedness.UNDEF:
                taken = (
                    ins.then
                    if (a.is_const and a.const is not None and a.const != 0)
                    else ins.orelse
                )
                out.extend(_peval_instrs(taken, env, fast_math))
                continue
            then_env = env.copy()
            else_env = env.copy()
            new_then = _peval_instrs(ins.then, then_env, fast_math)
            new_else = _peval_instrs(ins.orelse, else_env, fast_math)
            env.map = then_env.join_with(else_env).map
            out.append(BirCond(guard, new_then, new_else))
        else:
            raise TypeError(ins)
    return out


# ---------------------------------------------------------------------------
# dead code elimination

def _uses(e: Expr, arrays: dict[str, int], out: set[Key]) -> None:
    match e:
        case Lit():
            pass
        case Var(name=n):
            out.add((n, None))
        case IndexAccess(name=n, index=i):
            for idx in range(arrays.get(n, 0)):
                out.add((n, idx))
            out.add((n, None))
            _uses(i, arrays, out)
        case Binop(left=l, right=r):
            _uses(l, arrays, out)
            _uses(r, arrays, out)
        case Unop(operand=o):
            _uses(o, arrays, out)
        case CondExpr(cond=c, then=t, orelse=f):
            _uses(c, arrays, out)
            _uses(t, arrays, out)
            _uses(f, arrays, out)
        case Call(args=args):
            for a in args:
                _uses(a, arrays, out)


def dce(g: OirGraph) -> OirGraph:
    """Remove assignments that cannot flow into an output or a raise
    guard; raises themselves are always preserved."""
    live: set[Key] = set()
    for name in g.outputs:
        if name in g.arrays:
            for i in range(g.arrays[name]):
                live.add((name, i))
        live.add((name, None))
    new_instrs, _ = _dce_instrs(g.instrs, live, g.arrays)
    return OirGraph(new_instrs, g.inputs, g.outputs, dict(g.arrays))


def _dce_instrs(
    instrs: list[BirInstr], live: set[Key], arrays: dict[str, int]
) -> tuple[list[BirInstr], set[Key]]:
    out: list[BirInstr] = []
    live = set(live)
    for ins in reversed(instrs):
        if isinstance(ins, BirAssign):
            if ins.key not in live:
                continue
            live.discard(ins.key)
            _uses(ins.expr, arrays, live)
            out.append(ins)
        elif isinstance(ins, BirRaise):
            _uses(ins.guard, arrays, live)
            out.append(ins)
        elif isinstance(ins, BirCond):
            new_then, live_t = _dce_instrs(ins.then, live, arrays)
            new_else, live_f = _dce_instrs(ins.orelse, live, arrays)
            if not new_then and not new_else:
                continue
            live = live_t | live_f
            _uses(ins.guard, arrays, live)
            out.append(BirCond(ins.guard, new_then, new_else))
        else:
            raise TypeError(ins)
    out.reverse()
    return out, live


# ---------------------------------------------------------------------------
# driver

PASS_LIMIT = 50


@dataclass
class OptStats:
    fast_math: bool
    counts: list[int] = field(default_factory=list)  # count before each pass

    def tsv(self) -> str:
        lines = ["pass\tinstructions"]
        for i, c in enumerate(self.counts):
            lines.append(f"{i}\t{c}")
        return "\n".join(lines) + "\n"


def optimize(b: BirProgram, fast_math: bool = False) -> tuple[BirProgram, OptStats]:
    """Iterate analysis + partial evaluation + DCE to a fixpoint."""
    from .bir import format_bir

    stats = OptStats(fast_math, [b.instr_count])
    g = to_oir(b)
    prev = format_bir(from_oir(g))
    for _ in range(PASS_LIMIT):
        g = dce(partial_eval(g, fast_math))
        cur_prog = from_oir(g)
        stats.counts.append(cur_prog.instr_count)
        cur = format_bir(cur_prog)
        if cur == prev:
            return cur_prog, stats
        prev = cur
    raise PassLimitExceeded(f"optimizer did not reach a fixpoint in {PASS_LIMIT} passes")
