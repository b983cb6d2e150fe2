"""C and Python code generation from BIR.

All variables live in one flat global array of (definedness, double)
pairs; arrays occupy contiguous slots. Slot assignment is sorted by name
and recorded in a sidecar JSON-lines manifest. Emission is deterministic:
the same BirProgram always yields byte-identical source.

Value semantics in the C output are delegated to the m_runtime.h helper
header; the Python output carries equivalent helpers inline and needs
nothing beyond math.floor/math.trunc.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .ast import (
    Binop, Call, CondExpr, Expr, IndexAccess, Lit, Unop, Var, free_vars,
)
from .bir import BirAssign, BirCond, BirInstr, BirProgram, BirRaise, count_instructions
from .errors import IdentifierOverflow

#: generated statements per function, to stay clear of host parser limits
CHUNK_LIMIT = 1000

#: cap on mangled identifier length in generated code
IDENT_CAP = 200


@dataclass
class StorageLayout:
    slots: dict[str, int]  # name -> first slot
    lengths: dict[str, int]  # arrays only
    total_slots: int

    def slot(self, name: str, index: Optional[int] = None) -> int:
        base = self.slots[name]
        return base if index is None else base + index


def build_layout(program: BirProgram) -> StorageLayout:
    names: set[str] = set(program.inputs) | set(program.outputs) | set(program.arrays)
    _collect_names(program.instrs, names)
    slots: dict[str, int] = {}
    next_slot = 0
    for name in sorted(names):
        if len(name) > IDENT_CAP:
            raise IdentifierOverflow(f"identifier too long: {name[:40]}...")
        slots[name] = next_slot
        next_slot += program.arrays.get(name, 1)
    return StorageLayout(slots, dict(program.arrays), next_slot)


def _collect_names(instrs: list[BirInstr], names: set[str]) -> None:
    for ins in instrs:
        if isinstance(ins, BirAssign):
            names.add(ins.target)
            names |= free_vars(ins.expr)
        elif isinstance(ins, BirRaise):
            names |= free_vars(ins.guard)
        else:
            names |= free_vars(ins.guard)
            _collect_names(ins.then, names)
            _collect_names(ins.orelse, names)


@dataclass
class EmittedUnit:
    language: str
    source: str
    entry: str
    manifest: list[dict] = field(default_factory=list)

    def manifest_jsonl(self) -> str:
        return "\n".join(json.dumps(row, sort_keys=True) for row in self.manifest) + "\n"


def _manifest(program: BirProgram, layout: StorageLayout) -> list[dict]:
    rows = []
    for name in sorted(layout.slots):
        if name in program.inputs:
            role = "input"
        elif name in program.outputs:
            role = "output"
        else:
            role = "internal"
        rows.append(
            {
                "name": name,
                "slot": layout.slots[name],
                "length": layout.lengths.get(name),
                "role": role,
            }
        )
    return rows


def _chunk(instrs: list[BirInstr]) -> list[list[BirInstr]]:
    chunks: list[list[BirInstr]] = [[]]
    size = 0
    for ins in instrs:
        cost = count_instructions([ins])
        if size + cost > CHUNK_LIMIT and chunks[-1]:
            chunks.append([])
            size = 0
        chunks[-1].append(ins)
        size += cost
    return chunks


# ---------------------------------------------------------------------------
# Python backend

_PY_HELPERS = '''\
from math import floor, trunc


def m_add(a, b):
    if a is None:
        if b is None:
            return None
        a = 0.0
    elif b is None:
        b = 0.0
    return a + b


def m_sub(a, b):
    if a is None:
        if b is None:
            return None
        a = 0.0
    elif b is None:
        b = 0.0
    return a - b


def m_mul(a, b):
    if a is None or b is None:
        return None
    return a * b


def m_div(a, b):
    if a is None or b is None:
        return None
    if b == 0.0:
        return 0.0
    return a / b


def m_cmp(op, a, b):
    if a is None or b is None:
        return None
    if op == 0:
        return 1.0 if a <= b else 0.0
    if op == 1:
        return 1.0 if a < b else 0.0
    if op == 2:
        return 1.0 if a > b else 0.0
    if op == 3:
        return 1.0 if a >= b else 0.0
    if op == 4:
        return 1.0 if a == b else 0.0
    return 1.0 if a != b else 0.0


def m_and(a, b):
    if a is None or b is None:
        return None
    return 1.0 if (a != 0.0 and b != 0.0) else 0.0


def m_or(a, b):
    if a is None or b is None:
        return None
    return 1.0 if (a != 0.0 or b != 0.0) else 0.0


def m_neg(a):
    return None if a is None else -a


def m_not(a):
    if a is None:
        return None
    return 1.0 if a == 0.0 else 0.0


def m_round(a):
    if a is None:
        return None
    shifted = a - 0.50005 if a < 0.0 else a + 0.50005
    return float(trunc(shifted))


def m_truncate(a):
    if a is None:
        return None
    return float(floor(a + 0.000001))


def m_min(a, b):
    if a is None:
        if b is None:
            return None
        a = 0.0
    elif b is None:
        b = 0.0
    return b if b < a else a


def m_max(a, b):
    if a is None:
        if b is None:
            return None
        a = 0.0
    elif b is None:
        b = 0.0
    return b if b > a else a


def m_abs(a):
    if a is None:
        return None
    return a if a >= 0.0 else -a


def m_pos(a):
    if a is None:
        return None
    return 1.0 if a > 0.0 else 0.0


def m_pos_or_null(a):
    if a is None:
        return None
    return 1.0 if a >= 0.0 else 0.0


def m_null(a):
    if a is None:
        return None
    return 1.0 if a == 0.0 else 0.0


def m_present(a):
    return 0.0 if a is None else 1.0


def m_cast(a):
    return 0.0 if a is None else a


def m_ite(c, a, b):
    if c is None:
        return None
    return a if c != 0.0 else b


def m_truthy(v):
    return v is not None and v != 0.0


def m_index(g, base, length, idx):
    if idx is None:
        return None
    if idx < 0.0:
        return 0.0
    if idx >= length:
        return None
    k = int(m_truncate(idx))
    if k >= length:
        return None
    return g[base + k]
'''

_CMP_CODE = {"<=": 0, "<": 1, ">": 2, ">=": 3, "==": 4, "!=": 5}

_PY_BUILTIN = {
    "round": "m_round",
    "truncate": "m_truncate",
    "abs": "m_abs",
    "pos": "m_pos",
    "pos_or_null": "m_pos_or_null",
    "null": "m_null",
    "present": "m_present",
    "cast": "m_cast",
    "min": "m_min",
    "max": "m_max",
}


def _py_lit(v: Optional[float]) -> str:
    if v is None:
        return "None"
    return repr(v)


def _py_expr(e: Expr, layout: StorageLayout) -> str:
    match e:
        case Lit(value=v):
            return _py_lit(v)
        case Var(name=n):
            return f"g[{layout.slot(n)}]"
        case IndexAccess(name=n, index=i):
            if n not in layout.lengths:
                # array never written and not an input array: always undef
                return "None"
            base = layout.slot(n)
            length = layout.lengths[n]
            return f"m_index(g, {base}, {float(length)!r}, {_py_expr(i, layout)})"
        case Binop(op=op, left=l, right=r):
            ls, rs = _py_expr(l, layout), _py_expr(r, layout)
            if op == "+":
                return f"m_add({ls}, {rs})"
            if op == "-":
                return f"m_sub({ls}, {rs})"
            if op == "*":
                return f"m_mul({ls}, {rs})"
            if op == "/":
                return f"m_div({ls}, {rs})"
            if op == "&&":
                return f"m_and({ls}, {rs})"
            if op == "||":
                return f"m_or({ls}, {rs})"
            return f"m_cmp({_CMP_CODE[op]}, {ls}, {rs})"
        case Unop(op=op, operand=o):
            fn = "m_neg" if op == "neg" else "m_not"
            return f"{fn}({_py_expr(o, layout)})"
        case CondExpr(cond=c, then=t, orelse=f):
            return (
                f"m_ite({_py_expr(c, layout)}, {_py_expr(t, layout)}, "
                f"{_py_expr(f, layout)})"
            )
        case Call(func=fn, args=args):
            parts = ", ".join(_py_expr(a, layout) for a in args)
            return f"{_PY_BUILTIN[fn]}({parts})"
    raise TypeError(f"unknown expr node {e!r}")


def _py_instrs(instrs: list[BirInstr], layout: StorageLayout, depth: int, out: list[str]) -> None:
    pad = "    " * depth
    for ins in instrs:
        if isinstance(ins, BirAssign):
            slot = layout.slot(ins.target, ins.index)
            out.append(f"{pad}g[{slot}] = {_py_expr(ins.expr, layout)}")
        elif isinstance(ins, BirRaise):
            out.append(f"{pad}if m_truthy({_py_expr(ins.guard, layout)}):")
            out.append(f"{pad}    return {ins.code!r}")
        elif isinstance(ins, BirCond):
            out.append(f"{pad}if m_truthy({_py_expr(ins.guard, layout)}):")
            if ins.then:
                _py_instrs(ins.then, layout, depth + 1, out)
            else:
                out.append(f"{pad}    pass")
            if ins.orelse:
                out.append(f"{pad}else:")
                _py_instrs(ins.orelse, layout, depth + 1, out)


def emit_python(program: BirProgram, layout: Optional[StorageLayout] = None) -> EmittedUnit:
    if layout is None:
        layout = build_layout(program)
    manifest = _manifest(program, layout)
    lines = ["# generated by mtoy - do not edit", _PY_HELPERS, ""]
    lines.append(f"NSLOTS = {layout.total_slots}")
    chunks = _chunk(program.instrs)
    for ci, chunk in enumerate(chunks):
        lines.append("")
        lines.append(f"def _chunk{ci}(g):")
        body: list[str] = []
        _py_instrs(chunk, layout, 1, body)
        if not body:
            body = ["    pass"]
        lines.extend(body)
        lines.append("    return None")
    lines.append("")
    lines.append(
        "_CHUNKS = (" + ", ".join(f"_chunk{i}" for i in range(len(chunks))) + ",)"
    )
    in_rows = [r for r in manifest if r["role"] == "input"]
    out_rows = [r for r in manifest if r["role"] == "output"]
    lines.append("")
    lines.append("_INPUTS = (")
    for r in in_rows:
        lines.append(f"    ({r['name']!r}, {r['slot']}, {r['length']!r}),")
    lines.append(")")
    lines.append("_OUTPUTS = (")
    for r in out_rows:
        lines.append(f"    ({r['name']!r}, {r['slot']}, {r['length']!r}),")
    lines.append(")")
    lines.append(_PY_RUNNER)
    source = "\n".join(lines)
    return EmittedUnit("python", source, "run", manifest)


_PY_RUNNER = '''

def run(inputs):
    """Run the program over a flat {name-or-"name[i]": float} mapping.

    Returns (outputs, error_code); undef outputs are absent keys.
    """
    g = [None] * NSLOTS
    for name, slot, length in _INPUTS:
        if length is None:
            if name in inputs:
                g[slot] = float(inputs[name])
        else:
            for i in range(length):
                key = name + "[" + str(i) + "]"
                if key in inputs:
                    g[slot + i] = float(inputs[key])
    for chunk in _CHUNKS:
        err = chunk(g)
        if err is not None:
            return {}, err
    outputs = {}
    for name, slot, length in _OUTPUTS:
        if length is None:
            if g[slot] is not None:
                outputs[name] = g[slot]
        else:
            for i in range(length):
                if g[slot + i] is not None:
                    outputs[name + "[" + str(i) + "]"] = g[slot + i]
    return outputs, None


if __name__ == "__main__":
    # JSONL protocol: one input mapping per line, one result per line
    import json
    import struct
    import sys

    def _hexbits(x):
        return struct.pack("<d", x).hex()

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        outs, err = run(json.loads(line))
        print(json.dumps({
            "outputs": {k: _hexbits(v) for k, v in outs.items()},
            "error": err,
        }, sort_keys=True))
'''


# ---------------------------------------------------------------------------
# C backend

_C_BUILTIN = {
    "round": "m_round",
    "truncate": "m_truncate",
    "abs": "m_abs",
    "pos": "m_pos",
    "pos_or_null": "m_pos_or_null",
    "null": "m_null",
    "present": "m_present",
    "cast": "m_cast",
    "min": "m_min",
    "max": "m_max",
}

_C_BINOP = {
    "+": "m_add", "-": "m_sub", "*": "m_mul", "/": "m_div",
    "&&": "m_and", "||": "m_or",
    "<=": "m_le", "<": "m_lt", ">": "m_gt", ">=": "m_ge",
    "==": "m_eq", "!=": "m_ne",
}


def _c_lit(v: Optional[float]) -> str:
    if v is None:
        return "m_undef()"
    return f"m_lit({float(v).hex()})"


def _c_expr(e: Expr, layout: StorageLayout) -> str:
    match e:
        case Lit(value=v):
            return _c_lit(v)
        case Var(name=n):
            return f"v[{layout.slot(n)}]"
        case IndexAccess(name=n, index=i):
            if n not in layout.lengths:
                return "m_undef()"
            base = layout.slot(n)
            length = layout.lengths[n]
            return f"m_index(v + {base}, {length}, {_c_expr(i, layout)})"
        case Binop(op=op, left=l, right=r):
            return f"{_C_BINOP[op]}({_c_expr(l, layout)}, {_c_expr(r, layout)})"
        case Unop(op=op, operand=o):
            fn = "m_neg" if op == "neg" else "m_not"
            return f"{fn}({_c_expr(o, layout)})"
        case CondExpr(cond=c, then=t, orelse=f):
            return (
                f"m_ite({_c_expr(c, layout)}, {_c_expr(t, layout)}, "
                f"{_c_expr(f, layout)})"
            )
        case Call(func=fn, args=args):
            parts = ", ".join(_c_expr(a, layout) for a in args)
            return f"{_C_BUILTIN[fn]}({parts})"
    raise TypeError(f"unknown expr node {e!r}")


def _c_instrs(instrs: list[BirInstr], layout: StorageLayout, depth: int, out: list[str]) -> None:
    pad = "    " * depth
    for ins in instrs:
        if isinstance(ins, BirAssign):
            slot = layout.slot(ins.target, ins.index)
            out.append(f"{pad}v[{slot}] = {_c_expr(ins.expr, layout)};")
        elif isinstance(ins, BirRaise):
            out.append(f"{pad}if (m_truthy({_c_expr(ins.guard, layout)})) {{")
            out.append(f'{pad}    return "{ins.code}";')
            out.append(f"{pad}}}")
        elif isinstance(ins, BirCond):
            out.append(f"{pad}if (m_truthy({_c_expr(ins.guard, layout)})) {{")
            _c_instrs(ins.then, layout, depth + 1, out)
            if ins.orelse:
                out.append(f"{pad}}} else {{")
                _c_instrs(ins.orelse, layout, depth + 1, out)
            out.append(f"{pad}}}")


def emit_c(
    program: BirProgram,
    layout: Optional[StorageLayout] = None,
    entry: str = "program_run",
) -> EmittedUnit:
    """Emit a self-contained C99 translation unit (plus m_runtime.h).

    The entry function takes the inputs and outputs as m_value blocks in
    manifest order and returns NULL or the raised error code. All state
    is local: the generated code is reentrant.

    The helpers must not be compiled with fast-math style flags; see the
    emitted header comment.
    """
    if layout is None:
        layout = build_layout(program)
    manifest = _manifest(program, layout)
    in_rows = [r for r in manifest if r["role"] == "input"]
    out_rows = [r for r in manifest if r["role"] == "output"]
    lines = [
        "/* generated by mtoy - do not edit.",
        " * Compile as C99 with strict IEEE-754 semantics:",
        " * no -ffast-math, no -funsafe-math-optimizations. */",
        '#include "m_runtime.h"',
        "",
        f"#define NSLOTS {layout.total_slots}",
        "",
    ]
    chunks = _chunk(program.instrs)
    for ci, chunk in enumerate(chunks):
        lines.append(f"static const char *chunk{ci}(m_value *v) {{")
        body: list[str] = []
        _c_instrs(chunk, layout, 1, body)
        lines.extend(body)
        lines.append("    return 0;")
        lines.append("}")
        lines.append("")
    lines.append(f"const char *{entry}(const m_value *inputs, m_value *outputs) {{")
    lines.append("    m_value v[NSLOTS];")
    lines.append("    const char *err;")
    lines.append("    int i;")
    lines.append("    for (i = 0; i < NSLOTS; i++) v[i] = m_undef();")
    pos = 0
    for r in in_rows:
        n = r["length"] or 1
        for k in range(n):
            lines.append(f"    v[{r['slot'] + k}] = inputs[{pos}];")
            pos += 1
    for ci in range(len(chunks)):
        lines.append(f"    err = chunk{ci}(v);")
        lines.append("    if (err) return err;")
    pos = 0
    for r in out_rows:
        n = r["length"] or 1
        for k in range(n):
            lines.append(f"    outputs[{pos}] = v[{r['slot'] + k}];")
            pos += 1
    lines.append("    return 0;")
    lines.append("}")
    lines.append("")
    source = "\n".join(lines)
    return EmittedUnit("c", source, entry, manifest)


def input_positions(manifest: list[dict]) -> list[tuple[str, Optional[int]]]:
    """Flat (name, element-index) list matching the C entry's input block."""
    out = []
    for r in manifest:
        if r["role"] != "input":
            continue
        if r["length"] is None:
            out.append((r["name"], None))
        else:
            for i in range(r["length"]):
                out.append((r["name"], i))
    return out


def output_positions(manifest: list[dict]) -> list[tuple[str, Optional[int]]]:
    out = []
    for r in manifest:
        if r["role"] != "output":
            continue
        if r["length"] is None:
            out.append((r["name"], None))
        else:
            for i in range(r["length"]):
                out.append((r["name"], i))
    return out
