"""Verification harness: kernel vectors, differential execution, value
coverage, mutation fuzzing and corpus minimization.

All randomness is driven by explicitly seeded random.Random instances so
every report is reproducible.
"""

from __future__ import annotations

import os
import random
import struct
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import values as V
from .ast import MppProgram, TestCase
from .backends import (
    EmittedUnit, StorageLayout, build_layout, emit_c, emit_python,
    input_positions, output_positions,
)
from .bir import BirAssign, BirProgram, assignment_index, run_bir
from .errors import Starved
from .interp import Store, store_from_test
from .sema import OrderedProgram
from .values import NumericMode

# ---------------------------------------------------------------------------
# bit-pattern helpers

def bits_of(v: Optional[float]) -> str:
    """16-hex-digit big-endian bit pattern of a binary64, or 'u' for undef."""
    if v is None:
        return "u"
    return struct.pack(">d", v).hex()


def value_of(bits: str) -> Optional[float]:
    if bits == "u":
        return None
    return struct.unpack(">d", bytes.fromhex(bits))[0]


# ---------------------------------------------------------------------------
# kernel vectors (external interface consumed by the C runtime check)

_BINOPS = ["+", "-", "*", "/", "<=", "<", ">", ">=", "==", "!=", "&&", "||"]
_UNOPS = ["neg", "not"]
_FN1 = ["round", "truncate", "abs", "pos", "pos_or_null", "null", "present"]
_FN2 = ["min", "max"]

_OP_NAME = {
    "+": "add", "-": "sub", "*": "mul", "/": "div",
    "<=": "le", "<": "lt", ">": "gt", ">=": "ge", "==": "eq", "!=": "ne",
    "&&": "and", "||": "or",
}

#: values every unary table is exercised on (the rounding edge cases are
#: the deployed-behavior witnesses: ties, near-ties, and accumulated ulps)
SPECIAL_VALUES: list[Optional[float]] = [
    None, 0.0, -0.0, 1.0, -1.0, 0.5, -0.5, 2.5, -2.5, 3.5, -3.5,
    0.49994, 0.49995, 0.50005, -0.50005, 0.4999999999, 2.9999999,
    -2.9999999, 0.000001, -0.000001, 1e15, -1e15, 1e-12, 100.0, -100.0,
    7.0, -7.0, 1.5, -1.5, 10.000001, -10.000001, 0.1, 0.2, 0.3,
]


def _cast_value(v: Optional[float]) -> float:
    return 0.0 if v is None else v


def kernel_vectors(seed: int = 0, extra_random: int = 160) -> list[tuple]:
    """Rows of (op, a, b-or-None, expected) covering the whole kernel.

    Every unary op is applied to all special values; binary ops get a
    deterministic spread of special pairs plus seeded random pairs.
    """
    rng = random.Random(seed)
    rows: list[tuple] = []

    def unary(v: Optional[float]) -> None:
        for op in _UNOPS:
            rows.append((op, v, None, V.eval_unop(op, v)))
        for fn in _FN1:
            rows.append((fn, v, None, V.builtin(fn, [v])))
        rows.append(("cast", v, None, _cast_value(v)))

    def binary(a: Optional[float], b: Optional[float]) -> None:
        for op in _BINOPS:
            rows.append((_OP_NAME[op], a, b, V.eval_binop(op, a, b)))
        for fn in _FN2:
            rows.append((fn, a, b, V.builtin(fn, [a, b])))

    for v in SPECIAL_VALUES:
        unary(v)
    specials = SPECIAL_VALUES
    for i, a in enumerate(specials):
        binary(a, specials[(i * 7 + 3) % len(specials)])
        binary(a, specials[(i * 11 + 5) % len(specials)])
    for _ in range(extra_random):
        a = _random_value(rng)
        b = _random_value(rng)
        binary(a, b)
        unary(a)
    return rows


def _random_value(rng: random.Random) -> Optional[float]:
    roll = rng.random()
    if roll < 0.15:
        return None
    if roll < 0.3:
        return float(rng.randint(-20, 20))
    if roll < 0.45:
        return rng.randint(-2000, 2000) / 100.0
    return rng.uniform(-1e6, 1e6)


def format_kernel_vectors(rows: list[tuple]) -> str:
    """TSV: op, a-bits, b-bits ('-' for unary), expected-bits."""
    unary_ops = set(_UNOPS) | set(_FN1) | {"cast"}
    lines = ["# op\ta\tb\texpected"]
    for op, a, b, expected in rows:
        bcol = "-" if op in unary_ops else bits_of(b)
        lines.append(f"{op}\t{bits_of(a)}\t{bcol}\t{bits_of(expected)}")
    return "\n".join(lines) + "\n"


def write_kernel_vectors(path: str | os.PathLike, seed: int = 0) -> int:
    rows = kernel_vectors(seed)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_kernel_vectors(rows))
    return len(rows)


# ---------------------------------------------------------------------------
# flat input/output views shared by all executable forms

def flat_inputs(store: Store) -> dict[str, float]:
    """Flatten a store to the {name | name[i] -> float} exchange mapping."""
    out: dict[str, float] = {}
    for name, v in store.items():
        if isinstance(v, list):
            for i, x in enumerate(v):
                if x is not None:
                    out[f"{name}[{i}]"] = x
        elif v is not None:
            out[name] = v
    return out


def bir_outputs(program: BirProgram, store: Store) -> dict[str, float]:
    out: dict[str, float] = {}
    for name in sorted(program.outputs):
        if name in program.arrays:
            arr = store.get(name)
            if isinstance(arr, list):
                for i, x in enumerate(arr):
                    if x is not None:
                        out[f"{name}[{i}]"] = x
        else:
            v = store.get(name)
            if v is not None:
                out[name] = v  # type: ignore[assignment]
    return out


# ---------------------------------------------------------------------------
# execution drivers

class PythonModuleRunner:
    """Executes the emitted Python module in-process."""

    def __init__(self, unit: EmittedUnit):
        namespace: dict = {"__name__": "mtoy_generated"}
        exec(compile(unit.source, "<generated>", "exec"), namespace)
        self._run = namespace[unit.entry]

    def run(self, inputs: dict[str, float]) -> tuple[dict[str, float], Optional[str]]:
        return self._run(inputs)


class CModuleRunner:
    """Compiles the emitted C unit with a line-oriented driver and runs it
    as a subprocess (one case per stdin/stdout line, hex bit patterns)."""

    def __init__(
        self,
        unit: EmittedUnit,
        runtime_dir: str | os.PathLike,
        cc: str = "cc",
        opt: str = "-O0",
        workdir: Optional[str] = None,
    ):
        self.unit = unit
        self.inputs = input_positions(unit.manifest)
        self.outputs = output_positions(unit.manifest)
        self._tmp = None
        if workdir is None:
            self._tmp = tempfile.TemporaryDirectory(prefix="mtoy_c_")
            workdir = self._tmp.name
        self.exe = os.path.join(workdir, "program")
        src = os.path.join(workdir, "program.c")
        drv = os.path.join(workdir, "driver.c")
        with open(src, "w", encoding="utf-8") as fh:
            fh.write(unit.source)
        with open(drv, "w", encoding="utf-8") as fh:
            fh.write(_c_driver(unit.entry, len(self.inputs), len(self.outputs)))
        cmd = [cc, "-std=c99", opt, f"-I{runtime_dir}", src, drv, "-o", self.exe, "-lm"]
        subprocess.run(cmd, check=True, capture_output=True)

    def run(self, inputs: dict[str, float]) -> tuple[dict[str, float], Optional[str]]:
        return self.run_many([inputs])[0]

    def run_many(
        self, cases: list[dict[str, float]]
    ) -> list[tuple[dict[str, float], Optional[str]]]:
        lines = []
        for inputs in cases:
            toks = []
            for name, idx in self.inputs:
                key = name if idx is None else f"{name}[{idx}]"
                v = inputs.get(key)
                toks.append("u" if v is None else bits_of(v))
            lines.append(" ".join(toks) if toks else "-")
        proc = subprocess.run(
            [self.exe],
            input="\n".join(lines) + "\n",
            capture_output=True,
            text=True,
            check=True,
        )
        results = []
        for line in proc.stdout.splitlines():
            toks = line.split()
            err = None if toks[0] == "-" else toks[0]
            outs: dict[str, float] = {}
            if err is None:
                for (name, idx), tok in zip(self.outputs, toks[1:]):
                    if tok != "u":
                        key = name if idx is None else f"{name}[{idx}]"
                        outs[key] = value_of(tok)  # type: ignore[assignment]
            results.append((outs, err))
        return results


def _c_driver(entry: str, nin: int, nout: int) -> str:
    return f"""\
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <stdint.h>
#include "m_runtime.h"

extern const char *{entry}(const m_value *inputs, m_value *outputs);

#define NIN {max(nin, 1)}
#define NOUT {max(nout, 1)}

static m_value parse_tok(const char *tok) {{
    uint64_t bits;
    double d;
    if (strcmp(tok, "u") == 0 || strcmp(tok, "-") == 0) return m_undef();
    bits = strtoull(tok, NULL, 16);
    memcpy(&d, &bits, 8);
    return m_lit(d);
}}

int main(void) {{
    char tok[64];
    m_value in[NIN], out[NOUT];
    int i;
    for (;;) {{
        /* a zero-input program still gets one placeholder token per case */
        for (i = 0; i < {max(nin, 1)}; i++) {{
            if (scanf("%63s", tok) != 1) return 0;
            in[i] = parse_tok(tok);
        }}
        {{
            const char *err = {entry}(in, out);
            if (err) {{
                printf("%s", err);
            }} else {{
                printf("-");
                for (i = 0; i < {nout}; i++) {{
                    if (!out[i].def) {{
                        printf(" u");
                    }} else {{
                        uint64_t bits;
                        memcpy(&bits, &out[i].val, 8);
                        printf(" %016llx", (unsigned long long)bits);
                    }}
                }}
            }}
            printf("\\n");
        }}
    }}
}}
"""


# ---------------------------------------------------------------------------
# differential execution

@dataclass
class DiffRecord:
    case_index: int
    backend: str
    key: str  # output name, "[error]"
    want: str  # bit pattern or error code or "u"
    got: str


def reference_results(
    program: BirProgram, cases: list[Store]
) -> list[tuple[dict[str, float], Optional[str]]]:
    results = []
    for store in cases:
        outcome = run_bir(program, store)
        if outcome.raised:
            results.append(({}, outcome.error))
        else:
            results.append((bir_outputs(program, outcome.store), None))
    return results


def diff_results(
    case_index: int,
    backend: str,
    want: tuple[dict[str, float], Optional[str]],
    got: tuple[dict[str, float], Optional[str]],
) -> list[DiffRecord]:
    records: list[DiffRecord] = []
    w_out, w_err = want
    g_out, g_err = got
    if w_err != g_err:
        records.append(DiffRecord(case_index, backend, "[error]", str(w_err), str(g_err)))
        return records
    for key in sorted(set(w_out) | set(g_out)):
        wb = bits_of(w_out.get(key))
        gb = bits_of(g_out.get(key))
        if wb != gb:
            records.append(DiffRecord(case_index, backend, key, wb, gb))
    return records


def diff_run(
    program: BirProgram,
    cases: list[Store],
    runtime_dir: Optional[str | os.PathLike] = None,
    cc: str = "cc",
    c_opts: tuple[str, ...] = ("-O0", "-O2"),
    include_python: bool = True,
) -> list[DiffRecord]:
    """Run every case through the BIR interpreter and each requested
    backend; report bit-level output and error-code mismatches."""
    layout = build_layout(program)
    want = reference_results(program, cases)
    flat = [flat_inputs(s) for s in cases]
    records: list[DiffRecord] = []
    if include_python:
        runner = PythonModuleRunner(emit_python(program, layout))
        for i, inputs in enumerate(flat):
            records.extend(diff_results(i, "python", want[i], runner.run(inputs)))
    if runtime_dir is not None:
        unit = emit_c(program, layout)
        for opt in c_opts:
            crunner = CModuleRunner(unit, runtime_dir, cc=cc, opt=opt)
            got = crunner.run_many(flat)
            for i in range(len(flat)):
                records.extend(diff_results(i, f"c{opt}", want[i], got[i]))
    return records


# ---------------------------------------------------------------------------
# value coverage

#: per-assignment cap on tracked distinct bit patterns
COVERAGE_CAP = 16


@dataclass
class Coverage:
    assignments: list[BirAssign]
    classes: list[set[str]]  # distinct value classes seen per assignment
    saturated: list[bool]

    def count(self, i: int) -> int:
        return len(self.classes[i])

    def bucket(self, i: int) -> str:
        if self.saturated[i]:
            return "16+"
        n = len(self.classes[i])
        if n <= 2:
            return str(n)
        return "3+"

    def buckets(self) -> dict[str, int]:
        out = {"0": 0, "1": 0, "2": 0, "3+": 0, "16+": 0}
        for i in range(len(self.assignments)):
            out[self.bucket(i)] += 1
        return out

    def signature(self) -> tuple[frozenset[str], ...]:
        """Order-insensitive summary used by corpus minimization."""
        return tuple(frozenset(c) for c in self.classes)

    def to_csv(self) -> str:
        lines = ["index,target,distinct,bucket"]
        for i, a in enumerate(self.assignments):
            target = a.target if a.index is None else f"{a.target}[{a.index}]"
            lines.append(f"{i},{target},{self.count(i)},{self.bucket(i)}")
        return "\n".join(lines) + "\n"


def measure_coverage(program: BirProgram, cases: list[Store]) -> Coverage:
    """Distinct-value coverage of every BIR assignment over a corpus.

    Values are classed by exact bit pattern; undef is its own class. At
    most COVERAGE_CAP classes are tracked per assignment.
    """
    index = assignment_index(program)
    classes: list[set[str]] = [set() for _ in index]
    saturated = [False] * len(index)

    def hook(i: int, instr: BirAssign, value) -> None:
        if saturated[i]:
            return
        cell = classes[i]
        b = bits_of(value)
        if b in cell:
            return
        if len(cell) >= COVERAGE_CAP:
            saturated[i] = True
            return
        cell.add(b)

    for store in cases:
        run_bir(program, store, on_assign=hook)
    return Coverage(index, classes, saturated)


# ---------------------------------------------------------------------------
# mutation fuzzing

_POLICIES = ("drop", "zero", "scale", "pool")
_SCALES = (0.5, 2.0, 10.0, 0.25, 3.0)


def mutate_tests(
    cases: list[TestCase],
    mpp: MppProgram,
    m: OrderedProgram,
    count: int,
    seed: int,
    entry: str = "main",
    budget: Optional[int] = None,
    outputs: Optional[frozenset[str]] = None,
) -> list[TestCase]:
    """Derive new non-raising test cases by mutating corpus inputs.

    Expected values come from the reference interpreter, so the result
    is a self-checking corpus extension. Raises Starved if the mutation
    budget runs out before `count` cases are found.
    """
    from .interp import run_mpp

    if not cases:
        raise Starved("no seed cases to mutate")
    rng = random.Random(seed)
    if budget is None:
        budget = count * 50
    if outputs is None:
        outputs = frozenset(
            n for n, d in m.decls.items() if d.category == "output" and not d.is_array
        )
    pool: list[float] = []
    for c in cases:
        pool.extend(c.entries.values())
        pool.extend(c.array_entries.values())
    pool = sorted(set(pool)) or [0.0, 1.0]

    out: list[TestCase] = []
    tries = 0
    while len(out) < count:
        if tries >= budget:
            raise Starved(
                f"fuzzing budget exhausted: {len(out)}/{count} cases after {tries} tries"
            )
        tries += 1
        base = cases[rng.randrange(len(cases))]
        entries = dict(base.entries)
        array_entries = dict(base.array_entries)
        for _ in range(rng.randint(1, 3)):
            _mutate_once(rng, entries, array_entries, pool)
        candidate = TestCase(
            f"fuzz_{seed}_{len(out):04d}", entries, array_entries, {}, None
        )
        store = store_from_test(candidate, m.decls)
        outcome = run_mpp(mpp, m, entry, store, NumericMode.BINARY64)
        if outcome.raised:
            continue
        assert outcome.store is not None
        for name in sorted(outputs):
            v = outcome.store.get(name)
            candidate.expected[name] = None if isinstance(v, list) else V.to_binary64(v)
        if not candidate.expected:
            continue
        out.append(candidate)
    return out


def _mutate_once(
    rng: random.Random,
    entries: dict[str, float],
    array_entries: dict[tuple[str, int], float],
    pool: list[float],
) -> None:
    policy = _POLICIES[rng.randrange(len(_POLICIES))]
    keys = sorted(entries) + sorted(array_entries)
    if not keys:
        return
    key = keys[rng.randrange(len(keys))]
    table = entries if isinstance(key, str) else array_entries
    if policy == "drop":
        table.pop(key, None)
    elif policy == "zero":
        table[key] = 0.0
    elif policy == "scale":
        table[key] = table[key] * _SCALES[rng.randrange(len(_SCALES))]
    else:
        table[key] = pool[rng.randrange(len(pool))]


def format_test(case: TestCase) -> str:
    """Serialize a TestCase back to .mtest syntax."""
    lines = []
    for name in sorted(case.entries):
        lines.append(f"{name} = {case.entries[name]!r}")
    for (name, idx) in sorted(case.array_entries):
        lines.append(f"{name}[{idx}] = {case.array_entries[(name, idx)]!r}")
    if case.expected_error is not None:
        lines.append(f"#EXPECT-ERROR {case.expected_error}")
    else:
        lines.append("#EXPECT")
        for name in sorted(case.expected):
            v = case.expected[name]
            lines.append(f"{name} = {'undef' if v is None else repr(v)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# corpus minimization

def minimize_corpus(
    program: BirProgram, cases: list[TestCase], decls
) -> list[TestCase]:
    """Greedy set cover: the smallest (greedy) subset of cases whose union
    of per-case value-coverage signatures equals the full corpus's.

    The union is taken case by case (each case contributes exactly one
    value class per assignment), so it is exact and independent of the
    COVERAGE_CAP applied when a whole corpus is measured at once.
    """
    stores = {c.name: store_from_test(c, decls) for c in cases}
    per_case = {
        c.name: measure_coverage(program, [stores[c.name]]).signature()
        for c in cases
    }
    n = len(next(iter(per_case.values()))) if per_case else 0
    target: list[set[str]] = [set() for _ in range(n)]
    for sig in per_case.values():
        for i in range(n):
            target[i] |= sig[i]

    covered: list[set[str]] = [set() for _ in range(n)]
    chosen: list[TestCase] = []
    remaining = sorted(cases, key=lambda c: c.name)
    while any(not target[i] <= covered[i] for i in range(n)):
        best = None
        best_gain = -1
        for c in remaining:
            sig = per_case[c.name]
            gain = sum(len(sig[i] - covered[i]) for i in range(n))
            if gain > best_gain:
                best, best_gain = c, gain
        if best is None or best_gain <= 0:
            break
        chosen.append(best)
        remaining.remove(best)
        sig = per_case[best.name]
        for i in range(n):
            covered[i] |= sig[i]
    return sorted(chosen, key=lambda c: c.name)
