"""Command-line entry point.

Subcommands:
  check     parse, order and shape-check a rule set (and driver)
  run       execute the driver on inputs from flags or a .mtest file
  optimize  inline + optimize, dumping BIR/OIR and pass statistics
  compile   emit a C or Python module plus its slot manifest
  test      run every .mtest case through the reference interpreter
  coverage  per-assignment distinct-value coverage over a test corpus
  fuzz      grow the corpus by mutation, optionally minimizing it

Exit codes: 0 success, 1 semantic failure (failed tests, cycles, type
errors, a raised error code), 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import bir as bir_mod
from . import frontend, harness, interp, optimizer, sema
from .errors import MtoyError
from .values import NumericMode


def _add_program_args(p: argparse.ArgumentParser, need_driver: bool = True) -> None:
    p.add_argument("rules", nargs="+", help=".m rule files")
    if need_driver:
        p.add_argument("--driver", required=True, help=".mpp driver file")
    else:
        p.add_argument("--driver", help=".mpp driver file")
    p.add_argument("--assume", help=".mast assumption file")
    p.add_argument("--entry", default="main", help="driver function to run")


def _load(args) -> tuple:
    m_program = frontend.parse_m(args.rules)
    ordered = sema.order_rules(m_program)
    sema.typecheck(ordered)
    mpp = None
    if getattr(args, "driver", None):
        mpp = frontend.parse_mpp(args.driver, m_program)
        sema.check_kind_uses(mpp, sema.build_kind_index(m_program))
    spec = frontend.parse_assumptions(getattr(args, "assume", None), m_program)
    return m_program, ordered, mpp, spec


def _mode(args) -> NumericMode:
    return NumericMode.RATIONAL if args.mode == "rational" else NumericMode.BINARY64


def _build_bir(args, optimize: bool):
    _, ordered, mpp, spec = _load(args)
    b = bir_mod.inline(mpp, ordered, spec, args.entry)
    stats = None
    if optimize:
        b, stats = optimizer.optimize(b, fast_math=args.fast_math)
    return b, stats, ordered, mpp


def cmd_check(args) -> int:
    _, ordered, _, _ = _load(args)
    if args.emit_order:
        sys.stdout.write(sema.emit_order(ordered))
    else:
        print(f"ok: {len(ordered.commands)} commands")
    return 0


def cmd_run(args) -> int:
    _, ordered, mpp, _ = _load(args)
    mode = _mode(args)
    store: interp.Store
    if args.test:
        case = frontend.parse_test_source(
            open(args.test, encoding="utf-8").read(), args.test, _load(args)[0]
        )
        store = interp.store_from_test(case, ordered.decls)
    else:
        store = {}
        for item in args.input or []:
            name, _, value = item.partition("=")
            if not _:
                raise MtoyError(f"--input wants NAME=VALUE, got {item!r}")
            if "[" in name:
                base, idx = name[:-1].split("[")
                arr = store.setdefault(base, [None] * (ordered.decls[base].length or 0))
                arr[int(idx)] = float(value)
            else:
                store[name] = float(value)
    if mode is NumericMode.RATIONAL:
        store = interp.rational_store(store)
    trace = None
    if args.trace:
        def trace(i, target, value):  # noqa: E306
            print(f"# {i}\t{target}\t{value}", file=sys.stderr)
    outcome = interp.run_mpp(mpp, ordered, args.entry, store, mode, trace)
    if outcome.raised:
        if args.json:
            print(json.dumps({"error": outcome.error}))
        else:
            print(f"error: {outcome.error}")
        return 1
    assert outcome.store is not None
    out = {}
    for name in sorted(outcome.store):
        if name not in ordered.decls or ordered.decls[name].category != "output":
            continue
        v = outcome.store[name]
        if isinstance(v, list):
            for i, x in enumerate(v):
                if x is not None:
                    out[f"{name}[{i}]"] = float(x)
        elif v is not None:
            out[name] = float(v)
    if args.json:
        print(json.dumps(out, sort_keys=True))
    else:
        for k, v in out.items():
            print(f"{k} = {v!r}")
    return 0


def cmd_optimize(args) -> int:
    b, stats, _, _ = _build_bir(args, optimize=True)
    if args.emit_bir:
        sys.stdout.write(bir_mod.format_bir(b))
    if args.emit_oir:
        sys.stdout.write(optimizer.to_oir(b).to_dot())
    if args.opt_stats:
        sys.stderr.write(stats.tsv())
    if not (args.emit_bir or args.emit_oir or args.opt_stats):
        print(f"instructions: {b.instr_count}")
    return 0


def cmd_compile(args) -> int:
    from . import backends

    b, _, _, _ = _build_bir(args, optimize=not args.no_opt)
    layout = backends.build_layout(b)
    if args.backend == "c":
        unit = backends.emit_c(b, layout)
        ext = ".c"
    else:
        unit = backends.emit_python(b, layout)
        ext = ".py"
    out = args.output or ("program" + ext)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(unit.source)
    with open(os.path.splitext(out)[0] + ".manifest.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(unit.manifest_jsonl())
    print(f"wrote {out}")
    return 0


def cmd_test(args) -> int:
    m_program, ordered, mpp, spec = _load(args)
    cases = frontend.parse_tests(args.tests, m_program)
    mode = _mode(args)
    failures = 0
    for case in cases:
        report = interp.run_test(case, mpp, ordered, args.entry, mode)
        print(report)
        if not report.passed:
            failures += 1
    if args.backend in ("python", "all") and mode is NumericMode.BINARY64:
        b = bir_mod.inline(mpp, ordered, spec, args.entry)
        stores = [interp.store_from_test(c, ordered.decls) for c in cases]
        records = harness.diff_run(b, stores, include_python=True)
        for rec in records:
            print(
                f"DIFF {cases[rec.case_index].name} [{rec.backend}] "
                f"{rec.key}: {rec.want} != {rec.got}"
            )
            failures += 1
        if not records:
            print(f"backend agreement: python ok over {len(cases)} cases")
    print(f"{len(cases) - failures}/{len(cases)} passed")
    return 1 if failures else 0


def cmd_coverage(args) -> int:
    m_program, ordered, mpp, spec = _load(args)
    cases = frontend.parse_tests(args.tests, m_program)
    b = bir_mod.inline(mpp, ordered, spec, args.entry)
    if args.optimized:
        b, _ = optimizer.optimize(b, fast_math=args.fast_math)
    stores = [interp.store_from_test(c, ordered.decls) for c in cases]
    cov = harness.measure_coverage(b, stores)
    sys.stdout.write(cov.to_csv())
    buckets = cov.buckets()
    sys.stderr.write(
        "buckets: " + " ".join(f"{k}={buckets[k]}" for k in ("0", "1", "2", "3+", "16+")) + "\n"
    )
    return 0


def cmd_fuzz(args) -> int:
    m_program, ordered, mpp, spec = _load(args)
    cases = frontend.parse_tests(args.tests, m_program)
    new = harness.mutate_tests(
        cases, mpp, ordered, count=args.count, seed=args.seed, entry=args.entry
    )
    if args.minimize:
        b = bir_mod.inline(mpp, ordered, spec, args.entry)
        new = harness.minimize_corpus(b, cases + new, ordered.decls)
        new = [c for c in new if c.name.startswith("fuzz_")]
    os.makedirs(args.output, exist_ok=True)
    for case in new:
        path = os.path.join(args.output, case.name + ".mtest")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(harness.format_test(case))
    print(f"wrote {len(new)} cases to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtoy", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and check a rule set")
    _add_program_args(p, need_driver=False)
    p.add_argument("--emit-order", action="store_true")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="run the driver on inputs")
    _add_program_args(p)
    p.add_argument("--input", action="append", metavar="NAME=VALUE")
    p.add_argument("--test", help="take inputs from a .mtest file")
    p.add_argument("--mode", choices=["binary64", "rational"], default="binary64")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("optimize", help="inline and optimize")
    _add_program_args(p)
    p.add_argument("--fast-math", dest="fast_math", action="store_true")
    p.add_argument("--emit-bir", action="store_true")
    p.add_argument("--emit-oir", action="store_true", help="dump the CFG as DOT")
    p.add_argument("--opt-stats", action="store_true")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("compile", help="emit a backend module")
    _add_program_args(p)
    p.add_argument("--backend", choices=["c", "python"], default="c")
    p.add_argument("--fast-math", dest="fast_math", action="store_true")
    p.add_argument("--no-opt", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("test", help="run a .mtest corpus")
    _add_program_args(p)
    p.add_argument("--tests", required=True, help="directory of .mtest files")
    p.add_argument("--mode", choices=["binary64", "rational"], default="binary64")
    p.add_argument("--backend", choices=["interp", "python", "all"], default="interp")
    p.set_defaults(fn=cmd_test)

    p = sub.add_parser("coverage", help="value coverage over a corpus")
    _add_program_args(p)
    p.add_argument("--tests", required=True)
    p.add_argument("--optimized", action="store_true")
    p.add_argument("--fast-math", dest="fast_math", action="store_true")
    p.set_defaults(fn=cmd_coverage)

    p = sub.add_parser("fuzz", help="mutation-fuzz new test cases")
    _add_program_args(p)
    p.add_argument("--tests", required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--minimize", action="store_true")
    p.add_argument("-o", "--output", required=True, help="directory for new cases")
    p.set_defaults(fn=cmd_fuzz)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MtoyError as e:
        print(f"mtoy: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
