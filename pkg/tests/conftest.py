"""Shared fixtures: the bundled corpus, parsed once per session, and a
fast random-program generator used by the property tests."""

from __future__ import annotations

import os
import random

import pytest

from mtoy import bir, frontend, sema
from mtoy.ast import (
    Assign, ArrayAssign, Binop, Call, CondExpr, IndexAccess, Lit, MProgram,
    RaiseIf, SYNTH, Unop, Var, VarDecl, ErrorDecl,
)

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")
CORPUS_M = [
    os.path.join(CORPUS, "income_rules.m"),
    os.path.join(CORPUS, "credit_rules.m"),
]
CORPUS_MPP = os.path.join(CORPUS, "driver.mpp")
CORPUS_TESTS = os.path.join(CORPUS, "tests")
CRUNTIME = os.path.join(ROOT, "cruntime")


@pytest.fixture(scope="session")
def corpus_m() -> MProgram:
    return frontend.parse_m(CORPUS_M)


@pytest.fixture(scope="session")
def corpus_ordered(corpus_m):
    ordered = sema.order_rules(corpus_m)
    sema.typecheck(ordered)
    return ordered


@pytest.fixture(scope="session")
def corpus_mpp(corpus_m):
    mpp = frontend.parse_mpp(CORPUS_MPP, corpus_m)
    sema.check_kind_uses(mpp, sema.build_kind_index(corpus_m))
    return mpp


@pytest.fixture(scope="session")
def corpus_spec(corpus_m):
    return frontend.parse_assumptions(os.path.join(CORPUS, "all.mast"), corpus_m)


@pytest.fixture(scope="session")
def corpus_spec_basic(corpus_m):
    return frontend.parse_assumptions(os.path.join(CORPUS, "basic.mast"), corpus_m)


@pytest.fixture(scope="session")
def corpus_cases(corpus_m):
    return frontend.parse_tests(CORPUS_TESTS, corpus_m)


@pytest.fixture(scope="session")
def corpus_bir(corpus_mpp, corpus_ordered, corpus_spec):
    return bir.inline(corpus_mpp, corpus_ordered, corpus_spec)


# ---------------------------------------------------------------------------
# random well-typed program generation (plain random.Random: fast enough
# for the 10k-program property, unlike per-example hypothesis overhead)

def random_store(rng: random.Random, input_decls) -> dict:
    """Random store consistent with the declarations: some inputs absent,
    scalars get floats, arrays get per-element floats or undef."""
    store: dict = {}
    for name, decl in input_decls.items():
        if rng.random() < 0.3:
            continue
        if decl.is_array:
            store[name] = [
                None if rng.random() < 0.3 else _rand_float(rng)
                for _ in range(decl.length)
            ]
        else:
            store[name] = _rand_float(rng)
    return store


def _rand_float(rng: random.Random) -> float:
    roll = rng.random()
    if roll < 0.3:
        return float(rng.randint(-10, 10))
    if roll < 0.6:
        return rng.randint(-100000, 100000) / 100.0
    return rng.uniform(-1e6, 1e6)


def random_program(rng: random.Random):
    """A random well-typed M program plus a random consistent store.

    Shapes are respected by construction (scalars referenced bare,
    arrays only through indexing), so typecheck always passes; the
    interesting part is the value-level behavior on random stores.
    """
    n_inputs = rng.randint(1, 4)
    n_rules = rng.randint(2, 10)
    decls: dict[str, VarDecl] = {}
    scalars: list[str] = []
    arrays: dict[str, int] = {}
    for i in range(n_inputs):
        name = f"IN{i}"
        if rng.random() < 0.25:
            length = rng.randint(1, 4)
            decls[name] = VarDecl(SYNTH, name, "input", None, "", length)
            arrays[name] = length
        else:
            decls[name] = VarDecl(SYNTH, name, "input", None, "", None)
            scalars.append(name)

    commands = []
    for i in range(n_rules):
        name = f"V{i}"
        if rng.random() < 0.15:
            length = rng.randint(1, 3)
            body = _rand_expr(rng, scalars, arrays, depth=2, allow_x=True)
            commands.append(ArrayAssign(SYNTH, name, length, body))
            arrays[name] = length
        else:
            expr = _rand_expr(rng, scalars, arrays, depth=3, allow_x=False)
            commands.append(Assign(SYNTH, name, expr))
            scalars.append(name)
    if rng.random() < 0.3 and scalars:
        guard = _rand_expr(rng, scalars, arrays, depth=2, allow_x=False)
        commands.append(RaiseIf(SYNTH, guard, "E1"))
    program = MProgram(decls, {"E1": ErrorDecl(SYNTH, "E1", "random assertion")}, commands)
    store = random_store(rng, decls)
    return program, store


_BINOPS = ("+", "-", "*", "/", "<=", "<", ">", ">=", "==", "!=", "&&", "||")
_FNS = ("round", "truncate", "abs", "pos", "pos_or_null", "null", "present")


def _rand_expr(rng, scalars, arrays, depth, allow_x):
    if depth <= 0 or rng.random() < 0.25:
        roll = rng.random()
        if roll < 0.12:
            return Lit(SYNTH, None, None)
        if roll < 0.45 or not scalars:
            if allow_x and rng.random() < 0.3:
                return Var(SYNTH, "X")
            v = _rand_float(rng)
            return Lit(SYNTH, v, repr(v))
        if allow_x and roll < 0.55:
            return Var(SYNTH, "X")
        return Var(SYNTH, scalars[rng.randrange(len(scalars))])
    roll = rng.random()
    sub = lambda d=depth - 1: _rand_expr(rng, scalars, arrays, d, allow_x)
    if roll < 0.45:
        op = _BINOPS[rng.randrange(len(_BINOPS))]
        return Binop(SYNTH, op, sub(), sub())
    if roll < 0.55:
        return Unop(SYNTH, "neg" if rng.random() < 0.7 else "not", sub())
    if roll < 0.68:
        return CondExpr(SYNTH, sub(), sub(), sub())
    if roll < 0.8 and arrays:
        name = sorted(arrays)[rng.randrange(len(arrays))]
        return IndexAccess(SYNTH, name, sub())
    if roll < 0.9:
        fn = _FNS[rng.randrange(len(_FNS))]
        return Call(SYNTH, fn, (sub(),))
    return Call(SYNTH, "min" if rng.random() < 0.5 else "max", (sub(), sub()))
