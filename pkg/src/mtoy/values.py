"""Semantic kernel: M values and the operator/builtin tables.

A value is either undef (represented as None) or a scalar number. In
binary64 mode scalars are Python floats (IEEE-754 doubles, round to
nearest, ties to even). In exact-rational mode scalars are
``fractions.Fraction`` and arithmetic is exact; the legal rounding
builtins still go through binary64, by design.

The undef rules are bespoke per operator:

* ``+``/``-``: one undef operand behaves like 0; both undef gives undef.
* ``*``/``/``: undef is absorbing.
* comparisons, ``&&``, ``||``: undef is absorbing.
* division by a defined 0 yields 0 (never inf/NaN).
* ``min``/``max``: both undef gives undef, a single undef behaves like 0.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction

UNDEF = None

Scalar = float | Fraction
Value = Scalar | None


class NumericMode(Enum):
    BINARY64 = "binary64"
    RATIONAL = "rational"


ARITH_OPS = ("+", "-", "*", "/")
BOOL_OPS = ("<=", "<", ">", ">=", "==", "!=", "&&", "||")
BINOPS = ARITH_OPS + BOOL_OPS

UNARY_BUILTINS = ("round", "truncate", "abs", "pos", "pos_or_null", "null", "present")
BINARY_BUILTINS = ("min", "max")
BUILTINS = UNARY_BUILTINS + BINARY_BUILTINS

#: builtin name -> arity
ARITY = {name: 1 for name in UNARY_BUILTINS} | {name: 2 for name in BINARY_BUILTINS}


def _zero(x: Scalar) -> Scalar:
    return Fraction(0) if isinstance(x, Fraction) else 0.0


def _bool(truth: bool, like: Scalar) -> Scalar:
    if isinstance(like, Fraction):
        return Fraction(1) if truth else Fraction(0)
    return 1.0 if truth else 0.0


def is_true(v: Value) -> bool:
    """Guard truthiness: defined and non-zero."""
    return v is not None and v != 0


def eval_binop(op: str, a: Value, b: Value) -> Value:
    if op in ("+", "-"):
        if a is None and b is None:
            return None
        if a is None:
            a = _zero(b)
        elif b is None:
            b = _zero(a)
        return a + b if op == "+" else a - b
    if op in ("*", "/"):
        if a is None or b is None:
            return None
        if op == "*":
            return a * b
        if b == 0:
            return _zero(a)
        return a / b
    # boolean operators: undef absorbs
    if a is None or b is None:
        return None
    if op == "<=":
        return _bool(a <= b, a)
    if op == "<":
        return _bool(a < b, a)
    if op == ">":
        return _bool(a > b, a)
    if op == ">=":
        return _bool(a >= b, a)
    if op == "==":
        return _bool(a == b, a)
    if op == "!=":
        return _bool(a != b, a)
    if op == "&&":
        return _bool(a != 0 and b != 0, a)
    if op == "||":
        return _bool(a != 0 or b != 0, a)
    raise ValueError(f"unknown binop {op!r}")


def eval_unop(op: str, a: Value) -> Value:
    if a is None:
        return None
    if op == "neg":
        return -a
    if op == "not":
        return _bool(a == 0, a)
    raise ValueError(f"unknown unop {op!r}")


def round_m(a: Value) -> Value:
    """Legal rounding: shift by 0.50005 away from zero, then truncate
    toward zero (the deployed long-long cast), all in binary64."""
    if a is None:
        return None
    if isinstance(a, Fraction):
        return Fraction(round_m(float(a)))
    shifted = a - 0.50005 if a < 0 else a + 0.50005
    return float(math.trunc(shifted))


def truncate_m(a: Value) -> Value:
    """Legal truncation: floor(f + 1e-6) in binary64."""
    if a is None:
        return None
    if isinstance(a, Fraction):
        return Fraction(truncate_m(float(a)))
    return float(math.floor(a + 0.000001))


def _min2(a: Scalar, b: Scalar) -> Scalar:
    # ties keep the first argument; matters for -0.0 vs +0.0
    return b if b < a else a


def _max2(a: Scalar, b: Scalar) -> Scalar:
    return b if b > a else a


def builtin(name: str, args: list[Value]) -> Value:
    """Evaluate a builtin on already-evaluated scalar arguments."""
    if name == "round":
        return round_m(args[0])
    if name == "truncate":
        return truncate_m(args[0])
    if name == "present":
        a = args[0]
        return 0.0 if a is None else _bool(True, a)
    if name in ("min", "max"):
        a, b = args
        if a is None and b is None:
            return None
        if a is None:
            a = _zero(b)
        elif b is None:
            b = _zero(a)
        return _min2(a, b) if name == "min" else _max2(a, b)
    # the remaining builtins are defined by expansion, hence undef-propagating
    a = args[0]
    if name == "abs":
        # if a >= 0 then a else -a
        if a is None:
            return None
        return a if a >= 0 else -a
    if name == "pos":
        return eval_binop(">", a, None if a is None else _zero(a))
    if name == "pos_or_null":
        return eval_binop(">=", a, None if a is None else _zero(a))
    if name == "null":
        return eval_binop("==", a, None if a is None else _zero(a))
    raise ValueError(f"unknown builtin {name!r}")


def to_binary64(v: Value) -> float | None:
    """Round a value to binary64, for cross-mode comparison."""
    if v is None:
        return None
    return float(v)


def literal(text_value: float, mode: NumericMode) -> Scalar:
    """Convert a parsed binary64 literal into the mode's scalar type.

    In rational mode the original decimal spelling should be used where
    available; this fallback converts the binary64 value exactly.
    """
    if mode is NumericMode.RATIONAL:
        return Fraction(text_value)
    return text_value


def literal_from_text(text: str, mode: NumericMode) -> Scalar:
    """Parse a decimal literal for the given mode.

    Binary64 mode uses the host's correctly rounded decimal conversion;
    rational mode keeps the exact decimal fraction.
    """
    if mode is NumericMode.RATIONAL:
        return Fraction(text)
    return float(text)
