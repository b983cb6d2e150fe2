"""Unit tests for the value kernel: undef tables, rounding, builtins."""

import math
import struct
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mtoy import values as V

U = None


def bits(x):
    return None if x is None else struct.pack("<d", x)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
small = st.floats(min_value=-1e9, max_value=1e9, allow_nan=False)


class TestAddSub:
    def test_both_undef(self):
        assert V.eval_binop("+", U, U) is None
        assert V.eval_binop("-", U, U) is None

    def test_left_undef_acts_as_zero(self):
        assert V.eval_binop("+", U, 3.0) == 3.0
        assert V.eval_binop("-", U, 3.0) == -3.0

    def test_right_undef_acts_as_zero(self):
        assert V.eval_binop("+", 3.0, U) == 3.0
        assert V.eval_binop("-", 3.0, U) == 3.0

    def test_float_float(self):
        assert V.eval_binop("+", 1.5, 2.25) == 3.75

    @given(small, small)
    def test_ieee_add(self, a, b):
        assert bits(V.eval_binop("+", a, b)) == bits(a + b)


class TestMulDiv:
    def test_undef_absorbs(self):
        assert V.eval_binop("*", U, 5.0) is None
        assert V.eval_binop("*", 5.0, U) is None
        assert V.eval_binop("/", U, 5.0) is None
        assert V.eval_binop("/", 5.0, U) is None
        assert V.eval_binop("*", U, U) is None

    def test_division_by_zero_is_zero(self):
        assert V.eval_binop("/", 7.0, 0.0) == 0.0
        assert V.eval_binop("/", -7.0, 0.0) == 0.0
        assert V.eval_binop("/", 0.0, 0.0) == 0.0

    def test_plain(self):
        assert V.eval_binop("*", 3.0, 4.0) == 12.0
        assert V.eval_binop("/", 1.0, 8.0) == 0.125

    @given(small, small.filter(lambda x: x != 0))
    def test_ieee_div(self, a, b):
        assert bits(V.eval_binop("/", a, b)) == bits(a / b)


class TestBoolOps:
    @pytest.mark.parametrize("op", ["<=", "<", ">", ">=", "==", "!=", "&&", "||"])
    def test_undef_absorbs(self, op):
        assert V.eval_binop(op, U, 1.0) is None
        assert V.eval_binop(op, 1.0, U) is None
        assert V.eval_binop(op, U, U) is None

    def test_comparisons(self):
        assert V.eval_binop("<=", 1.0, 1.0) == 1.0
        assert V.eval_binop("<", 1.0, 1.0) == 0.0
        assert V.eval_binop(">", 2.0, 1.0) == 1.0
        assert V.eval_binop(">=", 0.0, 1.0) == 0.0
        assert V.eval_binop("==", 2.0, 2.0) == 1.0
        assert V.eval_binop("!=", 2.0, 2.0) == 0.0

    def test_logic_nonzero_is_true(self):
        assert V.eval_binop("&&", 2.0, -3.0) == 1.0
        assert V.eval_binop("&&", 2.0, 0.0) == 0.0
        assert V.eval_binop("||", 0.0, 0.0) == 0.0
        assert V.eval_binop("||", 0.0, 0.5) == 1.0


class TestUnops:
    def test_neg(self):
        assert V.eval_unop("neg", U) is None
        assert V.eval_unop("neg", 2.0) == -2.0
        assert bits(V.eval_unop("neg", 0.0)) == bits(-0.0)

    def test_not(self):
        assert V.eval_unop("not", U) is None
        assert V.eval_unop("not", 0.0) == 1.0
        assert V.eval_unop("not", 3.0) == 0.0
        assert V.eval_unop("not", -0.5) == 0.0


class TestRound:
    # the deployed behavior: add +/-0.50005 then truncate toward zero
    @pytest.mark.parametrize(
        "x,expected",
        [
            (2.5, 3.0),
            (-2.5, -3.0),
            (2.4, 2.0),
            (-2.4, -2.0),
            (0.49994, 0.0),
            (0.49995, 1.0),
            (2.9999999, 3.0),
            (0.5, 1.0),
            (-0.5, -1.0),
            (0.0, 0.0),
            (1e15, 1e15),
        ],
    )
    def test_edge_values(self, x, expected):
        assert V.round_m(x) == expected

    def test_undef(self):
        assert V.builtin("round", [U]) is None

    def test_rational_goes_through_binary64(self):
        # rational mode rounds by converting to binary64 first, by design
        assert V.builtin("round", [Fraction("0.49995")]) == Fraction(1)
        assert V.builtin("round", [Fraction(5, 2)]) == Fraction(3)

    @given(st.floats(min_value=-1e12, max_value=1e12, allow_nan=False))
    def test_result_is_integral(self, x):
        r = V.round_m(x)
        assert r == math.trunc(r)


class TestTruncate:
    @pytest.mark.parametrize(
        "x,expected",
        [
            (2.9, 2.0),
            (2.9999999, 3.0),  # within the 1e-6 fudge band
            (-2.1, -3.0),  # floor, not trunc
            (0.9999999, 1.0),
            (5.0, 5.0),
            (-0.5, -1.0),
        ],
    )
    def test_edge_values(self, x, expected):
        assert V.truncate_m(x) == expected

    def test_undef(self):
        assert V.builtin("truncate", [U]) is None


class TestMinMax:
    def test_both_undef(self):
        assert V.builtin("min", [U, U]) is None
        assert V.builtin("max", [U, U]) is None

    def test_single_undef_acts_as_zero(self):
        assert V.builtin("min", [U, 3.0]) == 0.0
        assert V.builtin("min", [U, -3.0]) == -3.0
        assert V.builtin("max", [3.0, U]) == 3.0
        assert V.builtin("max", [-3.0, U]) == 0.0

    def test_plain(self):
        assert V.builtin("min", [2.0, 5.0]) == 2.0
        assert V.builtin("max", [2.0, 5.0]) == 5.0

    def test_tie_keeps_first_argument_bits(self):
        # ties return the first argument; observable through signed zero
        assert bits(V.builtin("min", [0.0, -0.0])) == bits(0.0)
        assert bits(V.builtin("min", [-0.0, 0.0])) == bits(-0.0)
        assert bits(V.builtin("max", [0.0, -0.0])) == bits(0.0)
        assert bits(V.builtin("max", [-0.0, 0.0])) == bits(-0.0)


class TestComparisonBuiltins:
    def test_abs(self):
        assert V.builtin("abs", [U]) is None
        assert V.builtin("abs", [-2.5]) == 2.5
        assert V.builtin("abs", [2.5]) == 2.5

    def test_pos_family(self):
        assert V.builtin("pos", [U]) is None
        assert V.builtin("pos", [0.0]) == 0.0
        assert V.builtin("pos", [1e-9]) == 1.0
        assert V.builtin("pos_or_null", [0.0]) == 1.0
        assert V.builtin("pos_or_null", [-1.0]) == 0.0
        assert V.builtin("null", [0.0]) == 1.0
        assert V.builtin("null", [2.0]) == 0.0
        assert V.builtin("null", [U]) is None

    def test_present(self):
        assert V.builtin("present", [U]) == 0.0
        assert V.builtin("present", [0.0]) == 1.0
        assert V.builtin("present", [-7.0]) == 1.0


class TestRationalMode:
    def test_exact_arithmetic(self):
        third = Fraction(1, 3)
        assert V.eval_binop("+", third, third) == Fraction(2, 3)
        assert V.eval_binop("*", third, Fraction(3)) == Fraction(1)

    def test_undef_rules_match(self):
        assert V.eval_binop("+", U, Fraction(3)) == Fraction(3)
        assert V.eval_binop("*", U, Fraction(3)) is None
        assert V.builtin("min", [U, Fraction(3)]) == Fraction(0)

    def test_division_by_zero(self):
        assert V.eval_binop("/", Fraction(5), Fraction(0)) == Fraction(0)

    def test_to_binary64(self):
        assert V.to_binary64(Fraction(1, 4)) == 0.25
        assert V.to_binary64(None) is None


class TestLiterals:
    def test_literal_from_text_exact_in_rational(self):
        assert V.literal_from_text("0.1", V.NumericMode.RATIONAL) == Fraction(1, 10)
        assert V.literal_from_text("0.1", V.NumericMode.BINARY64) == 0.1

    def test_arity_table(self):
        assert V.ARITY["round"] == 1
        assert V.ARITY["min"] == 2
        assert "cast" not in V.ARITY  # cast is an M++ builtin
