"""Reference interpreter tests: expression/statement rules, the M++
driver constructs, and the type-safety property on random programs."""

import random
import time
from fractions import Fraction

import pytest

from mtoy import frontend, interp, sema
from mtoy.ast import Lit, SYNTH
from mtoy.errors import RecursiveCall, UninitializedLocal
from mtoy.values import NumericMode
from conftest import random_program

HEADER = 'IN : input : "in";\nT : input : "t" array[3];\nE1 : exception : "e";\n'


def run(rules: str, store=None, mode=NumericMode.BINARY64):
    program = frontend.parse_m_source(HEADER + rules, "<test>")
    o = sema.order_rules(program)
    sema.typecheck(o)
    s = dict(store or {})
    outcome = interp.run_commands(s, o, mode)
    return outcome, s


def ev(text: str, store=None, mode=NumericMode.BINARY64):
    p = frontend._ExprParser(frontend.tokenize(text, "<e>"), "m")
    return interp.eval_expr(dict(store or {}), p.expr(), mode)


class TestExpressionRules:
    def test_value(self):  # D-VALUE
        assert ev("3.5") == 3.5
        assert ev("undef") is None

    def test_var(self):  # D-VAR / D-VAR-UNDEF
        assert ev("A", {"A": 2.0}) == 2.0
        assert ev("A", {}) is None

    def test_cond_true(self):  # D-COND-TRUE: any non-zero float
        assert ev("if 0 - 2 then 10 else 20 endif") == 10.0

    def test_cond_false(self):  # D-COND-FALSE
        assert ev("if 0 then 10 else 20 endif") == 20.0

    def test_cond_undef(self):  # D-COND-UNDEF: guard undef -> undef
        assert ev("if A then 10 else 20 endif", {}) is None

    def test_index(self):  # D-INDEX with truncate of the index
        arr = {"T": [10.0, 20.0, 30.0]}
        assert ev("T[1]", arr) == 20.0
        assert ev("T[1.7]", arr) == 20.0  # truncate(1.7) = 1

    def test_index_negative(self):  # D-INDEX-NEG: negative -> 0
        assert ev("T[0 - 1]", {"T": [10.0, 20.0, 30.0]}) == 0.0

    def test_index_outside(self):  # D-INDEX-OUTSIDE: past the end -> undef
        assert ev("T[3]", {"T": [10.0, 20.0, 30.0]}) is None
        assert ev("T[99]", {"T": [10.0, 20.0, 30.0]}) is None
        # truncation's +1e-6 shift can carry an in-range index up to the
        # bound; the truncated index is the one that must be in range
        assert ev("T[2.9999999]", {"T": [10.0, 20.0, 30.0]}) is None
        assert ev("T[2.5]", {"T": [10.0, 20.0, 30.0]}) == 30.0

    def test_index_undef(self):  # D-INDEX-UNDEF: undef index -> undef
        assert ev("T[A]", {"T": [10.0, 20.0, 30.0]}) is None

    def test_tab_undef(self):  # D-TAB-UNDEF: absent array -> undef
        assert ev("NOWHERE[1]", {}) is None

    def test_func(self):  # D-FUNC via the kernel
        assert ev("min(A, 3)", {}) == 0.0
        assert ev("round(2.5)") == 3.0


class TestStatementRules:
    def test_assign(self):  # D-ASSIGN
        outcome, s = run("A = IN + 1;", {"IN": 2.0})
        assert not outcome.raised and s["A"] == 3.0

    def test_assign_undef(self):
        _, s = run("A = IN * 2;")
        assert s["A"] is None

    def test_assert_true(self):  # D-ASSERT-TRUE: non-zero float raises
        outcome, _ = run("if IN > 0 then error E1;", {"IN": 1.0})
        assert outcome.error == "E1"

    def test_assert_other(self):  # D-ASSERT-OTHER: 0 or undef passes
        outcome, _ = run("if IN > 0 then error E1;", {"IN": 0.0})
        assert not outcome.raised
        outcome, _ = run("if IN > 0 then error E1;", {})
        assert not outcome.raised

    def test_error_propagates(self):  # D-ERROR: later commands skipped
        outcome, s = run(
            "A = 1;\nif A > 0 then error E1;\nB = 2;\n", {}
        )
        assert outcome.error == "E1"
        assert "B" not in s

    def test_assign_table(self):  # D-ASSIGN-TABLE: one env per index
        _, s = run("W[X, 3] = X * 10 + IN;", {"IN": 1.0})
        assert s["W"] == [1.0, 11.0, 21.0]

    def test_assign_table_sees_old_array(self):
        # the body reads the array being assigned at its *old* value
        _, s = run("T2[X, 3] = T[X] + T[0];", {"T": [1.0, 2.0, 3.0]})
        assert s["T2"] == [2.0, 3.0, 4.0]

    def test_trace_hook(self):
        seen = []
        program = frontend.parse_m_source(HEADER + "A = 1;\nB = A + 1;", "<t>")
        o = sema.order_rules(program)
        interp.run_commands({}, o, trace=lambda i, t, v: seen.append((t, v)))
        assert ("A", 1.0) in seen and ("B", 2.0) in seen


MPP_M = """
A : input somekind : "a";
B : input somekind : "b";
C : input otherkind : "c";
OUT : output : "out";
OUT2 : output : "out2";
E1 : exception : "e";
OUT = A + B * 2 + C;
if A > 100 then error E1;
"""


def run_mpp(driver: str, inputs, m_src: str = MPP_M, entry="main"):
    m = frontend.parse_m_source(m_src, "<m>")
    o = sema.order_rules(m)
    sema.typecheck(o)
    mpp = frontend.parse_mpp_source(driver, "<mpp>", m)
    return interp.run_mpp(mpp, o, entry, dict(inputs))


class TestMpp:
    def test_call_target_filtering(self):
        # only listed targets propagate out of the call's scope copy
        out = run_mpp(
            "main():\n    OUT <- call_m()\n    OUT2 = A\n",
            {"A": 1.0, "B": 2.0, "C": 3.0},
        )
        assert out.store["OUT"] == 8.0
        assert out.store["OUT2"] == 1.0

    def test_call_propagates_absence(self):
        # a target the callee leaves undef is removed from the caller too
        out = run_mpp(
            "f():\n    del OUT\n    OUT2 = 1\nmain():\n    OUT, OUT2 <- f()\n",
            {"OUT": 5.0},
        )
        assert out.store.get("OUT") is None
        assert out.store["OUT2"] == 1.0

    def test_partition_masks_and_restores(self):
        out = run_mpp(
            "main():\n"
            "    partition with somekind:\n"
            "        OUT <- call_m()\n"
            "    OUT2 = A\n",
            {"A": 10.0, "B": 20.0, "C": 1.0},
        )
        # inside the partition A and B read as undef: OUT = undef+undef*2+1
        assert out.store["OUT"] == 1.0
        # after the partition the old values are restored
        assert out.store["OUT2"] == 10.0

    def test_exists_both_branches(self):
        drv = (
            "main():\n"
            "    if exists(somekind):\n"
            "        OUT2 = 1\n"
            "    else:\n"
            "        OUT2 = 2\n"
        )
        assert run_mpp(drv, {"A": 0.0}).store["OUT2"] == 1.0  # 0.0 is present
        assert run_mpp(drv, {"C": 5.0}).store["OUT2"] == 2.0

    def test_cast_both_branches(self):
        drv = "main():\n    OUT2 = cast(A) + 1\n"
        assert run_mpp(drv, {"A": 4.0}).store["OUT2"] == 5.0
        assert run_mpp(drv, {}).store["OUT2"] == 1.0

    def test_delete(self):
        out = run_mpp("main():\n    del A\n    OUT2 = present(A)\n", {"A": 3.0})
        assert out.store["OUT2"] == 0.0
        assert out.store.get("A") is None

    def test_if_undef_guard_takes_else(self):
        drv = "main():\n    if A > 0:\n        OUT2 = 1\n    else:\n        OUT2 = 2\n"
        assert run_mpp(drv, {}).store["OUT2"] == 2.0

    def test_locals_are_frame_scoped(self):
        drv = (
            "helper():\n    x = 99\n    OUT2 = x\n"
            "main():\n    x = 1\n    OUT2 <- helper()\n    OUT = x + OUT2\n"
        )
        out = run_mpp(drv, {})
        assert out.store["OUT"] == 100.0

    def test_uninitialized_local(self):
        with pytest.raises(UninitializedLocal):
            run_mpp("main():\n    OUT = y + 1\n", {})

    def test_error_propagates_out_of_driver(self):
        out = run_mpp("main():\n    OUT <- call_m()\n", {"A": 500.0})
        assert out.error == "E1"

    def test_recursion_rejected(self):
        with pytest.raises(RecursiveCall):
            run_mpp(
                "f():\n    OUT <- g()\ng():\n    OUT <- f()\n"
                "main():\n    OUT <- f()\n",
                {},
            )

    def test_fig8_shape_hand_oracle(self):
        """Partition plus a 5-target call, checked against hand arithmetic."""
        m_src = """
V1 : input benefit : "v1";
V2 : input benefit : "v2";
W : input : "w";
O1 : output : "o1";
O2 : output : "o2";
O3 : output : "o3";
O4 : output : "o4";
O5 : output : "o5";
O1 = V1 + V2;
O2 = V1 * 2;
O3 = W + 1;
O4 = present(V1);
O5 = min(V2, W);
"""
        drv = (
            "main():\n"
            "    partition with benefit:\n"
            "        O1, O2, O3, O4, O5 <- call_m()\n"
        )
        out = run_mpp(drv, {"V1": 10.0, "V2": 20.0, "W": 5.0}, m_src=m_src)
        s = out.store
        # inside the partition V1 = V2 = undef, W = 5:
        assert s["O1"] is None          # undef + undef
        assert s["O2"] is None          # undef * 2
        assert s["O3"] == 6.0           # 5 + 1
        assert s["O4"] == 0.0           # present(undef)
        assert s["O5"] == 0.0           # min(undef, 5) = min(0, 5)
        # and the partitioned inputs are restored afterwards
        assert s["V1"] == 10.0 and s["V2"] == 20.0


class TestRationalMode:
    def test_exact_fractions(self):
        outcome, s = run(
            "A = IN / 3;\nB = A * 3;\n",
            {"IN": Fraction(1)},
            mode=NumericMode.RATIONAL,
        )
        assert s["B"] == Fraction(1)

    def test_literals_exact(self):
        _, s = run("A = 0.1 + 0.2;", {}, mode=NumericMode.RATIONAL)
        assert s["A"] == Fraction(3, 10)

    def test_corpus_tests_pass_in_both_modes(
        self, corpus_cases, corpus_mpp, corpus_ordered
    ):
        for case in corpus_cases:
            for mode in (NumericMode.BINARY64, NumericMode.RATIONAL):
                report = interp.run_test(case, corpus_mpp, corpus_ordered, "main", mode)
                assert report.passed, f"{case.name} [{mode}]: {report.diffs}"


class TestTypeSafetyProperty:
    def test_random_programs_never_fault(self):
        """A smaller, always-on version of the acceptance property."""
        rng = random.Random(12345)
        for _ in range(500):
            program, store = random_program(rng)
            o = sema.order_rules(program)
            sema.typecheck(o)
            outcome = interp.run_commands(dict(store), o)
            assert outcome.raised or outcome.store is not None
