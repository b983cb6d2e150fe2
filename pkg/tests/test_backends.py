"""Storage layout, manifests, and the emitted Python module."""

import json
import random
import struct

import pytest

from mtoy import backends, bir, frontend, harness, sema
from mtoy.ast import AssumptionSpec, Lit, SYNTH
from mtoy.errors import IdentifierOverflow
from conftest import random_store


def build_bir(m_src: str, driver: str = "main():\n    OUT <- call_m()\n",
              inputs=None, outputs=None):
    m = frontend.parse_m_source(m_src, "<m>")
    o = sema.order_rules(m)
    sema.typecheck(o)
    mpp = frontend.parse_mpp_source(driver, "<mpp>", m)
    spec = AssumptionSpec(
        frozenset(inputs if inputs is not None else m.inputs()),
        frozenset(outputs if outputs is not None else m.outputs()),
    )
    return bir.inline(mpp, o, spec)


SIMPLE = ('A : input : "a";\nS : input : "s" array[3];\n'
          'OUT : output : "o";\nOUT = A + S[1];\n')


class TestLayout:
    def test_slots_sorted_and_arrays_contiguous(self):
        b = build_bir(SIMPLE)
        layout = backends.build_layout(b)
        names = sorted(layout.slots)
        # slot order follows name order
        offsets = [layout.slots[n] for n in names]
        assert offsets == sorted(offsets)
        base = layout.slot("S", 0)
        assert layout.slot("S", 2) == base + 2
        scalars = [n for n in names if n not in layout.lengths]
        assert layout.total_slots == len(scalars) + sum(layout.lengths.values())

    def test_deterministic(self):
        b1 = build_bir(SIMPLE)
        b2 = build_bir(SIMPLE)
        assert backends.build_layout(b1).slots == backends.build_layout(b2).slots


class TestManifest:
    def test_roles_and_jsonl(self):
        b = build_bir(SIMPLE)
        unit = backends.emit_python(b)
        roles = {row["name"]: row["role"] for row in unit.manifest}
        assert roles["A"] == "input"
        assert roles["S"] == "input"
        assert roles["OUT"] == "output"
        for line in unit.manifest_jsonl().strip().split("\n"):
            row = json.loads(line)
            assert set(row) == {"name", "slot", "length", "role"}

    def test_positions(self):
        b = build_bir(SIMPLE)
        unit = backends.emit_python(b)
        ins = backends.input_positions(unit.manifest)
        outs = backends.output_positions(unit.manifest)
        assert ("A", None) in ins and ("S", 1) in ins
        assert outs == [("OUT", None)]


class TestPythonBackend:
    def test_reemission_byte_identical(self, corpus_bir):
        a = backends.emit_python(corpus_bir)
        b = backends.emit_python(corpus_bir)
        assert a.source == b.source
        assert a.manifest == b.manifest

    def test_runner_matches_reference(self, corpus_bir, corpus_m, corpus_spec):
        runner = harness.PythonModuleRunner(backends.emit_python(corpus_bir))
        rng = random.Random(2024)
        input_decls = {
            n: d for n, d in corpus_m.decls.items() if n in corpus_spec.inputs
        }
        for _ in range(50):
            store = random_store(rng, input_decls)
            want = bir.run_bir(corpus_bir, store)
            got_outputs, got_err = runner.run(harness.flat_inputs(store))
            assert got_err == want.error
            if want.error is None:
                for name in corpus_spec.outputs:
                    assert harness.bits_of(got_outputs.get(name)) == harness.bits_of(
                        want.store.get(name)
                    ), name

    def test_negative_zero_survives(self):
        b = build_bir('A : input : "a";\nOUT : output : "o";\nOUT = A * -1;\n')
        runner = harness.PythonModuleRunner(backends.emit_python(b))
        outputs, err = runner.run({"A": 0.0})
        assert err is None
        assert struct.pack("<d", outputs["OUT"])[-1] & 0x80

    def test_index_edges(self):
        b = build_bir(
            'S : input : "s" array[2];\nI : input : "i";\nOUT : output : "o";\n'
            "OUT = S[I];\n"
        )
        runner = harness.PythonModuleRunner(backends.emit_python(b))
        flat = {"S[0]": 10.0, "S[1]": 20.0}
        assert runner.run({**flat, "I": 1.9})[0]["OUT"] == 20.0
        assert runner.run({**flat, "I": -1.0})[0]["OUT"] == 0.0
        # undef outputs are omitted from the result mapping
        assert runner.run({**flat, "I": 2.0})[0].get("OUT") is None
        assert runner.run(flat)[0].get("OUT") is None  # undef index

    def test_error_reported(self):
        b = build_bir(
            'A : input : "a";\nOUT : output : "o";\nE1 : exception : "e";\n'
            "OUT = A;\nif A > 10 then error E1;\n"
        )
        runner = harness.PythonModuleRunner(backends.emit_python(b))
        assert runner.run({"A": 11.0})[1] == "E1"
        assert runner.run({"A": 1.0})[1] is None

    def test_chunking_splits_long_programs(self):
        n = backends.CHUNK_LIMIT + 50
        rules = "".join(f"V{i:04d} = {i};\n" for i in range(n))
        rules += "OUT = V0000 + V%04d;\n" % (n - 1)
        b = build_bir('A : input : "a";\nOUT : output : "o";\n' + rules)
        unit = backends.emit_python(b)
        assert unit.source.count("def _chunk") >= 2
        runner = harness.PythonModuleRunner(unit)
        assert runner.run({})[0]["OUT"] == float(n - 1)

    def test_c_source_shape(self, corpus_bir):
        unit = backends.emit_c(corpus_bir)
        assert unit.language == "c"
        assert '#include "m_runtime.h"' in unit.source
        assert "const char *program_run" in unit.source
        # hexfloat literals, not decimal approximations
        assert "0x1." in unit.source


class TestIdentifierCap:
    def test_overflow_raises(self):
        name = "V" + "X" * (backends.IDENT_CAP + 1)
        b = build_bir(
            f'A : input : "a";\nOUT : output : "o";\n{name} = 1;\nOUT = {name};\n'
        )
        with pytest.raises(IdentifierOverflow):
            backends.emit_python(b)
