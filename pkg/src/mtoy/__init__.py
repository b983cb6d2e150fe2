"""mtoy: a small compiler toolchain for the M tax-rule language and its
M++ driver language.

Pipeline: frontend (parse) -> sema (order/typecheck) -> interp
(reference semantics, binary64 or exact-rational) -> bir (inlined
backend IR) -> optimizer (definedness analysis, partial evaluation,
DCE) -> backends (C and Python emission) -> harness (differential
testing, coverage, fuzzing).
"""

__version__ = "0.1.0"

__all__ = [
    "frontend",
    "sema",
    "values",
    "interp",
    "bir",
    "optimizer",
    "backends",
    "harness",
    "cli",
]
