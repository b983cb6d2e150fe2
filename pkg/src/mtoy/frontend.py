"""Lexing and parsing for .m rule files, .mpp drivers, .mast assumption
files and .mtest test cases, plus the matching pretty-printers.

The concrete grammar is documented in docs/grammar.md. All files are
UTF-8 with LF line endings. Parsing is pure: the same bytes always
produce the same AST.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from . import ast
from .ast import (
    ArrayAssign, Assign, AssumptionSpec, Binop, Call, CondExpr, ErrorDecl,
    Exists, Expr, IndexAccess, Lit, MppAssign, MppCall, MppCommand, MppDel,
    MppFunction, MppIf, MppPartition, MppProgram, MProgram, RaiseIf, Span,
    TestCase, Unop, Var, VarDecl,
)
from .errors import (
    DuplicateDeclaration, ParseError, ShadowingError, UnknownErrorCode,
    UnknownFunction,
)
from .values import ARITY

M_KEYWORDS = {
    "if", "then", "else", "endif", "error", "undef", "array",
    "input", "intermediate", "output", "exception",
}

RESERVED_CALL = "call_m"

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


# ---------------------------------------------------------------------------
# lexer

@dataclass(frozen=True)
class Token:
    kind: str  # 'name' | 'number' | 'string' | 'op' | 'eof'
    text: str
    span: Span


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<op><-|<=|>=|==|!=|&&|\|\||[-+*/<>=~:;,()\[\]])
    """,
    re.VERBOSE,
)


def tokenize(text: str, filename: str, keep_newlines: bool = False) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            span = Span(filename, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        tok_text = m.group()
        span = Span(filename, line, pos - line_start + 1)
        if kind == "newline":
            if keep_newlines:
                tokens.append(Token("newline", "\n", span))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, tok_text, span))
        pos = m.end()
    tokens.append(Token("eof", "", Span(filename, line, pos - line_start + 1)))
    return tokens


# ---------------------------------------------------------------------------
# expression parser (shared between M and M++)

_CMP_OPS = ("<=", "<", ">", ">=", "==", "!=")


class _ExprParser:
    """Recursive-descent expression parser over a token list.

    dialect 'm' allows conditional expressions, index accesses, X and the
    M builtin table; dialect 'mpp' allows exists/cast/present instead.
    """

    def __init__(self, tokens: list[Token], dialect: str):
        self.tokens = tokens
        self.pos = 0
        self.dialect = dialect

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text or tok.kind == "string":
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.span)
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.text == text and tok.kind in ("op", "name")

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.next()
        return None

    # precedence climbing, loosest first
    def expr(self) -> Expr:
        return self.or_expr()

    def _binop_level(self, sub, ops: Iterable[str]) -> Expr:
        left = sub()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in ops:
                self.next()
                right = sub()
                left = Binop(tok.span, tok.text, left, right)
            else:
                return left

    def or_expr(self) -> Expr:
        return self._binop_level(self.and_expr, ("||",))

    def and_expr(self) -> Expr:
        return self._binop_level(self.cmp_expr, ("&&",))

    def cmp_expr(self) -> Expr:
        return self._binop_level(self.add_expr, _CMP_OPS)

    def add_expr(self) -> Expr:
        return self._binop_level(self.mul_expr, ("+", "-"))

    def mul_expr(self) -> Expr:
        return self._binop_level(self.unary, ("*", "/"))

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.next()
            return Unop(tok.span, "neg", self.unary())
        if tok.kind == "op" and tok.text == "~":
            self.next()
            return Unop(tok.span, "not", self.unary())
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.atom()
        if self.dialect == "m" and isinstance(e, Var) and self.at("["):
            self.next()
            idx = self.expr()
            self.expect("]")
            return IndexAccess(e.span, e.name, idx)
        return e

    def atom(self) -> Expr:
        tok = self.next()
        if tok.kind == "number":
            return Lit(tok.span, float(tok.text), tok.text)
        if tok.kind == "op" and tok.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind != "name":
            raise ParseError(f"unexpected token {tok.text!r}", tok.span)
        name = tok.text
        if name == "undef":
            return Lit(tok.span, None, None)
        if name == "if":
            if self.dialect != "m":
                raise ParseError("conditional expressions are not allowed here", tok.span)
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            orelse = self.expr()
            self.expect("endif")
            return CondExpr(tok.span, cond, then, orelse)
        if name in M_KEYWORDS:
            raise ParseError(f"unexpected keyword {name!r}", tok.span)
        if self.at("("):
            return self.call(name, tok.span)
        if name.startswith("__"):
            raise ParseError("names starting with '__' are reserved", tok.span)
        return Var(tok.span, name)

    def call(self, name: str, span: Span) -> Expr:
        self.expect("(")
        if self.dialect == "mpp" and name == "exists":
            kind_tok = self.next()
            if kind_tok.kind != "name":
                raise ParseError("exists() takes a kind name", kind_tok.span)
            self.expect(")")
            return Exists(span, kind_tok.text)
        args: list[Expr] = []
        if not self.at(")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        self.expect(")")
        if self.dialect == "mpp":
            allowed = {"present": 1, "cast": 1}
        else:
            allowed = dict(ARITY)
        if name not in allowed:
            raise ParseError(f"unknown function {name!r}", span)
        if len(args) != allowed[name]:
            raise ParseError(
                f"{name} expects {allowed[name]} argument(s), got {len(args)}", span
            )
        return Call(span, name, tuple(args))


# ---------------------------------------------------------------------------
# M parser

class _MParser(_ExprParser):
    def __init__(self, tokens: list[Token]):
        super().__init__(tokens, "m")


def parse_m_source(text: str, filename: str, program: Optional[MProgram] = None) -> MProgram:
    """Parse one M source file, accumulating into an existing program."""
    if program is None:
        program = MProgram({}, {}, [])
    p = _MParser(tokenize(text, filename))
    while p.peek().kind != "eof":
        _parse_m_item(p, program)
    return program


def parse_m(paths: Iterable[str | os.PathLike]) -> MProgram:
    """Parse a list of .m files into one program and validate error refs."""
    program = MProgram({}, {}, [])
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        parse_m_source(text, str(path), program)
    for cmd in program.commands:
        if isinstance(cmd, RaiseIf) and cmd.error not in program.errors:
            raise UnknownErrorCode(f"unknown error code {cmd.error!r}", cmd.span)
    return program


def _parse_m_item(p: _MParser, program: MProgram) -> None:
    tok = p.peek()
    if tok.kind == "name" and tok.text == "if":
        p.next()
        cond = p.expr()
        p.expect("then")
        p.expect("error")
        code_tok = p.next()
        if code_tok.kind != "name":
            raise ParseError("expected an error code", code_tok.span)
        p.expect(";")
        program.commands.append(RaiseIf(tok.span, cond, code_tok.text))
        return
    if tok.kind != "name" or tok.text in M_KEYWORDS:
        raise ParseError(f"expected a declaration or rule, found {tok.text!r}", tok.span)
    name = tok.text
    if name.startswith("__"):
        raise ParseError("names starting with '__' are reserved", tok.span)
    p.next()
    nxt = p.peek()
    if nxt.text == ":" and nxt.kind == "op":
        p.next()
        _parse_declaration(p, program, name, tok.span)
        return
    if nxt.text == "[" and nxt.kind == "op":
        if name == ast.INDEX_VAR:
            raise ParseError("X is reserved for array indices", tok.span)
        p.next()
        x_tok = p.next()
        if x_tok.text != ast.INDEX_VAR:
            raise ParseError("array assignment must bind X", x_tok.span)
        p.expect(",")
        len_tok = p.next()
        if len_tok.kind != "number" or not len_tok.text.isdigit() or int(len_tok.text) < 1:
            raise ParseError("array length must be a positive integer", len_tok.span)
        p.expect("]")
        p.expect("=")
        body = p.expr()
        p.expect(";")
        program.commands.append(ArrayAssign(tok.span, name, int(len_tok.text), body))
        return
    if nxt.text == "=" and nxt.kind == "op":
        if name == ast.INDEX_VAR:
            raise ParseError("X is reserved for array indices", tok.span)
        p.next()
        expr = p.expr()
        p.expect(";")
        program.commands.append(Assign(tok.span, name, expr))
        return
    raise ParseError(f"expected ':', '=' or '[' after {name!r}", nxt.span)


def _parse_declaration(p: _MParser, program: MProgram, name: str, span: Span) -> None:
    cat_tok = p.next()
    if cat_tok.kind != "name":
        raise ParseError("expected a declaration category", cat_tok.span)
    if cat_tok.text == "exception":
        p.expect(":")
        desc = _parse_string(p)
        p.expect(";")
        if name in program.errors:
            raise DuplicateDeclaration(f"error code {name!r} already declared", span)
        program.errors[name] = ErrorDecl(span, name, desc)
        return
    if cat_tok.text not in ("input", "intermediate", "output"):
        raise ParseError(f"unknown category {cat_tok.text!r}", cat_tok.span)
    kind = None
    if p.peek().kind == "name":
        kind = p.next().text
    p.expect(":")
    desc = _parse_string(p)
    length = None
    if p.accept("array"):
        p.expect("[")
        len_tok = p.next()
        if len_tok.kind != "number" or not len_tok.text.isdigit() or int(len_tok.text) < 1:
            raise ParseError("array length must be a positive integer", len_tok.span)
        length = int(len_tok.text)
        p.expect("]")
    p.expect(";")
    if ast.scope_class(name) != "m":
        raise ParseError("M variables must start with an uppercase letter", span)
    if name == ast.INDEX_VAR:
        raise ParseError("X is reserved for array indices", span)
    if name in program.decls:
        raise DuplicateDeclaration(f"variable {name!r} already declared", span)
    program.decls[name] = VarDecl(span, name, cat_tok.text, kind, desc, length)


def _parse_string(p: _ExprParser) -> str:
    tok = p.next()
    if tok.kind != "string":
        raise ParseError("expected a string literal", tok.span)
    return tok.text[1:-1]


# ---------------------------------------------------------------------------
# M++ parser (indentation based, one command per line)

@dataclass
class _Line:
    indent: int
    tokens: list[Token]
    span: Span


def _logical_lines(text: str, filename: str) -> list[_Line]:
    lines: list[_Line] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent_str = raw[: len(raw) - len(raw.lstrip(" \t"))]
        if "\t" in indent_str:
            raise ParseError("tabs are not allowed in indentation", Span(filename, lineno, 1))
        toks = tokenize(raw, filename)
        toks = [
            Token(t.kind, t.text, Span(filename, lineno, t.span.col)) for t in toks
        ]
        lines.append(_Line(len(indent_str), toks, Span(filename, lineno, len(indent_str) + 1)))
    return lines


def parse_mpp(path: str | os.PathLike, m_program: Optional[MProgram] = None) -> MppProgram:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_mpp_source(text, str(path), m_program)


def parse_mpp_source(
    text: str, filename: str, m_program: Optional[MProgram] = None
) -> MppProgram:
    lines = _logical_lines(text, filename)
    functions: dict[str, MppFunction] = {}
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.indent != 0:
            raise ParseError("expected a function definition at top level", line.span)
        p = _ExprParser(line.tokens, "mpp")
        name_tok = p.next()
        if name_tok.kind != "name" or name_tok.text in M_KEYWORDS:
            raise ParseError("expected a function name", name_tok.span)
        name = name_tok.text
        p.expect("(")
        p.expect(")")
        p.expect(":")
        if p.peek().kind != "eof":
            raise ParseError("function body must start on the next line", p.peek().span)
        if name == RESERVED_CALL:
            raise ParseError("call_m is a reserved function name", name_tok.span)
        if name in functions:
            raise DuplicateDeclaration(f"function {name!r} already defined", name_tok.span)
        body, i = _parse_block(lines, i + 1, indent_gt=0, filename=filename)
        if not body:
            raise ParseError(f"function {name!r} has an empty body", name_tok.span)
        functions[name] = MppFunction(name_tok.span, name, tuple(body))
    program = MppProgram(functions)
    _validate_mpp(program, m_program)
    return program


def _parse_block(
    lines: list[_Line], i: int, indent_gt: int, filename: str
) -> tuple[list[MppCommand], int]:
    """Parse commands strictly more indented than indent_gt starting at i."""
    if i >= len(lines) or lines[i].indent <= indent_gt:
        return [], i
    block_indent = lines[i].indent
    commands: list[MppCommand] = []
    while i < len(lines):
        line = lines[i]
        if line.indent <= indent_gt:
            break
        if line.indent != block_indent:
            raise ParseError("inconsistent indentation", line.span)
        cmd, i = _parse_mpp_command(lines, i, filename)
        commands.append(cmd)
    return commands, i


def _parse_mpp_command(
    lines: list[_Line], i: int, filename: str
) -> tuple[MppCommand, int]:
    line = lines[i]
    p = _ExprParser(line.tokens, "mpp")
    first = p.peek()
    if first.kind == "name" and first.text == "if":
        p.next()
        cond = p.expr()
        p.expect(":")
        _expect_line_end(p)
        then, i = _parse_block(lines, i + 1, line.indent, filename)
        if not then:
            raise ParseError("if body must be non-empty", first.span)
        orelse: list[MppCommand] = []
        if i < len(lines) and lines[i].indent == line.indent:
            q = _ExprParser(lines[i].tokens, "mpp")
            tok = q.peek()
            if tok.kind == "name" and tok.text == "else":
                q.next()
                q.expect(":")
                _expect_line_end(q)
                orelse, i = _parse_block(lines, i + 1, line.indent, filename)
                if not orelse:
                    raise ParseError("else body must be non-empty", tok.span)
        return MppIf(first.span, cond, tuple(then), tuple(orelse)), i
    if first.kind == "name" and first.text == "partition":
        p.next()
        with_tok = p.next()
        if with_tok.text != "with":
            raise ParseError("expected 'with' after partition", with_tok.span)
        kind_tok = p.next()
        if kind_tok.kind != "name":
            raise ParseError("expected a kind name", kind_tok.span)
        p.expect(":")
        _expect_line_end(p)
        body, i = _parse_block(lines, i + 1, line.indent, filename)
        if not body:
            raise ParseError("partition body must be non-empty", first.span)
        return MppPartition(first.span, kind_tok.text, tuple(body)), i
    if first.kind == "name" and first.text == "del":
        p.next()
        var_tok = p.next()
        if var_tok.kind != "name":
            raise ParseError("expected a variable name after del", var_tok.span)
        _expect_line_end(p)
        return MppDel(first.span, var_tok.text), i + 1
    if first.kind == "name" and first.text == "else":
        raise ParseError("'else' without a matching 'if'", first.span)
    # assignment or multi-target call
    names = [_expect_name(p)]
    while p.accept(","):
        names.append(_expect_name(p))
    tok = p.next()
    if tok.text == "<-" and tok.kind == "op":
        fn_tok = p.next()
        if fn_tok.kind != "name":
            raise ParseError("expected a function name", fn_tok.span)
        p.expect("(")
        p.expect(")")
        _expect_line_end(p)
        for nm, nm_span in names:
            if ast.scope_class(nm) != "m":
                raise ParseError("call targets must be M-scope variables", nm_span)
        return MppCall(first.span, tuple(n for n, _ in names), fn_tok.text), i + 1
    if tok.text == "=" and tok.kind == "op":
        if len(names) != 1:
            raise ParseError("assignment takes a single target", tok.span)
        expr = p.expr()
        _expect_line_end(p)
        return MppAssign(first.span, names[0][0], expr), i + 1
    raise ParseError(f"expected '=' or '<-', found {tok.text!r}", tok.span)


def _expect_name(p: _ExprParser) -> tuple[str, Span]:
    tok = p.next()
    if tok.kind != "name" or tok.text in M_KEYWORDS:
        raise ParseError("expected a variable name", tok.span)
    if tok.text.startswith("__"):
        raise ParseError("names starting with '__' are reserved", tok.span)
    return tok.text, tok.span


def _expect_line_end(p: _ExprParser) -> None:
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing token {tok.text!r}", tok.span)


def _validate_mpp(program: MppProgram, m_program: Optional[MProgram]) -> None:
    declared = set(m_program.decls) if m_program is not None else None
    for fn in program.functions.values():
        locals_seen: set[str] = set()
        _validate_mpp_block(fn.body, program, declared, locals_seen)


def _validate_mpp_block(
    body: tuple[MppCommand, ...],
    program: MppProgram,
    declared: Optional[set[str]],
    locals_seen: set[str],
) -> None:
    for cmd in body:
        if isinstance(cmd, MppAssign):
            if ast.scope_class(cmd.var) == "local":
                if declared is not None and cmd.var in declared:
                    raise ShadowingError(
                        f"local {cmd.var!r} shadows an M variable", cmd.span
                    )
                locals_seen.add(cmd.var)
        elif isinstance(cmd, MppCall):
            if cmd.func != RESERVED_CALL and cmd.func not in program.functions:
                raise UnknownFunction(f"call to undeclared function {cmd.func!r}", cmd.span)
        elif isinstance(cmd, MppIf):
            _validate_mpp_block(cmd.then, program, declared, locals_seen)
            _validate_mpp_block(cmd.orelse, program, declared, locals_seen)
        elif isinstance(cmd, MppPartition):
            _validate_mpp_block(cmd.body, program, declared, locals_seen)


# ---------------------------------------------------------------------------
# assumption files

def parse_assumptions(
    path: Optional[str | os.PathLike], m_program: MProgram
) -> AssumptionSpec:
    """Parse a .mast file; a missing path yields the all-inputs spec."""
    if path is None or not os.path.exists(path):
        return AssumptionSpec(
            frozenset(m_program.inputs()), frozenset(m_program.outputs())
        )
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_assumptions_source(text, str(path), m_program)


def parse_assumptions_source(
    text: str, filename: str, m_program: MProgram
) -> AssumptionSpec:
    sections: dict[str, list[str]] = {"inputs": [], "outputs": []}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        span = Span(filename, lineno, 1)
        if not line or line.startswith("#"):
            continue
        if line in ("[inputs]", "[outputs]"):
            current = line[1:-1]
            continue
        if current is None:
            raise ParseError("entries must appear under [inputs] or [outputs]", span)
        if line == "*":
            sections[current].append("*")
            continue
        if not NAME_RE.fullmatch(line):
            raise ParseError(f"malformed variable name {line!r}", span)
        if line not in m_program.decls:
            raise ParseError(f"undeclared variable {line!r}", span)
        sections[current].append(line)

    def resolve(section: str, default: list[str]) -> frozenset[str]:
        names = sections[section]
        if not names or "*" in names:
            return frozenset(default) | frozenset(n for n in names if n != "*")
        return frozenset(names)

    return AssumptionSpec(
        resolve("inputs", m_program.inputs()),
        resolve("outputs", m_program.outputs()),
    )


# ---------------------------------------------------------------------------
# test files

_ENTRY_RE = re.compile(
    r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)(\[(?P<idx>\d+)\])?=(?P<value>[^=\s]+)$"
)


def parse_tests(directory: str | os.PathLike, m_program: MProgram) -> list[TestCase]:
    """Parse every .mtest file in a directory, ordered by filename."""
    cases = []
    for fname in sorted(os.listdir(directory)):
        if not fname.endswith(".mtest"):
            continue
        path = os.path.join(directory, fname)
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        cases.append(parse_test_source(text, path, m_program))
    return cases


def parse_test_source(text: str, filename: str, m_program: MProgram) -> TestCase:
    name = os.path.splitext(os.path.basename(filename))[0]
    case = TestCase(name, {}, {}, {}, None)
    section = "entries"
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        span = Span(filename, lineno, 1)
        if not line:
            continue
        if line == "#EXPECT":
            section = "expected"
            continue
        if line.startswith("#EXPECT-ERROR"):
            code = line[len("#EXPECT-ERROR"):].strip()
            if not code:
                raise ParseError("#EXPECT-ERROR needs an error code", span)
            case.expected_error = code
            section = "done"
            continue
        if line.startswith("#"):
            continue
        m = _ENTRY_RE.match(line.replace(" ", ""))
        if not m:
            raise ParseError(f"malformed entry {line!r}", span)
        var = m.group("name")
        if var not in m_program.decls:
            raise ParseError(f"unknown variable {var!r}", span)
        value_text = m.group("value")
        if section == "expected" and value_text == "undef":
            value: Optional[float] = None
        else:
            try:
                value = float(value_text)
            except ValueError:
                raise ParseError(f"malformed value {value_text!r}", span) from None
        if section == "entries":
            if m_program.decls[var].category != "input":
                raise ParseError(f"{var!r} is not an input variable", span)
            if m.group("idx") is not None:
                case.array_entries[(var, int(m.group("idx")))] = value
            else:
                case.entries[var] = value
        elif section == "expected":
            case.expected[var] = value
        else:
            raise ParseError("entries after #EXPECT-ERROR", span)
    if bool(case.expected) == (case.expected_error is not None):
        raise ParseError(
            f"{filename}: test needs exactly one of #EXPECT entries or #EXPECT-ERROR"
        )
    return case


# ---------------------------------------------------------------------------
# pretty-printers

_PREC = {
    "||": 1, "&&": 2,
    "<=": 3, "<": 3, ">": 3, ">=": 3, "==": 3, "!=": 3,
    "+": 4, "-": 4, "*": 5, "/": 5,
}
_UNARY_PREC = 6


def format_expr(e: Expr, parent_prec: int = 0) -> str:
    match e:
        case Lit(value=None):
            return "undef"
        case Lit(value=v, text=t):
            if t is not None and float(t) == v:
                return t
            return repr(v)
        case Var(name=n):
            return n
        case IndexAccess(name=n, index=i):
            return f"{n}[{format_expr(i)}]"
        case Binop(op=op, left=l, right=r):
            prec = _PREC[op]
            s = f"{format_expr(l, prec)} {op} {format_expr(r, prec + 1)}"
            return f"({s})" if prec < parent_prec else s
        case Unop(op=op, operand=o):
            sym = "-" if op == "neg" else "~"
            s = f"{sym}{format_expr(o, _UNARY_PREC)}"
            return f"({s})" if _UNARY_PREC < parent_prec else s
        case CondExpr(cond=c, then=t, orelse=f):
            s = (
                f"if {format_expr(c)} then {format_expr(t)} "
                f"else {format_expr(f)} endif"
            )
            return f"({s})" if parent_prec > 0 else s
        case Call(func=fn, args=args):
            return f"{fn}({', '.join(format_expr(a) for a in args)})"
        case Exists(kind=k):
            return f"exists({k})"
    raise TypeError(f"unknown expr node {e!r}")


def format_m(program: MProgram) -> str:
    out: list[str] = []
    for decl in program.decls.values():
        kind = f" {decl.kind}" if decl.kind else ""
        arr = f" array[{decl.length}]" if decl.length is not None else ""
        out.append(f'{decl.name} : {decl.category}{kind} : "{decl.description}"{arr};')
    for err in program.errors.values():
        out.append(f'{err.code} : exception : "{err.description}";')
    for cmd in program.commands:
        if isinstance(cmd, Assign):
            out.append(f"{cmd.var} = {format_expr(cmd.expr)};")
        elif isinstance(cmd, ArrayAssign):
            out.append(f"{cmd.var}[X, {cmd.length}] = {format_expr(cmd.body)};")
        elif isinstance(cmd, RaiseIf):
            out.append(f"if {format_expr(cmd.cond)} then error {cmd.error};")
    return "\n".join(out) + "\n"


def format_mpp(program: MppProgram) -> str:
    out: list[str] = []
    for fn in program.functions.values():
        out.append(f"{fn.name}():")
        _format_mpp_block(fn.body, 1, out)
        out.append("")
    return "\n".join(out)


def _format_mpp_block(body: tuple[MppCommand, ...], depth: int, out: list[str]) -> None:
    pad = "    " * depth
    for cmd in body:
        if isinstance(cmd, MppAssign):
            out.append(f"{pad}{cmd.var} = {format_expr(cmd.expr)}")
        elif isinstance(cmd, MppCall):
            out.append(f"{pad}{', '.join(cmd.targets)} <- {cmd.func}()")
        elif isinstance(cmd, MppDel):
            out.append(f"{pad}del {cmd.var}")
        elif isinstance(cmd, MppIf):
            out.append(f"{pad}if {format_expr(cmd.cond)}:")
            _format_mpp_block(cmd.then, depth + 1, out)
            if cmd.orelse:
                out.append(f"{pad}else:")
                _format_mpp_block(cmd.orelse, depth + 1, out)
        elif isinstance(cmd, MppPartition):
            out.append(f"{pad}partition with {cmd.kind}:")
            _format_mpp_block(cmd.body, depth + 1, out)
