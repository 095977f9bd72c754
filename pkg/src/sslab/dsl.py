"""Guarded-rule language for state-model algorithms.

A program declares bit-fields of the node register and a list of rules::

    # flip the bit whenever the port-0 neighbor agrees
    var s:1;
    r1: s == P0.s -> s := 1 - s

Expressions range over own variables, ``P<k>.<name>`` (the variable of the
neighbor on port ``k``), the token ``ID``, integer literals, ``true`` and
``false``, the operators ``+ - * % == != < <= > >= && || !`` and parentheses.
Arithmetic is on unbounded integers; a value is reduced modulo ``2**width``
only when assigned.  ``x % 0`` is 0.  Commands of one rule are simultaneous.

The first declared variable occupies the least significant bits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union


class DSLError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class NbrVar:
    port: int
    name: str


@dataclass(frozen=True)
class IdRef:
    pass


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Var, NbrVar, IdRef, Unary, Binary]


@dataclass(frozen=True)
class VarDecl:
    name: str
    width: int


@dataclass(frozen=True)
class Rule:
    label: str
    guard: Expr
    assigns: tuple[tuple[str, Expr], ...]


@dataclass(frozen=True)
class RuleSet:
    variables: tuple[VarDecl, ...]
    rules: tuple[Rule, ...]

    @property
    def width(self) -> int:
        return sum(v.width for v in self.variables)

    def layout(self) -> dict[str, tuple[int, int]]:
        """name -> (offset, width)."""
        out, offset = {}, 0
        for v in self.variables:
            out[v.name] = (offset, v.width)
            offset += v.width
        return out

    def mentions_id(self) -> bool:
        return any(_mentions_id(r.guard) or any(_mentions_id(e) for _, e in r.assigns) for r in self.rules)

    def max_port(self) -> int:
        ports = [p for r in self.rules for e in (r.guard, *(e for _, e in r.assigns)) for p in _ports(e)]
        return max(ports, default=-1)


def _mentions_id(e: Expr) -> bool:
    if isinstance(e, IdRef):
        return True
    if isinstance(e, Unary):
        return _mentions_id(e.operand)
    if isinstance(e, Binary):
        return _mentions_id(e.left) or _mentions_id(e.right)
    return False


def _ports(e: Expr):
    if isinstance(e, NbrVar):
        yield e.port
    elif isinstance(e, Unary):
        yield from _ports(e.operand)
    elif isinstance(e, Binary):
        yield from _ports(e.left)
        yield from _ports(e.right)


# -- lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|->|==|!=|<=|>=|&&|\|\||[-+*%<>!():;.])
    """,
    re.VERBOSE,
)
_PORT_RE = re.compile(r"^[PL](\d+)$")
KEYWORDS = {"var", "ID", "true", "false"}


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens, pos, line, line_start = [], 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise DSLError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind, text = m.lastgroup, m.group()
        if kind in ("num", "name", "op"):
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- parser ----------------------------------------------------------------

_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!=", "<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "%"),
)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise DSLError(msg, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "name") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.tok
        if not self.accept(text):
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return tok

    def name(self) -> Token:
        tok = self.tok
        if tok.kind != "name" or tok.text in KEYWORDS:
            self.fail(f"expected a name, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def program(self) -> tuple[list[tuple[VarDecl, Token]], list[tuple[Rule, Token]]]:
        decls, rules = [], []
        while self.tok.kind != "eof":
            if self.tok.kind == "op" and self.tok.text == ";":
                self.i += 1
            elif self.tok.text == "var" and self.tok.kind == "name":
                if rules:
                    self.fail("variable declarations must precede rules")
                decls.append(self.declaration())
            else:
                rules.append(self.rule())
        return decls, rules

    def declaration(self) -> tuple[VarDecl, Token]:
        self.expect("var")
        tok = self.name()
        if _PORT_RE.match(tok.text):
            self.fail(f"variable name {tok.text!r} is reserved for port references", tok)
        self.expect(":")
        if self.tok.kind != "num":
            self.fail("expected a bit width")
        width = int(self.tok.text)
        if width < 1:
            self.fail("bit width must be at least 1")
        self.i += 1
        self.expect(";")
        return VarDecl(tok.text, width), tok

    def rule(self) -> tuple[Rule, Token]:
        label = self.name()
        self.expect(":")
        guard = self.expr()
        self.expect("->")
        assigns = [self.assignment()]
        while self.tok.text == ";" and self.peek().kind == "name" and self.peek(2).text == ":=":
            self.i += 1
            assigns.append(self.assignment())
        return Rule(label.text, guard, tuple((n.text, e) for n, e in assigns)), label

    def assignment(self) -> tuple[Token, Expr]:
        target = self.name()
        self.expect(":=")
        return target, self.expr()

    def expr(self, level: int = 0) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _BINARY_LEVELS[level]:
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.expr(level + 1))
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text in ("!", "-"):
            op = self.tok.text
            self.i += 1
            return Unary(op, self.unary())
        return self.primary()

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(int(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            self.i += 1
            if tok.text == "ID":
                return IdRef()
            if tok.text in ("true", "false"):
                return Num(1 if tok.text == "true" else 0)
            m = _PORT_RE.match(tok.text)
            if m and self.tok.text == ".":
                self.i += 1
                field = self.name()
                return _Located(NbrVar(int(m.group(1)), field.text), field)
            return _Located(Var(tok.text), tok)
        self.fail(f"unexpected {tok.text or 'end of input'!r}")


class _Located:
    """Variable reference still carrying its source token, stripped after checking."""

    def __init__(self, node, tok):
        self.node, self.tok = node, tok


def _resolve(e, names: set[str], d: int | None) -> Expr:
    if isinstance(e, _Located):
        node = e.node
        if node.name not in names:
            raise DSLError(f"undeclared variable {node.name!r}", e.tok.line, e.tok.col)
        if isinstance(node, NbrVar) and d is not None and node.port >= d:
            raise DSLError(f"port {node.port} does not exist (degree {d})", e.tok.line, e.tok.col)
        return node
    if isinstance(e, Unary):
        return Unary(e.op, _resolve(e.operand, names, d))
    if isinstance(e, Binary):
        return Binary(e.op, _resolve(e.left, names, d), _resolve(e.right, names, d))
    return e


def parse_rules(source: str, f: int | None = None, d: int | None = None) -> RuleSet:
    """Parse a program.  With ``f`` the declared widths must sum to exactly ``f``;
    with ``d`` every port reference must be below ``d``."""
    decls, raw_rules = _Parser(tokenize(source)).program()
    names: set[str] = set()
    for decl, tok in decls:
        if decl.name in names:
            raise DSLError(f"variable {decl.name!r} declared twice", tok.line, tok.col)
        names.add(decl.name)
    width = sum(decl.width for decl, _ in decls)
    if f is not None and width > f:
        raise DSLError(f"bit-width overflow: fields need {width} bits, register has {f}")
    if f is not None and width < f:
        raise DSLError(f"fields cover {width} bits, register has {f}")
    labels: set[str] = set()
    rules = []
    for rule, tok in raw_rules:
        if rule.label in labels:
            raise DSLError(f"duplicate rule label {rule.label!r}", tok.line, tok.col)
        labels.add(rule.label)
        targets = [n for n, _ in rule.assigns]
        for t in targets:
            if t not in names:
                raise DSLError(f"assignment to undeclared variable {t!r}", tok.line, tok.col)
        if len(set(targets)) != len(targets):
            raise DSLError(f"rule {rule.label!r} assigns a variable twice", tok.line, tok.col)
        rules.append(
            Rule(
                rule.label,
                _resolve(rule.guard, names, d),
                tuple((n, _resolve(e, names, d)) for n, e in rule.assigns),
            )
        )
    return RuleSet(tuple(decl for decl, _ in decls), tuple(rules))


# -- rendering -------------------------------------------------------------


def render_expr(e: Expr) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, NbrVar):
        return f"P{e.port}.{e.name}"
    if isinstance(e, IdRef):
        return "ID"
    if isinstance(e, Unary):
        return f"{e.op}({render_expr(e.operand)})"
    return f"({render_expr(e.left)} {e.op} {render_expr(e.right)})"


def render(rs: RuleSet) -> str:
    lines = [f"var {v.name}:{v.width};" for v in rs.variables]
    for r in rs.rules:
        cmds = "; ".join(f"{n} := {render_expr(e)}" for n, e in r.assigns)
        lines.append(f"{r.label}: {render_expr(r.guard)} -> {cmds}")
    return "\n".join(lines) + "\n"


# -- reference interpreter -------------------------------------------------


def _mod(a: int, b: int) -> int:
    return a % b if b else 0


def eval_expr(e: Expr, env: dict[str, int], nbrs: list[dict[str, int]], ident: int) -> int:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, NbrVar):
        return nbrs[e.port][e.name]
    if isinstance(e, IdRef):
        return ident
    if isinstance(e, Unary):
        x = eval_expr(e.operand, env, nbrs, ident)
        return int(not x) if e.op == "!" else -x
    op = e.op
    if op == "&&":
        return int(bool(eval_expr(e.left, env, nbrs, ident)) and bool(eval_expr(e.right, env, nbrs, ident)))
    if op == "||":
        return int(bool(eval_expr(e.left, env, nbrs, ident)) or bool(eval_expr(e.right, env, nbrs, ident)))
    a = eval_expr(e.left, env, nbrs, ident)
    b = eval_expr(e.right, env, nbrs, ident)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "%":
        return _mod(a, b)
    return int({"==": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op])


def decode(rs: RuleSet, state: int) -> dict[str, int]:
    return {name: (state >> off) & ((1 << w) - 1) for name, (off, w) in rs.layout().items()}


def interpret(rs: RuleSet, ident: int, own: int, view) -> tuple[bool, int]:
    """Slow tree-walking evaluation: (enabled, new state).  Used as a reference."""
    env = decode(rs, own)
    nbrs = [decode(rs, s) for s in view]
    layout = rs.layout()
    for r in rs.rules:
        if eval_expr(r.guard, env, nbrs, ident):
            new = own
            values = [(n, eval_expr(e, env, nbrs, ident)) for n, e in r.assigns]
            for name, value in values:
                off, w = layout[name]
                mask = (1 << w) - 1
                new = (new & ~(mask << off)) | ((value & mask) << off)
            return True, new
    return False, own


# -- compilation to Python -------------------------------------------------


def _py(e: Expr, layout: dict[str, tuple[int, int]]) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Var):
        off, w = layout[e.name]
        return f"((own >> {off}) & {(1 << w) - 1})"
    if isinstance(e, NbrVar):
        off, w = layout[e.name]
        return f"((view[{e.port}] >> {off}) & {(1 << w) - 1})"
    if isinstance(e, IdRef):
        return "ID"
    if isinstance(e, Unary):
        inner = _py(e.operand, layout)
        return f"(0 if {inner} else 1)" if e.op == "!" else f"(-{inner})"
    a, b = _py(e.left, layout), _py(e.right, layout)
    if e.op == "&&":
        return f"(1 if ({a} and {b}) else 0)"
    if e.op == "||":
        return f"(1 if ({a} or {b}) else 0)"
    if e.op == "%":
        return f"_mod({a}, {b})"
    if e.op in ("+", "-", "*"):
        return f"({a} {e.op} {b})"
    return f"(1 if {a} {e.op} {b} else 0)"


def compile_rules(rs: RuleSet):
    """Return ``(step, enabled)`` closures of signature ``(ID, own, view)``."""
    layout = rs.layout()
    step = ["def step(ID, own, view):"]
    enabled = ["def enabled(ID, own, view):"]
    for r in rs.rules:
        guard = _py(r.guard, layout)
        step.append(f"    if {guard}:")
        clear = 0
        parts = []
        for name, e in r.assigns:
            off, w = layout[name]
            clear |= ((1 << w) - 1) << off
            parts.append(f"((({_py(e, layout)}) & {(1 << w) - 1}) << {off})")
        keep = f"(own & {~clear})" if clear else "own"
        step.append(f"        return {' | '.join([keep, *parts])}")
        enabled.append(f"    if {guard}:")
        enabled.append("        return True")
    step.append("    return own")
    enabled.append("    return False")
    namespace = {"_mod": _mod}
    exec("\n".join(step) + "\n\n" + "\n".join(enabled), namespace)
    return namespace["step"], namespace["enabled"]
