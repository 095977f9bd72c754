import pytest
from hypothesis import given, settings, strategies as st

from conftest import rulesets
from sslab import dsl
from sslab.dsl import DSLError, parse_rules, render


def test_minimal_program():
    rs = parse_rules("var s:1; r1: (s == L0.s) -> s := 1 - s", f=1, d=2)
    assert rs.variables == (dsl.VarDecl("s", 1),)
    (rule,) = rs.rules
    assert rule.label == "r1"
    assert rule.guard == dsl.Binary("==", dsl.Var("s"), dsl.NbrVar(0, "s"))
    assert rule.assigns == (("s", dsl.Binary("-", dsl.Num(1), dsl.Var("s"))),)


def test_id_token():
    rs = parse_rules("var s:1; r1: (ID % 2 == 1) -> s := 1")
    assert rs.mentions_id()
    assert rs.rules[0].guard == dsl.Binary("==", dsl.Binary("%", dsl.IdRef(), dsl.Num(2)), dsl.Num(1))


def test_width_overflow():
    with pytest.raises(DSLError, match="overflow"):
        parse_rules("var s:2; var t:1; r: 1 -> s := 0", f=2)


def test_width_underfilled():
    with pytest.raises(DSLError, match="cover 1 bits"):
        parse_rules("var s:1;", f=2)


def test_syntax_error_reports_position():
    with pytest.raises(DSLError) as err:
        parse_rules("var s:1;\nr1: s == -> s := 1")
    assert (err.value.line, err.value.col) == (2, 10)


def test_undeclared_variable():
    with pytest.raises(DSLError, match="undeclared variable 'q'") as err:
        parse_rules("var s:1;\nr1: q == 1 -> s := 1")
    assert err.value.line == 2


def test_missing_port():
    with pytest.raises(DSLError, match="port 2 does not exist"):
        parse_rules("var s:1; r: P2.s == 1 -> s := 0", d=2)


@pytest.mark.parametrize(
    "source, message",
    [
        ("var s:1; var s:1;", "declared twice"),
        ("var s:1; r: 1 -> s := 0 r: 1 -> s := 1", "duplicate rule label"),
        ("var s:1; r: 1 -> s := 0; s := 1", "assigns a variable twice"),
        ("var s:1; r: 1 -> t := 0", "undeclared variable 't'"),
        ("var P0:1;", "reserved"),
        ("var s:0;", "at least 1"),
        ("var s:1; r: s $ 1 -> s := 0", "unexpected character"),
        ("r: 1 -> s := 0\nvar s:1;", "precede rules"),
    ],
)
def test_rejections(source, message):
    with pytest.raises(DSLError, match=message):
        parse_rules(source)


def test_comments_newlines_and_multiple_assignments():
    source = """
    # two fields
    var a:1;   # low bit
    var b:2;
    swap: a != P1.a && b < 3 -> a := P1.a; b := b + 1
    reset: true -> b := 0
    """
    rs = parse_rules(source, f=3, d=2)
    assert [r.label for r in rs.rules] == ["swap", "reset"]
    assert [n for n, _ in rs.rules[0].assigns] == ["a", "b"]
    assert rs.layout() == {"a": (0, 1), "b": (1, 2)}


def test_precedence():
    rs = parse_rules("var s:3; r: 1 + 2 * 3 == 7 || !0 && 0 -> s := -1 + 2")
    guard = rs.rules[0].guard
    assert guard.op == "||"
    assert guard.left == dsl.Binary("==", dsl.Binary("+", dsl.Num(1), dsl.Binary("*", dsl.Num(2), dsl.Num(3))),
                                    dsl.Num(7))
    assert guard.right == dsl.Binary("&&", dsl.Unary("!", dsl.Num(0)), dsl.Num(0))


@pytest.mark.parametrize(
    "expr, own, view, ident, expected",
    [
        ("s - 1", 0, (0, 0), 1, 7),  # assignment wraps modulo 2**3
        ("s + 9", 0, (0, 0), 1, 1),
        ("ID % 0", 5, (0, 0), 3, 0),  # total modulo
        ("(P0.s > s) + (P1.s >= s)", 2, (3, 2), 1, 2),
        ("ID * 2 % 8", 0, (0, 0), 7, 6),
        ("!(s == 0) || 0", 0, (0, 0), 1, 0),
    ],
)
def test_arithmetic_semantics(expr, own, view, ident, expected):
    rs = parse_rules(f"var s:3; r: true -> s := {expr}")
    step, _ = dsl.compile_rules(rs)
    assert step(ident, own, view) == expected
    assert dsl.interpret(rs, ident, own, view) == (True, expected)


def test_first_matching_rule_fires():
    rs = parse_rules("var s:2; one: s == 0 -> s := 1\ntwo: true -> s := 2")
    step, enabled = dsl.compile_rules(rs)
    assert step(1, 0, (0, 0)) == 1
    assert step(1, 3, (0, 0)) == 2


def test_no_rule_keeps_state():
    rs = parse_rules("var s:2; r: s == 3 -> s := 0")
    step, enabled = dsl.compile_rules(rs)
    assert step(1, 2, (0, 0)) == 2
    assert enabled(1, 2, (0, 0)) is False


def test_commands_are_simultaneous():
    rs = parse_rules("var a:2; var b:2; swap: true -> a := b; b := a")
    step, _ = dsl.compile_rules(rs)
    own = 1 | (2 << 2)  # a=1, b=2
    assert step(1, own, (0, 0)) == 2 | (1 << 2)


@settings(max_examples=200)
@given(rulesets())
def test_render_parse_round_trip(rs):
    assert parse_rules(render(rs)) == rs


@settings(max_examples=200)
@given(rulesets(), st.integers(1, 50), st.data())
def test_compiled_agrees_with_interpreter(rs, ident, data):
    f = rs.width
    own = data.draw(st.integers(0, (1 << f) - 1))
    view = tuple(data.draw(st.lists(st.integers(0, (1 << f) - 1), min_size=2, max_size=2)))
    step, enabled = dsl.compile_rules(rs)
    assert (bool(enabled(ident, own, view)), step(ident, own, view)) == dsl.interpret(rs, ident, own, view)
