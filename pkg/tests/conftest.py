import random

import pytest
from hypothesis import strategies as st

from sslab import dsl
from sslab.algorithm import Algorithm, builtin_algorithm
from sslab.model import IdAssignment, make_ring

OPS = ["+", "-", "*", "%", "==", "!=", "<", "<=", ">", ">=", "&&", "||"]


def _layout(f):
    """Split f bits into one or two declared variables."""
    if f == 0:
        return []
    if f == 1:
        return [dsl.VarDecl("a", 1)]
    return [dsl.VarDecl("a", 1), dsl.VarDecl("b", f - 1)]


def expressions(names, d, depth=3):
    leaves = [st.integers(0, 9).map(dsl.Num), st.just(dsl.IdRef())]
    if names:
        leaves.append(st.sampled_from(names).map(dsl.Var))
        leaves.append(st.builds(dsl.NbrVar, st.integers(0, d - 1), st.sampled_from(names)))
    leaf = st.one_of(leaves)
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            st.builds(dsl.Unary, st.sampled_from(["!", "-"]), sub),
            st.builds(dsl.Binary, st.sampled_from(OPS), sub, sub),
        ),
        max_leaves=depth * 2,
    )


@st.composite
def rulesets(draw, f=None, d=2):
    f = draw(st.integers(0, 2)) if f is None else f
    decls = _layout(f)
    names = [v.name for v in decls]
    expr = expressions(names, d)
    rules = []
    for k in range(draw(st.integers(0, 3))):
        targets = draw(st.lists(st.sampled_from(names), unique=True, max_size=len(names))) if names else []
        if not targets:
            if names:
                targets = [names[0]]
            else:
                continue
        rules.append(dsl.Rule(f"r{k}", draw(expr), tuple((t, draw(expr)) for t in targets)))
    return dsl.RuleSet(tuple(decls), tuple(rules))


def random_program(rng: random.Random, f: int, d: int, depth: int = 3) -> dsl.RuleSet:
    """Seeded random rule program (no hypothesis), used by the acceptance run."""
    decls = _layout(f)
    names = [v.name for v in decls]

    def expr(k):
        if k == 0 or rng.random() < 0.3:
            choice = rng.randrange(4 if names else 2)
            if choice == 0:
                return dsl.Num(rng.randrange(10))
            if choice == 1:
                return dsl.IdRef()
            if choice == 2:
                return dsl.Var(rng.choice(names))
            return dsl.NbrVar(rng.randrange(d), rng.choice(names))
        if rng.random() < 0.2:
            return dsl.Unary(rng.choice("!-"), expr(k - 1))
        return dsl.Binary(rng.choice(OPS), expr(k - 1), expr(k - 1))

    rules = []
    if names:
        for k in range(rng.randint(1, 3)):
            targets = rng.sample(names, rng.randint(1, len(names)))
            rules.append(dsl.Rule(f"r{k}", expr(depth), tuple((t, expr(depth)) for t in targets)))
    return dsl.RuleSet(tuple(decls), tuple(rules))


def program_algorithm(rs: dsl.RuleSet, d: int = 2) -> Algorithm:
    return Algorithm(rs.width, d, rs, name="generated", source=dsl.render(rs))


@pytest.fixture
def ring3():
    return make_ring(3)


@pytest.fixture
def ids3():
    return IdAssignment.sequential(3)


@pytest.fixture
def flip():
    return builtin_algorithm("flip")


@pytest.fixture
def parity():
    return builtin_algorithm("parity")


@pytest.fixture
def identity():
    return builtin_algorithm("identity")


@pytest.fixture
def maxid():
    return builtin_algorithm("maxid")


@pytest.fixture
def mod4():
    return builtin_algorithm("mod4")
