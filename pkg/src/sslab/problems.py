"""Problem specifications and legality predicates.

Specification variables are bit-fields of the register, given as
``(offset, width)``; a width of ``None`` extends to the top of the register.
Colors are 0-based; pointers encode 0 = none and ``k + 1`` = port ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import Configuration, Topology

COLORING = "coloring"
SPANNING_TREE = "spanning-tree"
LEADER_ELECTION = "leader-election"
CUSTOM = "custom"

ALIASES = {
    "coloring": COLORING,
    "color": COLORING,
    "spanning-tree": SPANNING_TREE,
    "tree": SPANNING_TREE,
    "leader-election": LEADER_ELECTION,
    "leader": LEADER_ELECTION,
}


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class SpecVar:
    name: str
    offset: int = 0
    width: int | None = None

    def resolve(self, f: int) -> tuple[int, int]:
        width = f - self.offset if self.width is None else self.width
        if self.offset < 0 or width < 0 or self.offset + width > f:
            raise SpecError(f"field {self.name!r} (offset {self.offset}, width {width}) does not fit in {f} bits")
        return self.offset, width

    def decode(self, state: int, f: int) -> int:
        off, w = self.resolve(f)
        return (state >> off) & ((1 << w) - 1)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    name: str
    spec_vars: tuple[SpecVar, ...]
    params: dict = field(default_factory=dict)
    predicate: Callable[[Topology, Configuration], bool] | None = None

    def __eq__(self, other):
        if not isinstance(other, ProblemSpec):
            return NotImplemented
        return (self.name, self.spec_vars, self.params, self.predicate) == (
            other.name, other.spec_vars, other.params, other.predicate)

    def var(self, name: str) -> SpecVar:
        for v in self.spec_vars:
            if v.name == name:
                return v
        raise SpecError(f"problem {self.name!r} has no specification variable {name!r}")

    @property
    def label(self) -> str:
        return self.params.get("label", self.name)

    def is_legal(self, topology: Topology, config: Configuration) -> bool:
        if self.name == COLORING:
            return coloring_legal(topology, config, self.params.get("palette"), self.var("color"))
        if self.name == SPANNING_TREE:
            return spanning_tree_legal(topology, config, self.var("parent"))
        if self.name == LEADER_ELECTION:
            return leader_election_legal(config, self.var("leader"))
        if self.predicate is None:
            raise SpecError(f"custom problem {self.label!r} has no predicate")
        return bool(self.predicate(topology, config))

    def legal_mask(self, topology: Topology, f: int, codes: np.ndarray) -> np.ndarray:
        """Legality of every packed configuration in ``codes`` (vectorized)."""
        states = _unpack_codes(codes, topology.n, f)
        if self.name == COLORING:
            return _coloring_mask(topology, states, f, self.params.get("palette"), self.var("color"))
        if self.name == SPANNING_TREE:
            return _tree_mask(topology, states, f, self.var("parent"))
        if self.name == LEADER_ELECTION:
            off, w = self.var("leader").resolve(f)
            bits = (states >> off) & ((1 << w) - 1)
            return (bits == 1).sum(axis=1) == 1
        return np.fromiter(
            (self.is_legal(topology, Configuration(f, tuple(int(s) for s in row))) for row in states),
            dtype=bool, count=len(states),
        )

    def to_json(self) -> dict:
        params = {k: v for k, v in self.params.items() if k != "label"}
        return {
            "name": self.label,
            "spec_vars": [{"name": v.name, "offset": v.offset, "width": v.width} for v in self.spec_vars],
            "params": params,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ProblemSpec":
        name = data["name"]
        spec_vars = tuple(SpecVar(v["name"], v.get("offset", 0), v.get("width")) for v in data.get("spec_vars", []))
        params = dict(data.get("params", {}))
        canonical = ALIASES.get(name)
        if canonical is not None:
            defaults = problem_by_name(canonical)
            return cls(canonical, spec_vars or defaults.spec_vars, params)
        if name in CUSTOM_PROBLEMS:
            base = CUSTOM_PROBLEMS[name]()
            return cls(CUSTOM, spec_vars or base.spec_vars, {**params, "label": name}, base.predicate)
        raise SpecError(f"unknown problem {name!r}")


def _unpack_codes(codes: np.ndarray, n: int, f: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.uint64)
    shifts = np.arange(n, dtype=np.uint64) * np.uint64(f)
    return ((codes[:, None] >> shifts[None, :]) & np.uint64((1 << f) - 1)).astype(np.int64)


# -- constructors ----------------------------------------------------------


def coloring(offset: int = 0, width: int | None = None, palette: int | None = None) -> ProblemSpec:
    params = {} if palette is None else {"palette": palette}
    return ProblemSpec(COLORING, (SpecVar("color", offset, width),), params)


def spanning_tree(offset: int = 0, width: int | None = None) -> ProblemSpec:
    return ProblemSpec(SPANNING_TREE, (SpecVar("parent", offset, width),))


def leader_election(offset: int = 0) -> ProblemSpec:
    return ProblemSpec(LEADER_ELECTION, (SpecVar("leader", offset, 1),))


def custom(label: str, predicate: Callable[[Topology, Configuration], bool],
           spec_vars: tuple[SpecVar, ...] = (SpecVar("value"),)) -> ProblemSpec:
    return ProblemSpec(CUSTOM, spec_vars, {"label": label}, predicate)


def trivial() -> ProblemSpec:
    """Every configuration is legal."""
    return custom("trivial", lambda topology, config: True, ())


def all_zero() -> ProblemSpec:
    """Legal iff every node's value field is 0; homogeneous solutions exist."""
    v = SpecVar("value")
    return custom("all-zero", lambda topology, config: all(v.decode(s, config.f) == 0 for s in config.states), (v,))


CUSTOM_PROBLEMS = {"trivial": trivial, "all-zero": all_zero}


def problem_by_name(name: str) -> ProblemSpec:
    canonical = ALIASES.get(name)
    if canonical == COLORING:
        return coloring()
    if canonical == SPANNING_TREE:
        return spanning_tree()
    if canonical == LEADER_ELECTION:
        return leader_election()
    if name in CUSTOM_PROBLEMS:
        return CUSTOM_PROBLEMS[name]()
    raise SpecError(f"unknown problem {name!r}")


# -- predicates ------------------------------------------------------------


def coloring_legal(topology: Topology, config: Configuration, palette: int | None = None,
                   color: SpecVar = SpecVar("color")) -> bool:
    """Every color lies in [0, palette) and differs from each neighbor's color.
    The palette defaults to max degree + 1."""
    palette = topology.max_degree + 1 if palette is None else palette
    colors = [color.decode(s, config.f) for s in config.states]
    if any(c >= palette for c in colors):
        return False
    return all(colors[v] != colors[u] for v in range(topology.n) for u in topology.ports[v])


def spanning_tree_legal(topology: Topology, config: Configuration, parent: SpecVar = SpecVar("parent")) -> bool:
    """Pointers form an in-tree: exactly one null pointer, and following the
    pointers from any node reaches it without revisiting a node."""
    pointers = [parent.decode(s, config.f) for s in config.states]
    if any(p > topology.degree(v) for v, p in enumerate(pointers)):
        return False
    if sum(p == 0 for p in pointers) != 1:
        return False
    for start in range(topology.n):
        v, seen = start, set()
        while pointers[v] != 0:
            if v in seen:
                return False
            seen.add(v)
            v = topology.ports[v][pointers[v] - 1]
    return True


def leader_election_legal(config: Configuration, leader: SpecVar = SpecVar("leader", 0, 1)) -> bool:
    return sum(leader.decode(s, config.f) == 1 for s in config.states) == 1


def _coloring_mask(topology, states, f, palette, color):
    palette = topology.max_degree + 1 if palette is None else palette
    off, w = color.resolve(f)
    colors = (states >> off) & ((1 << w) - 1)
    ok = (colors < palette).all(axis=1)
    for v, u in topology.edges():
        ok &= colors[:, v] != colors[:, u]
    return ok


def _tree_mask(topology, states, f, parent):
    off, w = parent.resolve(f)
    pointers = (states >> off) & ((1 << w) - 1)
    n = topology.n
    degrees = np.array(topology.degree_profile)
    ok = (pointers <= degrees[None, :]).all(axis=1) & ((pointers == 0).sum(axis=1) == 1)
    width = topology.max_degree
    port_table = np.array([list(p) + [v] * (width - len(p)) for v, p in enumerate(topology.ports)])
    nodes = np.arange(n)
    safe = np.where(pointers <= degrees[None, :], pointers, 0)
    succ = np.where(safe == 0, nodes[None, :], port_table[nodes[None, :], np.maximum(safe - 1, 0)])
    rows = np.arange(len(states))[:, None]
    cur = np.broadcast_to(nodes, succ.shape).copy()
    for _ in range(n):
        cur = succ[rows, cur]
    root = np.argmin(pointers, axis=1)
    return ok & (cur == root[:, None]).all(axis=1)


# -- structural checks -----------------------------------------------------


def homogeneous_legal_states(spec: ProblemSpec, topology: Topology, f: int) -> list[int]:
    """States ``s`` whose homogeneous configuration is legal."""
    return [s for s in range(1 << f) if spec.is_legal(topology, Configuration.homogeneous(topology.n, f, s))]


def verify_non_homogeneous(spec: ProblemSpec, topology: Topology, f: int) -> bool:
    """True iff none of the ``2**f`` homogeneous configurations is legal."""
    return not homogeneous_legal_states(spec, topology, f)


def solution_encoding_bits(spec: ProblemSpec, max_degree: int) -> int:
    """Bits needed just to write down one node's output."""
    if spec.name in (COLORING, SPANNING_TREE):
        # max_degree + 1 values: colors 0..max_degree, or null plus max_degree ports
        return max_degree.bit_length()
    if spec.name == LEADER_ELECTION:
        return 1
    raise SpecError(f"no solution encoding bound for problem {spec.label!r}")
