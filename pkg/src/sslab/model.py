"""Topologies, configurations and identifier assignments.

Every node has an ordered list of ports; port ``k`` of node ``v`` leads to
``topology.ports[v][k]``.  On the oriented ring port 0 is the clockwise
successor ("right") and port 1 the predecessor ("left").
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

ORIENTED_RING = "oriented-ring"
SCRAMBLED_RING = "port-scrambled-ring"
REGULAR = "d-regular"
KINDS = (ORIENTED_RING, SCRAMBLED_RING, REGULAR)


class TopologyError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    n: int
    kind: str
    ports: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "ports", tuple(tuple(p) for p in self.ports))
        validate_topology(self)

    @property
    def degree_profile(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.ports)

    @property
    def max_degree(self) -> int:
        return max(self.degree_profile)

    def degree(self, v: int) -> int:
        return len(self.ports[v])

    def port_to(self, v: int, u: int) -> int:
        """Port of ``v`` leading to ``u``."""
        return self.ports[v].index(u)

    def edges(self) -> list[tuple[int, int]]:
        return sorted({(min(v, u), max(v, u)) for v in range(self.n) for u in self.ports[v]})

    def to_json(self) -> dict:
        return {"n": self.n, "kind": self.kind, "ports": [list(p) for p in self.ports]}

    @classmethod
    def from_json(cls, data: dict) -> "Topology":
        return cls(n=data["n"], kind=data["kind"], ports=data["ports"])


def validate_topology(t: Topology) -> None:
    """Raise TopologyError unless ``t`` is a simple, connected, port-numbered graph."""
    if t.kind not in KINDS:
        raise TopologyError(f"unknown topology kind {t.kind!r}")
    if t.n < 2:
        raise TopologyError(f"invalid size: n={t.n}, need n >= 2")
    if len(t.ports) != t.n:
        raise TopologyError(f"ports lists {len(t.ports)} nodes, n={t.n}")
    for v, nbrs in enumerate(t.ports):
        if not nbrs:
            raise TopologyError(f"node {v} has no ports")
        if len(set(nbrs)) != len(nbrs):
            raise TopologyError(f"node {v} has two ports to the same neighbor (multi-edge)")
        for u in nbrs:
            if not 0 <= u < t.n:
                raise TopologyError(f"node {v} has a port to non-existent node {u}")
            if u == v:
                raise TopologyError(f"node {v} has a self-loop")
            if v not in t.ports[u]:
                raise TopologyError(f"edge {v}-{u} is not symmetric")
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for u in t.ports[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    if len(seen) != t.n:
        missing = min(set(range(t.n)) - seen)
        raise TopologyError(f"graph is disconnected (node {missing} unreachable from node 0)")
    degrees = t.degree_profile
    if t.kind in (ORIENTED_RING, SCRAMBLED_RING):
        if t.n == 2:
            if degrees != (1, 1):
                raise TopologyError("2-node ring must be a single edge")
        elif any(d != 2 for d in degrees):
            raise TopologyError("ring nodes must have degree 2")
    if t.kind == ORIENTED_RING and t.n > 2:
        v, visited = 0, []
        for _ in range(t.n):
            visited.append(v)
            v = t.ports[v][0]
        if v != 0 or len(set(visited)) != t.n:
            raise TopologyError("port 0 does not trace a single n-cycle")
        for v in range(t.n):
            if t.ports[t.ports[v][0]][1] != v:
                raise TopologyError(f"node {v}: port 1 of its successor does not lead back")
    if t.kind == REGULAR and len(set(degrees)) != 1:
        bad = next(v for v, d in enumerate(degrees) if d != degrees[0])
        raise TopologyError(f"node {bad} has degree {degrees[bad]}, expected {degrees[0]}")


def make_ring(n: int, scrambled: bool = False, seed: int | None = None) -> Topology:
    """Ring on ``n`` nodes.  ``n == 2`` is the single-edge graph."""
    if n < 2:
        raise TopologyError(f"invalid size: n={n}, need n >= 2")
    if n == 2:
        ports = [(1,), (0,)]
    else:
        ports = [((v + 1) % n, (v - 1) % n) for v in range(n)]
    if not scrambled:
        return Topology(n, ORIENTED_RING, ports)
    rng = random.Random(seed)
    ports = [p[::-1] if len(p) == 2 and rng.random() < 0.5 else p for p in ports]
    return Topology(n, SCRAMBLED_RING, ports)


def make_regular(n: int, d: int, edges: Iterable[Sequence[int]]) -> Topology:
    """d-regular graph from an edge list; ports follow ascending neighbor order."""
    adj: list[list[int]] = [[] for _ in range(n)]
    seen = set()
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < n and 0 <= v < n):
            raise TopologyError(f"edge ({u}, {v}) names a node outside 0..{n - 1}")
        if u == v:
            raise TopologyError(f"edge ({u}, {v}) is a self-loop")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise TopologyError(f"edge ({u}, {v}) appears twice")
        seen.add(key)
        adj[u].append(v)
        adj[v].append(u)
    for v, nbrs in enumerate(adj):
        if len(nbrs) != d:
            raise TopologyError(f"node {v} has degree {len(nbrs)}, expected {d}")
    return Topology(n, REGULAR, [sorted(a) for a in adj])


@dataclass(frozen=True)
class Configuration:
    f: int
    states: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(int(s) for s in self.states))
        if self.f < 0:
            raise ConfigurationError(f"negative memory width f={self.f}")
        limit = 1 << self.f
        for v, s in enumerate(self.states):
            if not 0 <= s < limit:
                raise ConfigurationError(f"state {s} of node {v} does not fit in {self.f} bits")

    @property
    def n(self) -> int:
        return len(self.states)

    def __getitem__(self, v: int) -> int:
        return self.states[v]

    def pack(self) -> int:
        """Configuration as one integer, node 0 in the low bits."""
        code = 0
        for v in reversed(range(len(self.states))):
            code = (code << self.f) | self.states[v]
        return code

    @classmethod
    def unpack(cls, code: int, n: int, f: int) -> "Configuration":
        mask = (1 << f) - 1
        return cls(f, tuple((code >> (v * f)) & mask for v in range(n)))

    @classmethod
    def homogeneous(cls, n: int, f: int, s: int) -> "Configuration":
        return cls(f, (s,) * n)

    def replace(self, updates: dict[int, int]) -> "Configuration":
        states = list(self.states)
        for v, s in updates.items():
            states[v] = s
        return Configuration(self.f, tuple(states))

    def to_json(self) -> dict:
        return {"f": self.f, "states": list(self.states)}

    @classmethod
    def from_json(cls, data: dict) -> "Configuration":
        return cls(data["f"], data["states"])


def id_cap(n: int, c) -> int:
    """floor(n ** c), exact for rational ``c``."""
    c = Fraction(str(c)) if not isinstance(c, Fraction) else c
    if c < 1:
        raise ValueError(f"exponent c={c} must be >= 1")
    return iroot(n ** c.numerator, c.denominator)


def iroot(x: int, k: int) -> int:
    """Largest integer r with r**k <= x."""
    if x < 0 or k < 1:
        raise ValueError("iroot needs x >= 0 and k >= 1")
    if k == 1 or x < 2:
        return x
    r = 1 << ((x.bit_length() + k - 1) // k)
    while True:
        nxt = ((k - 1) * r + x // r ** (k - 1)) // k
        if nxt >= r:
            break
        r = nxt
    while r ** k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


@dataclass(frozen=True)
class IdAssignment:
    ids: tuple[int, ...]
    id_cap: int

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("identifiers are not distinct")
        for v, i in enumerate(self.ids):
            if not 1 <= i <= self.id_cap:
                raise ValueError(f"identifier {i} of node {v} outside [1, {self.id_cap}]")

    @property
    def n(self) -> int:
        return len(self.ids)

    def __getitem__(self, v: int) -> int:
        return self.ids[v]

    @classmethod
    def sequential(cls, n: int) -> "IdAssignment":
        return cls(tuple(range(1, n + 1)), n)

    @classmethod
    def for_exponent(cls, ids: Sequence[int], c) -> "IdAssignment":
        return cls(tuple(ids), id_cap(len(ids), c))


def is_homogeneous(config: Configuration) -> bool:
    return len(set(config.states)) <= 1


def neighbor_view(topology: Topology, config: Configuration, node: int) -> tuple[int, ...]:
    """States of ``node``'s neighbors, ordered by port."""
    if not 0 <= node < topology.n:
        raise IndexError(f"node {node} out of range for n={topology.n}")
    if config.n != topology.n:
        raise ConfigurationError(f"configuration has {config.n} nodes, topology {topology.n}")
    return tuple(config.states[u] for u in topology.ports[node])
