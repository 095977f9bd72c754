"""Witness construction against small-memory ID-based algorithms.

Pipeline: count the possible behaviors of a node, find a ring size at which
the identifier range must contain ``n`` identifiers sharing one behavior,
bucket the identifiers by behavior, place one bucket around the ring, and
follow the synchronous execution from every homogeneous configuration.
Under a shared behavior that execution never leaves the homogeneous
configurations, so it never reaches a legal configuration of a problem whose
legal configurations are all non-homogeneous.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algorithm import Algorithm, Behavior, TransitionTable, input_count, tabulate
from .model import IdAssignment, id_cap, iroot, make_ring
from .problems import ProblemSpec, verify_non_homogeneous

MATERIALIZE_LOG2_CAP = 10**6
DEFAULT_TABULATION_LIMIT = 1 << 20
WITNESS_VERSION = 1


class TabulationLimitError(ValueError):
    pass


class NoUniformSetError(RuntimeError):
    pass


class InapplicableError(ValueError):
    pass


@dataclass(frozen=True)
class BehaviorSpace:
    f: int
    d: int
    log2_cardinality: int
    cardinality: int | None

    @property
    def materialized(self) -> bool:
        return self.cardinality is not None


def behavior_cardinality(f: int, d: int) -> BehaviorSpace:
    """Number of functions from ``(d+1)*f`` input bits to ``f`` output bits."""
    if f < 0 or d < 1:
        raise ValueError(f"need f >= 0 and d >= 1 (got f={f}, d={d})")
    log2 = f * (1 << ((d + 1) * f))
    return BehaviorSpace(f, d, log2, 1 << log2 if log2 <= MATERIALIZE_LOG2_CAP else None)


def _exponent(c) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(str(c))


def min_guaranteed_size(f: int, c, d: int, cap: int | None = None) -> int | None:
    """Smallest ``n >= 2`` with ``n**(c-1)`` above the number of behaviors.

    Compared as ``(c-1) * log2(n) > f * 2**((d+1)*f)``; the behavior count is
    never formed.  Returns None when no ``n <= cap`` qualifies.
    """
    c = _exponent(c)
    if c <= 1:
        raise ValueError(f"the exponent c must exceed 1 (got {c})")
    log2_card = behavior_cardinality(f, d).log2_cardinality
    # n > 2**t with t = log2_card / (c - 1) = a / b
    t = Fraction(log2_card) / (c - 1)
    if cap is not None and t >= cap.bit_length():
        return None  # 2**t >= 2**bitlen(cap) > cap
    if t > MATERIALIZE_LOG2_CAP:
        raise ValueError(f"threshold 2**{float(t):.3g} is too large to form; pass a cap")
    a, b = t.numerator, t.denominator
    n = max(2, iroot(1 << a, b) + 1)
    if cap is not None and n > cap:
        return None
    return n


def extract_behavior(alg: Algorithm, ident: int, limit: int = DEFAULT_TABULATION_LIMIT) -> Behavior:
    """The algorithm with its identifier fixed to ``ident``, as a table."""
    size = input_count(alg.f, alg.d)
    if size > limit:
        raise TabulationLimitError(
            f"tabulating f={alg.f}, d={alg.d} needs {size} entries, limit is {limit}"
        )
    return Behavior(alg.f, alg.d, tabulate(alg, ident)[0])


@dataclass(frozen=True)
class IdClass:
    behavior: Behavior
    members: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.members)


def behavior_matrix(alg: Algorithm, lo: int, hi: int, limit: int = DEFAULT_TABULATION_LIMIT) -> np.ndarray:
    """Row ``i - lo`` holds the behavior table of identifier ``i``."""
    size = input_count(alg.f, alg.d)
    if size > limit:
        raise TabulationLimitError(
            f"tabulating f={alg.f}, d={alg.d} needs {size} entries per identifier, limit is {limit}"
        )
    body = alg.body
    if isinstance(body, TransitionTable) and not body.overrides and body.rows is not None \
            and body.first_id <= lo and hi < body.first_id + len(body.rows):
        return np.asarray(body.rows[lo - body.first_id: hi - body.first_id + 1], dtype=np.int64)
    return np.array([tabulate(alg, i)[0] for i in range(lo, hi + 1)], dtype=np.int64).reshape(hi - lo + 1, size)


def bucket_identifiers(alg: Algorithm, lo: int, hi: int, limit: int = DEFAULT_TABULATION_LIMIT) -> list[IdClass]:
    """Partition ``[lo, hi]`` by behavior; largest class first, ties broken by
    the lexicographically smallest table."""
    if hi < lo:
        raise ValueError(f"empty identifier range [{lo}, {hi}]")
    rows = behavior_matrix(alg, lo, hi, limit)
    width = alg.f * rows.shape[1]
    if width <= 62:
        # pack each row, entry 0 most significant: numeric order is row order
        weights = np.left_shift(np.int64(1), alg.f * np.arange(rows.shape[1] - 1, -1, -1, dtype=np.int64))
        _, first, inverse, counts = np.unique(rows @ weights, return_index=True, return_inverse=True,
                                                 return_counts=True)
        tables = rows[first]
    else:
        tables, inverse, counts = np.unique(rows, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    order = sorted(range(len(tables)), key=lambda k: -counts[k])  # stable: unique rows are sorted
    ids = np.arange(lo, hi + 1)
    members = {}
    for k in order:
        members[k] = tuple(int(i) for i in ids[inverse == k])
    return [IdClass(Behavior(alg.f, alg.d, tuple(int(x) for x in tables[k])), members[k]) for k in order]


@dataclass(frozen=True)
class UniformSet:
    ids: IdAssignment
    behavior: Behavior
    id_class: IdClass
    guaranteed: bool


def find_uniform_id_set(alg: Algorithm, n: int, c, mode: str = "auto",
                        limit: int = DEFAULT_TABULATION_LIMIT) -> UniformSet:
    """The ``n`` smallest members of the largest behavior class over
    ``[1, floor(n**c)]``, placed on nodes ``0..n-1`` in increasing order.

    ``mode="guaranteed"`` insists that ``n`` passes the counting threshold;
    ``"empirical"`` tries any ``n``; ``"auto"`` accepts both.
    """
    if mode not in ("auto", "guaranteed", "empirical"):
        raise ValueError(f"unknown mode {mode!r}")
    c = _exponent(c)
    cap = id_cap(n, c)
    threshold = min_guaranteed_size(alg.f, c, alg.d, cap=n) if c > 1 else None
    guaranteed = threshold is not None and n >= threshold
    if mode == "guaranteed" and not guaranteed:
        raise NoUniformSetError(
            f"n={n} is below the guaranteed size for f={alg.f}, d={alg.d}, c={c}; use empirical mode"
        )
    best = bucket_identifiers(alg, 1, cap, limit)[0]
    if best.size < n:
        raise NoUniformSetError(
            f"largest behavior class over [1, {cap}] has {best.size} identifiers, need {n}"
        )
    return UniformSet(IdAssignment(best.members[:n], cap), best.behavior, best, guaranteed)


@dataclass(frozen=True)
class TrapTrace:
    """Common state of a homogeneous synchronous execution: ``prefix`` then
    ``cycle`` repeated forever.  The first listed state is the start."""

    s0: int
    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    @property
    def states(self) -> tuple[int, ...]:
        return self.prefix + self.cycle

    def to_json(self) -> dict:
        return {"s0": self.s0, "prefix": list(self.prefix), "cycle": list(self.cycle)}

    @classmethod
    def from_json(cls, data: dict) -> "TrapTrace":
        return cls(data["s0"], tuple(data["prefix"]), tuple(data["cycle"]))


def homogeneity_trap(b: Behavior, n: int, s0: int) -> TrapTrace:
    """Follow ``s -> b(s, s, ..., s)`` from ``s0`` until a state repeats."""
    if n < 3:
        raise ValueError(f"ring size n={n} is below 3")
    if not 0 <= s0 < (1 << b.f):
        raise ValueError(f"initial state {s0} does not fit in {b.f} bits")
    seen: dict[int, int] = {}
    seq = []
    s = s0
    while s not in seen:
        seen[s] = len(seq)
        seq.append(s)
        s = b.on_homogeneous(s)
    start = seen[s]
    return TrapTrace(s0, tuple(seq[:start]), tuple(seq[start:]))


@dataclass
class Witness:
    n: int
    c: Fraction
    ids: IdAssignment
    behavior: Behavior
    traps: list[TrapTrace]
    problem: ProblemSpec
    algorithm: dict
    f: int
    d: int
    guaranteed: bool = False
    replay_ok: bool | None = None
    id_class_size: int = 0

    def to_json(self) -> dict:
        return {
            "version": WITNESS_VERSION,
            "algorithm": self.algorithm,
            "f": self.f,
            "d": self.d,
            "n": self.n,
            "c": _c_json(self.c),
            "ids": list(self.ids.ids),
            "behavior_hex": self.behavior.to_hex(),
            "traps": [t.to_json() for t in self.traps],
            "problem": self.problem.to_json(),
            "replay_ok": self.replay_ok,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Witness":
        c = Fraction(str(data["c"]))
        f, d, n = data["f"], data["d"], data["n"]
        return cls(
            n=n,
            c=c,
            ids=IdAssignment(tuple(data["ids"]), id_cap(n, c)),
            behavior=Behavior.from_hex(data["behavior_hex"], f, d),
            traps=[TrapTrace.from_json(t) for t in data["traps"]],
            problem=ProblemSpec.from_json(data["problem"]),
            algorithm=data.get("algorithm", {}),
            f=f,
            d=d,
            replay_ok=data.get("replay_ok"),
        )


def _c_json(c: Fraction):
    return int(c) if c.denominator == 1 else float(c)


def lower_bound_witness(alg: Algorithm, c, spec: ProblemSpec, n: int | None = None, mode: str = "auto",
                        limit: int = DEFAULT_TABULATION_LIMIT, replay: bool = True) -> Witness:
    """Build and replay a ring instance on which ``alg`` never reaches a
    configuration legal for ``spec``."""
    from .checker import replay_witness

    c = _exponent(c)
    if c <= 1:
        raise ValueError(f"the exponent c must exceed 1 (got {c})")
    if alg.d != 2:
        raise InapplicableError(f"witnesses are built on rings; algorithm has degree {alg.d}")
    if n is None:
        if mode == "empirical":
            raise ValueError("empirical mode needs an explicit ring size")
        n = min_guaranteed_size(alg.f, c, alg.d)
    n = max(3, n)
    ring = make_ring(n)
    if not verify_non_homogeneous(spec, ring, alg.f):
        raise InapplicableError(
            f"problem {spec.label!r} has a legal homogeneous configuration on the {n}-ring with f={alg.f}"
        )
    uniform = find_uniform_id_set(alg, n, c, mode, limit)
    traps = [homogeneity_trap(uniform.behavior, n, s0) for s0 in range(1 << alg.f)]
    w = Witness(
        n=n, c=c, ids=uniform.ids, behavior=uniform.behavior, traps=traps, problem=spec,
        algorithm=alg.describe(), f=alg.f, d=alg.d, guaranteed=uniform.guaranteed,
        id_class_size=uniform.id_class.size,
    )
    if replay:
        w.replay_ok = bool(replay_witness(w, alg))
    return w

