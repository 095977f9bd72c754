"""ID-based algorithms and their ID-free behaviors.

A node's input is packed into one integer: the own state in the most
significant ``f`` bits, followed by the neighbor on port 0, port 1, ...,
port ``d-1`` in the least significant bits.  A :class:`Behavior` is the
table of new states over all ``2**((d+1)*f)`` packed inputs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from . import dsl


class AlgorithmError(ValueError):
    pass


def pack_input(own: int, view: Sequence[int], f: int) -> int:
    x = own
    for s in view:
        x = (x << f) | s
    return x


def unpack_input(x: int, f: int, d: int) -> tuple[int, tuple[int, ...]]:
    mask = (1 << f) - 1
    view = tuple((x >> ((d - 1 - k) * f)) & mask for k in range(d))
    return x >> (d * f), view


def input_count(f: int, d: int) -> int:
    return 1 << ((d + 1) * f)


@dataclass(frozen=True)
class Behavior:
    f: int
    d: int
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(x) for x in self.table))
        if len(self.table) != input_count(self.f, self.d):
            raise AlgorithmError(
                f"behavior table has {len(self.table)} entries, expected {input_count(self.f, self.d)}"
            )
        limit = 1 << self.f
        if any(not 0 <= x < limit for x in self.table):
            raise AlgorithmError(f"behavior output does not fit in {self.f} bits")

    def __call__(self, own: int, view: Sequence[int]) -> int:
        return self.table[pack_input(own, view, self.f)]

    def on_homogeneous(self, s: int) -> int:
        """New state of a node whose own and neighbor states all equal ``s``."""
        return self.table[pack_input(s, (s,) * self.d, self.f)]

    def to_hex(self) -> str:
        """Outputs concatenated, entry 0 most significant, as fixed-width hex."""
        if self.f == 0:
            return ""
        value = 0
        for x in self.table:
            value = (value << self.f) | x
        digits = (self.f * len(self.table) + 3) // 4
        return format(value, f"0{digits}x")

    @classmethod
    def from_hex(cls, text: str, f: int, d: int) -> "Behavior":
        count = input_count(f, d)
        value = int(text, 16) if text else 0
        mask = (1 << f) - 1
        table = [(value >> (f * (count - 1 - k))) & mask for k in range(count)]
        return cls(f, d, tuple(table))

    @classmethod
    def identity(cls, f: int, d: int) -> "Behavior":
        return cls(f, d, tuple(unpack_input(x, f, d)[0] for x in range(input_count(f, d))))

    @classmethod
    def constant(cls, f: int, d: int, value: int) -> "Behavior":
        return cls(f, d, (value,) * input_count(f, d))


def canonical_behavior_equal(b1: Behavior, b2: Behavior) -> bool:
    if (b1.f, b1.d) != (b2.f, b2.d):
        raise AlgorithmError(f"cannot compare behaviors of shape f={b1.f},d={b1.d} and f={b2.f},d={b2.d}")
    return b1.table == b2.table


@dataclass(frozen=True)
class TransitionTable:
    """Explicit ID-based table.

    ``rows[k]`` is the behavior table of identifier ``first_id + k``;
    identifiers outside the rows use ``default``.
    """

    rows: np.ndarray | None = None
    first_id: int = 1
    default: tuple[int, ...] | None = None
    overrides: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    def row(self, ident: int):
        if ident in self.overrides:
            return self.overrides[ident]
        if self.rows is not None and 0 <= ident - self.first_id < len(self.rows):
            return self.rows[ident - self.first_id]
        if self.default is None:
            raise AlgorithmError(f"transition table has no entry for identifier {ident}")
        return self.default

    def mentions_id(self) -> bool:
        return self.rows is not None or bool(self.overrides)


Body = Union[dsl.RuleSet, TransitionTable]


class Algorithm:
    """An ID-based algorithm: a rule program or a transition table, with its
    register width ``f`` and the host degree ``d``."""

    def __init__(self, f: int, d: int, body: Body, name: str = "algorithm", source: str | None = None):
        if f < 0 or d < 1:
            raise AlgorithmError(f"need f >= 0 and d >= 1 (got f={f}, d={d})")
        self.f, self.d, self.body, self.name, self.source = f, d, body, name, source
        if isinstance(body, dsl.RuleSet):
            if body.width != f:
                raise AlgorithmError(f"rule program uses {body.width} bits, algorithm declares f={f}")
            if body.max_port() >= d:
                raise AlgorithmError(f"rule program reads port {body.max_port()} but d={d}")
            self._step, self._enabled = dsl.compile_rules(body)
        elif isinstance(body, TransitionTable):
            count = input_count(f, d)
            if body.rows is not None and body.rows.shape[1:] != (count,):
                raise AlgorithmError(f"table rows must have {count} entries")
            if body.default is not None and len(body.default) != count:
                raise AlgorithmError(f"default row must have {count} entries")
            self._step = self._table_step
            self._enabled = self._table_enabled
        else:
            raise AlgorithmError(f"unsupported algorithm body {type(body).__name__}")

    def __repr__(self):
        return f"Algorithm({self.name!r}, f={self.f}, d={self.d})"

    @property
    def is_anonymous(self) -> bool:
        """True when no rule (or table row) depends on the identifier."""
        return not self.body.mentions_id()

    def _table_step(self, ident, own, view):
        return int(self.body.row(ident)[pack_input(own, view, self.f)])

    def _table_enabled(self, ident, own, view):
        return self._table_step(ident, own, view) != own

    def digest(self) -> str:
        h = hashlib.sha256()
        if self.source is not None:
            h.update(self.source.encode())
        else:
            body = self.body
            h.update(json.dumps([self.f, self.d, body.first_id, body.default,
                                 sorted((k, list(v)) for k, v in body.overrides.items())]).encode())
            if body.rows is not None:
                h.update(np.ascontiguousarray(body.rows, dtype=np.int64).tobytes())
        return h.hexdigest()

    def describe(self) -> dict:
        out = {"name": self.name, "kind": "rules" if isinstance(self.body, dsl.RuleSet) else "table",
               "sha256": self.digest()}
        if self.source is not None:
            out["source"] = self.source
        return out

    @classmethod
    def from_rules(cls, source: str, d: int, name: str = "rules", f: int | None = None) -> "Algorithm":
        rs = dsl.parse_rules(source, f=f, d=d)
        return cls(rs.width, d, rs, name=name, source=source)

    @classmethod
    def from_behavior(cls, b: Behavior, name: str = "behavior") -> "Algorithm":
        """The anonymous algorithm running ``b`` at every node."""
        return cls(b.f, b.d, TransitionTable(default=b.table), name=name)

    @classmethod
    def from_table(cls, f: int, d: int, rows: Sequence[Sequence[int]] | np.ndarray | None = None,
                   first_id: int = 1, default: Sequence[int] | None = None,
                   overrides: Mapping[int, Sequence[int]] | None = None, name: str = "table") -> "Algorithm":
        arr = None if rows is None else np.asarray(rows, dtype=np.int64)
        body = TransitionTable(
            rows=arr,
            first_id=first_id,
            default=None if default is None else tuple(int(x) for x in default),
            overrides={int(k): tuple(int(x) for x in v) for k, v in (overrides or {}).items()},
        )
        return cls(f, d, body, name=name)


def random_table_algorithm(f: int, d: int, id_hi: int, seed: int, name: str | None = None) -> Algorithm:
    """Uniformly random ID-based table over identifiers 1..id_hi."""
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 1 << f, size=(id_hi, input_count(f, d)), dtype=np.int64)
    return Algorithm.from_table(f, d, rows, first_id=1, name=name or f"random-f{f}-d{d}-seed{seed}")


def evaluate(alg: Algorithm, ident: int, own: int, view: Sequence[int]) -> int:
    """New state of a node with identifier ``ident``; the first rule whose guard
    holds fires, otherwise the state is unchanged."""
    _check_args(alg, own, view)
    return alg._step(ident, own, tuple(view))


def is_enabled(alg: Algorithm, ident: int, own: int, view: Sequence[int]) -> bool:
    """Some guard holds (rule programs); the output differs from ``own`` (tables)."""
    _check_args(alg, own, view)
    return bool(alg._enabled(ident, own, tuple(view)))


def _check_args(alg: Algorithm, own: int, view: Sequence[int]) -> None:
    if len(view) != alg.d:
        raise AlgorithmError(f"view has {len(view)} states, algorithm expects d={alg.d}")
    limit = 1 << alg.f
    if not 0 <= own < limit or any(not 0 <= s < limit for s in view):
        raise AlgorithmError(f"state does not fit in f={alg.f} bits")


def tabulate(alg: Algorithm, ident: int) -> tuple[list[int], list[bool]]:
    """New state and enabledness for every packed input, for a fixed identifier."""
    f, d = alg.f, alg.d
    if isinstance(alg.body, TransitionTable):
        outputs = [int(x) for x in alg.body.row(ident)]
        return outputs, [outputs[x] != (x >> (d * f)) for x in range(len(outputs))]
    step, enabled = alg._step, alg._enabled
    inputs = _unpacked_inputs(f, d)
    return [step(ident, own, view) for own, view in inputs], [bool(enabled(ident, own, view)) for own, view in inputs]


_INPUT_CACHE: dict[tuple[int, int], list] = {}


def _unpacked_inputs(f: int, d: int) -> list[tuple[int, tuple[int, ...]]]:
    key = (f, d)
    if key not in _INPUT_CACHE:
        _INPUT_CACHE[key] = [unpack_input(x, f, d) for x in range(input_count(f, d))]
    return _INPUT_CACHE[key]


# -- loading ---------------------------------------------------------------

BUILTINS = ("flip", "parity", "maxid", "identity", "mod4")
BUILTIN_ALIASES = {"id": "identity"}


def builtin_source(name: str) -> str:
    if name not in BUILTINS:
        raise AlgorithmError(f"no built-in algorithm {name!r}; choose from {', '.join(BUILTINS)}")
    return resources.files("sslab").joinpath("algorithms", f"{name}.ss").read_text(encoding="utf-8")


def builtin_algorithm(name: str, d: int = 2) -> Algorithm:
    return Algorithm.from_rules(builtin_source(name), d=d, name=name)


def load_algorithm(path: str | Path, d: int) -> Algorithm:
    """Load a ``.ss`` rule program, a JSON table, or a built-in by name
    (``flip``, ``flip.ss``; ``id`` is short for ``identity``)."""
    p = Path(path)
    if not p.exists():
        # bare built-in names, with or without the .ss suffix
        stem = BUILTIN_ALIASES.get(p.stem, p.stem) if p.suffix in ("", ".ss") and p.parent == Path() else None
        if stem in BUILTINS:
            return builtin_algorithm(stem, d)
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json":
        return table_from_json(json.loads(text), name=p.stem, d=d)
    return Algorithm.from_rules(text, d=d, name=p.stem)


def table_from_json(data: dict, name: str = "table", d: int | None = None) -> Algorithm:
    """JSON forms: ``{"f", "d", "rows": [...], "first_id", "default", "overrides"}``
    with rows as integer lists or behavior hex strings, or
    ``{"random": {"f", "d", "id_hi", "seed"}}``."""
    if "random" in data:
        r = data["random"]
        return random_table_algorithm(r["f"], r["d"], r["id_hi"], r["seed"], name=data.get("name", name))
    f, dd = data["f"], data["d"]
    if d is not None and dd != d:
        raise AlgorithmError(f"table is for degree {dd}, topology has degree {d}")

    def row(x):
        return Behavior.from_hex(x, f, dd).table if isinstance(x, str) else x

    rows = [row(r) for r in data["rows"]] if data.get("rows") else None
    default = row(data["default"]) if data.get("default") is not None else None
    overrides = {int(k): row(v) for k, v in data.get("overrides", {}).items()}
    return Algorithm.from_table(f, dd, rows, first_id=data.get("first_id", 1), default=default,
                                overrides=overrides, name=data.get("name", name))
