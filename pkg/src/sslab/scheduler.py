"""Daemons and the composite-atomic step."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

from .algorithm import Algorithm, evaluate, is_enabled
from .model import Configuration, IdAssignment, Topology, neighbor_view

SYNCHRONOUS = "synchronous"
CENTRAL = "central"
ADVERSARIAL = "distributed-adversarial"
RANDOM = "distributed-random"
DAEMON_KINDS = (SYNCHRONOUS, CENTRAL, ADVERSARIAL, RANDOM)


class DaemonError(RuntimeError):
    pass


class ShapeError(ValueError):
    pass


Strategy = Union[Callable[[frozenset, int], Iterable[int]], Sequence[Sequence[int]], str, None]


@dataclass(frozen=True)
class Daemon:
    """``strategy`` is, for adversarial daemons, a callable
    ``(enabled, step) -> nodes`` or a scripted list of node lists; for the
    central daemon ``"lowest"`` (default) or ``"random"``."""

    kind: str = SYNCHRONOUS
    strategy: Strategy = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DAEMON_KINDS:
            raise ValueError(f"unknown daemon kind {self.kind!r}")
        if self.kind == ADVERSARIAL and self.strategy is None:
            raise ValueError("an adversarial daemon needs a strategy")
        if isinstance(self.strategy, list):
            object.__setattr__(self, "strategy", tuple(tuple(s) for s in self.strategy))

    @classmethod
    def synchronous(cls) -> "Daemon":
        return cls(SYNCHRONOUS)

    @classmethod
    def scripted(cls, steps: Sequence[Sequence[int]]) -> "Daemon":
        return cls(ADVERSARIAL, tuple(tuple(s) for s in steps))


def load_script(path: str | Path) -> Daemon:
    """Scripted adversary from a JSON array of node-index arrays."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list) or not all(isinstance(s, list) for s in data):
        raise ValueError("a daemon script must be a JSON array of arrays")
    return Daemon.scripted(data)


def _rng(seed: int, step_index: int) -> random.Random:
    return random.Random(f"{seed}:{step_index}")


def choose(daemon: Daemon, enabled: Iterable[int], step_index: int) -> frozenset[int]:
    enabled = frozenset(enabled)
    if not enabled:
        return frozenset()
    if daemon.kind == SYNCHRONOUS:
        return enabled
    if daemon.kind == CENTRAL:
        if daemon.strategy in (None, "lowest"):
            return frozenset({min(enabled)})
        if daemon.strategy == "random":
            return frozenset({_rng(daemon.seed, step_index).choice(sorted(enabled))})
        raise DaemonError(f"unknown central policy {daemon.strategy!r}")
    if daemon.kind == RANDOM:
        rng = _rng(daemon.seed, step_index)
        nodes = sorted(enabled)
        while True:
            picked = frozenset(v for v in nodes if rng.random() < 0.5)
            if picked:
                return picked
    if callable(daemon.strategy):
        picked = frozenset(daemon.strategy(enabled, step_index))
    else:
        if step_index >= len(daemon.strategy):
            raise DaemonError(f"scripted strategy exhausted at step {step_index}")
        picked = frozenset(daemon.strategy[step_index])
    if not picked or not picked <= enabled:
        raise DaemonError(
            f"step {step_index}: daemon chose {sorted(picked)}, which is not a nonempty subset of "
            f"the enabled set {sorted(enabled)}"
        )
    return picked


def _check_shapes(topology: Topology, alg: Algorithm, ids: IdAssignment, config: Configuration) -> None:
    if ids.n != topology.n or config.n != topology.n:
        raise ShapeError(f"topology has {topology.n} nodes, ids {ids.n}, configuration {config.n}")
    if config.f != alg.f:
        raise ShapeError(f"configuration uses f={config.f}, algorithm f={alg.f}")
    if any(deg != alg.d for deg in topology.degree_profile):
        raise ShapeError(f"algorithm expects degree {alg.d}, topology degrees {sorted(set(topology.degree_profile))}")


def enabled_set(topology: Topology, alg: Algorithm, ids: IdAssignment, config: Configuration) -> frozenset[int]:
    _check_shapes(topology, alg, ids, config)
    return frozenset(
        v for v in range(topology.n)
        if is_enabled(alg, ids[v], config[v], neighbor_view(topology, config, v))
    )


def step(topology: Topology, alg: Algorithm, ids: IdAssignment, config: Configuration,
         active: Iterable[int]) -> Configuration:
    """Every active node reads the old configuration and writes its new state."""
    active = frozenset(active)
    if not active:
        _check_shapes(topology, alg, ids, config)
        return config
    enabled = enabled_set(topology, alg, ids, config)
    if not active <= enabled:
        raise DaemonError(f"nodes {sorted(active - enabled)} are not enabled")
    return config.replace(
        {v: evaluate(alg, ids[v], config[v], neighbor_view(topology, config, v)) for v in active}
    )

