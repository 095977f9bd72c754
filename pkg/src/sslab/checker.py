"""Simulation and explicit-state model checking of finite instances.

An instance is stabilizing when every execution ends in a cycle made of legal
configurations only.  ``convergence_bound`` is the largest number of steps
after which an execution is legal for good.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count as _count

import numpy as np

from . import kernels
from .algorithm import Algorithm, tabulate
from .lowerbound import Witness
from .model import Configuration, IdAssignment, Topology, make_ring
from .problems import ProblemSpec
from .scheduler import SYNCHRONOUS, Daemon, choose, enabled_set, step

STABILIZING = "STABILIZING"
NON_STABILIZING = "NON-STABILIZING"
UNKNOWN = "UNKNOWN"
DEFAULT_CAP = 1 << 24


@dataclass(frozen=True)
class Status:
    kind: str  # running, fixed-point, cycle, budget-exhausted
    start: int | None = None
    period: int | None = None

    def to_json(self) -> dict:
        return {"kind": self.kind, "start": self.start, "period": self.period}


@dataclass
class Trace:
    initial: Configuration
    steps: list[tuple[tuple[int, ...], Configuration]] = field(default_factory=list)
    status: Status = Status("running")

    @property
    def configurations(self) -> list[Configuration]:
        return [self.initial] + [c for _, c in self.steps]

    def cycle(self) -> list[Configuration]:
        """Configurations repeated forever; empty unless the run ended in a lasso."""
        configs = self.configurations
        if self.status.kind == "fixed-point":
            return [configs[self.status.start]]
        if self.status.kind == "cycle":
            return configs[self.status.start:self.status.start + self.status.period]
        return []

    def to_json(self) -> dict:
        return {
            "initial": self.initial.to_json(),
            "steps": [{"active": sorted(a), "states": list(c.states)} for a, c in self.steps],
            "status": self.status.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Trace":
        initial = Configuration.from_json(data["initial"])
        steps = [(tuple(s["active"]), Configuration(initial.f, s["states"])) for s in data["steps"]]
        st = data["status"]
        return cls(initial, steps, Status(st["kind"], st.get("start"), st.get("period")))


@dataclass
class Verdict:
    result: str
    convergence_bound: int | None = None
    counterexample: Trace | None = None
    explored: int = 0

    def to_json(self) -> dict:
        return {
            "result": self.result,
            "convergence_bound": self.convergence_bound,
            "counterexample": None if self.counterexample is None else self.counterexample.to_json(),
            "explored": self.explored,
        }


def simulate(topology: Topology, alg: Algorithm, ids: IdAssignment, daemon: Daemon,
             initial: Configuration, budget: int) -> Trace:
    """Run until no node is enabled, a configuration repeats (synchronous
    daemon only), or ``budget`` steps have been taken."""
    trace = Trace(initial)
    seen = {initial.pack(): 0} if daemon.kind == SYNCHRONOUS else None
    config = initial
    for t in _count():
        enabled = enabled_set(topology, alg, ids, config)
        if not enabled:
            trace.status = Status("fixed-point", t)
            break
        if t >= budget:
            trace.status = Status("budget-exhausted")
            break
        active = choose(daemon, enabled, t)
        config = step(topology, alg, ids, config, active)
        trace.steps.append((tuple(sorted(active)), config))
        if seen is not None:
            key = config.pack()
            if key in seen:
                trace.status = Status("cycle", seen[key], t + 1 - seen[key])
                break
            seen[key] = t + 1
    return trace


def _node_tables(topology: Topology, alg: Algorithm, ids: IdAssignment):
    outputs, enabled = zip(*(tabulate(alg, ids[v]) for v in range(topology.n)))
    return np.array(outputs, dtype=np.int64), np.array(enabled, dtype=bool)


def _check_instance(topology, alg, ids, f):
    if f is not None and f != alg.f:
        raise ValueError(f"f={f} disagrees with the algorithm's f={alg.f}")
    if ids.n != topology.n:
        raise ValueError(f"{ids.n} identifiers for {topology.n} nodes")
    if any(d != alg.d for d in topology.degree_profile):
        raise ValueError(f"algorithm expects degree {alg.d}")


def model_check_synchronous(topology: Topology, alg: Algorithm, ids: IdAssignment, spec: ProblemSpec,
                            f: int | None = None, cap: int = DEFAULT_CAP) -> Verdict:
    """Follow the synchronous execution from every configuration to its lasso."""
    _check_instance(topology, alg, ids, f)
    f, n = alg.f, topology.n
    total = 1 << (f * n)
    if total > cap:
        return Verdict(UNKNOWN, explored=0)
    tables, _ = _node_tables(topology, alg, ids)
    ports = np.array(topology.ports, dtype=np.int64)
    succ = kernels.sync_successors(tables, ports, f, n)
    legal = spec.legal_mask(topology, f, np.arange(total, dtype=np.uint64))
    settle = kernels.settle_times(succ, legal)
    bad = np.flatnonzero(settle < 0)
    if bad.size == 0:
        return Verdict(STABILIZING, convergence_bound=int(settle.max()), explored=total)
    start, _ = _pick_counterexample(succ, legal, bad)
    trace = simulate(topology, alg, ids, Daemon.synchronous(), Configuration.unpack(int(start), n, f), total + 1)
    return Verdict(NON_STABILIZING, counterexample=trace, explored=total)


def _pick_counterexample(succ: np.ndarray, legal: np.ndarray, bad: np.ndarray) -> tuple[int, bool]:
    """First bad start whose cycle is entirely illegal, else the first bad
    start; the flag tells which."""
    examined = set()
    for x in bad.tolist():
        if x in examined:
            continue
        order: dict[int, int] = {}
        y = x
        while y not in order and y not in examined:
            order[y] = len(order)
            y = int(succ[y])
        examined.update(order)
        if y in order:
            cycle = list(order)[order[y]:]
            if not legal[cycle].any():
                return x, True
    return int(bad[0]), False


def model_check_distributed(topology: Topology, alg: Algorithm, ids: IdAssignment, spec: ProblemSpec,
                            f: int | None = None, cap: int = 1 << 22) -> Verdict:
    """Search every daemon choice (any nonempty subset of the enabled nodes).

    ``cap`` bounds configurations plus transitions explored.
    """
    _check_instance(topology, alg, ids, f)
    f, n = alg.f, topology.n
    total = 1 << (f * n)
    if total > cap:
        return Verdict(UNKNOWN, explored=0)
    tables, etables = _node_tables(topology, alg, ids)
    inputs = kernels.local_inputs(np.array(topology.ports, dtype=np.int64), f, n)
    nodes = np.arange(n)
    new = tables[nodes[None, :], inputs]
    en = etables[nodes[None, :], inputs]
    codes = np.arange(total, dtype=np.int64)
    shifts = nodes * f
    own = (codes[:, None] >> shifts[None, :]) & ((1 << f) - 1)
    delta = ((new - own) << shifts[None, :]).tolist()
    en_list = en.tolist()
    sizes = en.sum(axis=1)
    transitions = int(((1 << sizes) - 1).sum())
    if total + transitions > cap:
        return Verdict(UNKNOWN, explored=0)
    legal_arr = spec.legal_mask(topology, f, codes.astype(np.uint64))
    legal = legal_arr.tolist()

    # the synchronous daemon is one adversary; prefer its lasso when it avoids legality
    sync_succ = codes + ((new - own) << shifts[None, :]).sum(axis=1)
    bad = np.flatnonzero(kernels.settle_times(sync_succ, legal_arr) < 0)
    if bad.size:
        start, all_illegal = _pick_counterexample(sync_succ, legal_arr, bad)
        if all_illegal:
            trace = simulate(topology, alg, ids, Daemon.synchronous(), Configuration.unpack(start, n, f), total + 1)
            return Verdict(NON_STABILIZING, counterexample=trace, explored=total + transitions)

    succs: list[list[int]] = []
    for x in range(total):
        movers = [v for v in range(n) if en_list[x][v]]
        if not movers:
            succs.append([x])  # terminal: the execution stays here
            continue
        out = set()
        for mask in range(1, 1 << len(movers)):
            y = x
            for i, v in enumerate(movers):
                if mask >> i & 1:
                    y += delta[x][v]
            out.add(y)
        succs.append(sorted(out))
    explored = total + transitions

    def trace_of(cycle: list[int]) -> Trace:
        configs = [Configuration.unpack(x, n, f) for x in cycle]
        if len(cycle) == 1 and not any(en_list[cycle[0]]):
            return Trace(configs[0], [], Status("fixed-point", 0))
        steps = []
        for i, x in enumerate(cycle):
            y = cycle[(i + 1) % len(cycle)]
            changed = [v for v in range(n) if delta[x][v] and ((x ^ y) >> (v * f)) & ((1 << f) - 1)]
            if not changed:
                changed = [next(v for v in range(n) if en_list[x][v] and not delta[x][v])]
            steps.append((tuple(changed), configs[(i + 1) % len(cycle)]))
        return Trace(configs[0], steps, Status("cycle", 0, len(cycle)))

    illegal_only = [[y for y in ys if not legal[y]] if not legal[x] else [] for x, ys in enumerate(succs)]
    cyc = _find_cycle(illegal_only)
    if cyc is None:
        sccs = _tarjan(succs)
        for comp in sccs:
            if _is_cyclic(comp, succs) and any(not legal[x] for x in comp):
                bad = next(x for x in comp if not legal[x])
                cyc = _cycle_through(bad, set(comp), succs)
                break
        else:
            return Verdict(STABILIZING, convergence_bound=_adversarial_bound(sccs, succs, legal), explored=explored)
    return Verdict(NON_STABILIZING, counterexample=trace_of(cyc), explored=explored)


def _tarjan(succs: list[list[int]]) -> list[list[int]]:
    """Strongly connected components, sinks first."""
    index = [-1] * len(succs)
    low = [0] * len(succs)
    on_stack = [False] * len(succs)
    stack: list[int] = []
    comps = []
    counter = 0
    for root in range(len(succs)):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            ws = succs[v]
            while i < len(ws):
                w = ws[i]
                i += 1
                if index[w] < 0:
                    work.append((v, i))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def _is_cyclic(comp: list[int], succs: list[list[int]]) -> bool:
    return len(comp) > 1 or comp[0] in succs[comp[0]]


def _cycle_through(x: int, within: set[int], succs: list[list[int]]) -> list[int]:
    """Shortest cycle from ``x`` back to ``x`` inside ``within`` (BFS)."""
    parent = {}
    frontier = [x]
    while frontier:
        nxt = []
        for y in frontier:
            for z in succs[y]:
                if z not in within:
                    continue
                if z == x:
                    path = [y]
                    while path[-1] != x:
                        path.append(parent[path[-1]])
                    return path[::-1]
                if z not in parent:
                    parent[z] = y
                    nxt.append(z)
        frontier = nxt
    raise ValueError(f"no cycle through {x}")


def _find_cycle(succs: list[list[int]]) -> list[int] | None:
    for comp in _tarjan(succs):
        if _is_cyclic(comp, succs):
            return _cycle_through(min(comp), set(comp), succs)
    return None


def _adversarial_bound(sccs: list[list[int]], succs: list[list[int]], legal: list[bool]) -> int | None:
    """Worst case over daemon choices of the steps until legal forever; None
    when a cycle can be left toward an illegal configuration."""
    comp_of = {}
    for k, comp in enumerate(sccs):
        for x in comp:
            comp_of[x] = k
    # sccs come sinks first, so successors' values are ready
    value: list[float] = [0] * len(sccs)
    for k, comp in enumerate(sccs):
        cyclic = _is_cyclic(comp, succs)
        best = 0.0
        for x in comp:
            here = 1 if not legal[x] else 0
            for y in succs[x]:
                ky = comp_of[y]
                if ky != k and value[ky] > 0:
                    here = max(here, value[ky] + 1)
            best = max(best, here)
        value[k] = float("inf") if cyclic and best > 0 else best
    worst = max(value, default=0)
    return None if worst == float("inf") else int(worst)


@dataclass
class ReplayReport:
    ok: bool
    message: str = "ok"
    s0: int | None = None
    step: int | None = None
    node: int | None = None
    expected: int | None = None
    observed: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def replay_witness(w: Witness, alg: Algorithm | None = None) -> ReplayReport:
    """Re-run every trap of ``w`` with the synchronous daemon.

    With ``alg`` the real identifier-based algorithm runs on the recorded
    identifiers; without it the recorded behavior runs at every node.
    """
    from .algorithm import Algorithm as _Algorithm
    from .lowerbound import extract_behavior

    topology = make_ring(w.n)
    if alg is None:
        runner = _Algorithm.from_behavior(w.behavior)
    else:
        runner = alg
        for i in w.ids.ids:
            if extract_behavior(alg, i).table != w.behavior.table:
                return ReplayReport(False, f"identifier {i} does not have the recorded behavior")
    if sorted(t.s0 for t in w.traps) != list(range(1 << w.f)):
        return ReplayReport(False, "traps do not cover every homogeneous start")
    for trap in w.traps:
        expected = list(trap.states)
        if not expected or expected[0] != trap.s0 or not trap.cycle:
            return ReplayReport(False, "malformed trap", s0=trap.s0)
        initial = Configuration.homogeneous(w.n, w.f, trap.s0)
        trace = simulate(topology, runner, w.ids, Daemon.synchronous(), initial, len(expected) + 1)
        observed = trace.configurations
        for t, config in enumerate(observed[: len(expected)]):
            for v, s in enumerate(config.states):
                if s != expected[t]:
                    return ReplayReport(False, "trace diverges", trap.s0, t, v, expected[t], s)
            if w.problem.is_legal(topology, config):
                return ReplayReport(False, f"step {t} is legal for {w.problem.label}", trap.s0, t)
        if len(observed) < len(expected):
            t = len(observed)
            return ReplayReport(False, "execution stopped early", trap.s0, t, 0, expected[t], observed[-1][0])
        start, period = _lasso_of(trace)
        if (start, period) != (len(trap.prefix), len(trap.cycle)):
            return ReplayReport(
                False, f"observed lasso (prefix {start}, period {period}) differs from the record", trap.s0
            )
    return ReplayReport(True)


def _lasso_of(trace: Trace) -> tuple[int | None, int | None]:
    if trace.status.kind == "fixed-point":
        return trace.status.start, 1
    if trace.status.kind == "cycle":
        return trace.status.start, trace.status.period
    return None, None
