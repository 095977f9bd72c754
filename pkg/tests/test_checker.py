import dataclasses
import itertools
import json

import pytest
from hypothesis import given, settings, strategies as st

from sslab.algorithm import Algorithm, Behavior, random_table_algorithm
from sslab.checker import (NON_STABILIZING, STABILIZING, UNKNOWN, Trace, model_check_distributed,
                           model_check_synchronous, replay_witness, simulate)
from sslab.lowerbound import TrapTrace, lower_bound_witness
from sslab.model import Configuration, IdAssignment, make_ring
from sslab.problems import all_zero, coloring, custom, leader_election, spanning_tree, trivial
from sslab.scheduler import ADVERSARIAL, CENTRAL, RANDOM, Daemon, enabled_set, step

SYNC = Daemon.synchronous()


def replays(topology, alg, ids, trace):
    config = trace.initial
    for active, expected in trace.steps:
        config = step(topology, alg, ids, config, active)
        if config != expected:
            return False
    return True


# -- oracles -----------------------------------------------------------------


def sync_oracle(topology, alg, ids, spec):
    """Walk every start with scheduler.step; returns (stabilizing, bound)."""
    n, f = topology.n, alg.f
    bound = 0
    for states in itertools.product(range(1 << f), repeat=n):
        config = Configuration(f, states)
        seen, seq = {}, []
        while config not in seen:
            seen[config] = len(seq)
            seq.append(config)
            config = step(topology, alg, ids, config, enabled_set(topology, alg, ids, config))
        start = seen[config]
        legal = [spec.is_legal(topology, c) for c in seq]
        if not all(legal[start:]):
            return False, None
        first = len(seq)
        while first > 0 and legal[first - 1]:
            first -= 1
        bound = max(bound, first)
    return True, bound


def successor_sets(topology, alg, ids):
    graph = {}
    for states in itertools.product(range(1 << alg.f), repeat=topology.n):
        config = Configuration(alg.f, states)
        enabled = sorted(enabled_set(topology, alg, ids, config))
        if not enabled:
            graph[config] = {config}
            continue
        graph[config] = {
            step(topology, alg, ids, config, active)
            for k in range(1, len(enabled) + 1)
            for active in itertools.combinations(enabled, k)
        }
    return graph


def reachable(graph, x):
    out, todo = set(), list(graph[x])
    while todo:
        y = todo.pop()
        if y not in out:
            out.add(y)
            todo.extend(graph[y])
    return out


def distributed_oracle(topology, alg, ids, spec):
    """(stabilizing, bound, all_illegal_cycle_exists) by plain graph search."""
    graph = successor_sets(topology, alg, ids)
    legal = {x: spec.is_legal(topology, x) for x in graph}
    reach = {x: reachable(graph, x) for x in graph}
    if any(x in reach[x] and not legal[x] for x in graph):
        illegal_graph = {x: {y for y in ys if not legal[y]} for x, ys in graph.items() if not legal[x]}
        pure = any(x in reachable(illegal_graph, x) for x in illegal_graph)
        return False, None, pure
    safe = {x for x in graph if legal[x] and all(legal[y] for y in reach[x])}
    memo = {}

    def longest(x, stack):
        if x in safe:
            return 0
        if x in stack:
            return float("inf")
        if x not in memo:
            memo[x] = 1 + max(longest(y, stack | {x}) for y in graph[x])
        return memo[x]

    worst = max(longest(x, frozenset()) for x in graph)
    return True, None if worst == float("inf") else worst, False


def random_instance(seed, n, f=1):
    ring = make_ring(n)
    alg = random_table_algorithm(f, ring.max_degree, n, seed)
    return ring, alg, IdAssignment.sequential(n)


SPECS = [coloring(), leader_election(), spanning_tree(), trivial(), all_zero(),
         custom("one-or-fewer", lambda t, c: sum(c.states) <= 1)]


# -- simulate ----------------------------------------------------------------


def test_flip_cycles(ring3, ids3, flip):
    trace = simulate(ring3, flip, ids3, SYNC, Configuration(1, (0, 0, 0)), 10)
    assert (trace.status.kind, trace.status.start, trace.status.period) == ("cycle", 0, 2)
    assert [c.states for c in trace.cycle()] == [(0, 0, 0), (1, 1, 1)]


@pytest.mark.parametrize("daemon", [SYNC, Daemon(CENTRAL), Daemon(RANDOM, seed=3)], ids=lambda d: d.kind)
def test_identity_is_fixed_at_once(ring3, ids3, identity, daemon):
    trace = simulate(ring3, identity, ids3, daemon, Configuration(1, (1, 0, 1)), 10)
    assert trace.status.kind == "fixed-point" and trace.status.start == 0
    assert trace.steps == []


def test_parity_settles(ring3, ids3, parity):
    trace = simulate(ring3, parity, ids3, SYNC, Configuration(1, (0, 0, 0)), 10)
    assert [c.states for c in trace.configurations] == [(0, 0, 0), (1, 0, 1)]
    assert trace.status.kind == "fixed-point" and trace.status.start == 1


def test_budget(ring3, ids3, flip):
    trace = simulate(ring3, flip, ids3, Daemon(CENTRAL), Configuration(1, (0, 0, 0)), 5)
    assert trace.status.kind == "budget-exhausted"
    assert len(trace.steps) == 5
    assert all(len(active) == 1 for active, _ in trace.steps)


def test_scripted_run(ring3, ids3, flip):
    daemon = Daemon(ADVERSARIAL, ((0,), (1, 2), (0, 1, 2)))
    trace = simulate(ring3, flip, ids3, daemon, Configuration(1, (0, 0, 0)), 3)
    assert [c.states for c in trace.configurations] == [(0, 0, 0), (1, 0, 0), (1, 1, 1), (0, 0, 0)]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(3, 6), st.sampled_from([0, 1, 2]), st.data())
def test_traces_replay(seed, n, which, data):
    ring, alg, ids = random_instance(seed, n)
    daemon = [SYNC, Daemon(CENTRAL, "random", seed=seed), Daemon(RANDOM, seed=seed)][which]
    initial = Configuration(1, data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    trace = simulate(ring, alg, ids, daemon, initial, 40)
    assert replays(ring, alg, ids, trace)
    if trace.status.kind == "cycle":
        configs = trace.configurations
        s, p = trace.status.start, trace.status.period
        assert configs[s] == configs[s + p]
    assert simulate(ring, alg, ids, daemon, initial, 40) == trace


def test_trace_json_round_trip(ring3, ids3, parity):
    trace = simulate(ring3, parity, ids3, SYNC, Configuration(1, (0, 1, 0)), 10)
    doc = json.loads(json.dumps(trace.to_json()))
    assert Trace.from_json(doc) == trace
    assert all(s["active"] == sorted(s["active"]) for s in doc["steps"])


# -- synchronous checker -----------------------------------------------------


def test_flip_is_not_stabilizing(ring3, ids3, flip):
    verdict = model_check_synchronous(ring3, flip, ids3, coloring())
    assert verdict.result == NON_STABILIZING
    assert verdict.counterexample.initial.states == (0, 0, 0)
    assert [c.states for c in verdict.counterexample.cycle()] == [(0, 0, 0), (1, 1, 1)]


def test_maxid_stabilizes(ring3, maxid):
    verdict = model_check_synchronous(ring3, maxid, IdAssignment((3, 5, 9), 9), leader_election())
    assert verdict.result == STABILIZING
    assert verdict.explored == 4096
    assert verdict.convergence_bound <= 40


def test_identity_trivially_stable(ring3, ids3, identity):
    verdict = model_check_synchronous(ring3, identity, ids3, trivial())
    assert (verdict.result, verdict.convergence_bound) == (STABILIZING, 0)


def test_cap_gives_unknown(ring3, maxid):
    verdict = model_check_synchronous(ring3, maxid, IdAssignment((3, 5, 9), 9), leader_election(), cap=4095)
    assert verdict.result == UNKNOWN


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5), st.sampled_from(range(len(SPECS))))
def test_synchronous_matches_oracle(seed, n, k):
    ring, alg, ids = random_instance(seed, n)
    spec = SPECS[k]
    verdict = model_check_synchronous(ring, alg, ids, spec)
    stable, bound = sync_oracle(ring, alg, ids, spec)
    assert (verdict.result == STABILIZING) == stable
    if stable:
        assert verdict.convergence_bound == bound
    else:
        trace = verdict.counterexample
        assert replays(ring, alg, ids, trace)
        assert any(not spec.is_legal(ring, c) for c in trace.cycle())
    assert model_check_synchronous(ring, alg, ids, spec).to_json() == verdict.to_json()


# -- distributed checker -----------------------------------------------------


def test_distributed_flip(ring3, ids3, flip):
    verdict = model_check_distributed(ring3, flip, ids3, coloring())
    assert verdict.result == NON_STABILIZING
    assert [c.states for c in verdict.counterexample.cycle()] == [(0, 0, 0), (1, 1, 1)]


def test_distributed_identity(ring3, ids3, identity):
    assert model_check_distributed(ring3, identity, ids3, trivial()).result == STABILIZING


def test_distributed_cap(ring3, maxid):
    verdict = model_check_distributed(ring3, maxid, IdAssignment((3, 5, 9), 9), leader_election(), cap=5000)
    assert verdict.result == UNKNOWN


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 4), st.sampled_from(range(len(SPECS))))
def test_distributed_matches_oracle(seed, n, k):
    ring, alg, ids = random_instance(seed, n)
    spec = SPECS[k]
    verdict = model_check_distributed(ring, alg, ids, spec)
    stable, bound, pure = distributed_oracle(ring, alg, ids, spec)
    assert (verdict.result == STABILIZING) == stable
    if stable:
        assert verdict.convergence_bound == bound
        return
    trace = verdict.counterexample
    assert replays(ring, alg, ids, trace)
    cycle = trace.cycle()
    assert cycle and any(not spec.is_legal(ring, c) for c in cycle)
    if pure:
        assert not any(spec.is_legal(ring, c) for c in cycle)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 4), st.sampled_from(range(len(SPECS))))
def test_synchronous_failure_implies_distributed_failure(seed, n, k):
    ring, alg, ids = random_instance(seed, n)
    if model_check_synchronous(ring, alg, ids, SPECS[k]).result == NON_STABILIZING:
        assert model_check_distributed(ring, alg, ids, SPECS[k]).result == NON_STABILIZING


# -- witnesses ---------------------------------------------------------------


@pytest.mark.parametrize("alg_name, spec, n", [("flip", leader_election(), 5), ("parity", spanning_tree(), 6),
                                               ("parity", coloring(), 4)])
def test_witness_agrees_with_checker(alg_name, spec, n, request):
    alg = request.getfixturevalue(alg_name)
    w = lower_bound_witness(alg, 2, spec, n=n, mode="empirical")
    assert w.replay_ok
    verdict = model_check_synchronous(make_ring(n), alg, w.ids, spec)
    assert verdict.result == NON_STABILIZING


def test_witness_replay_without_algorithm(flip):
    w = lower_bound_witness(flip, 2, coloring(), n=4, mode="empirical")
    assert replay_witness(w)


def test_corrupted_trace_is_reported(flip):
    w = lower_bound_witness(flip, 2, coloring(), n=4, mode="empirical")
    bad = TrapTrace(0, (), (0, 0))
    report = replay_witness(dataclasses.replace(w, traps=[bad, w.traps[1]]), flip)
    assert not report
    assert (report.s0, report.step, report.expected, report.observed) == (0, 1, 0, 1)
    assert report.node == 0


def test_wrong_behavior_is_reported(parity):
    w = lower_bound_witness(parity, 2, coloring(), n=4, mode="empirical")
    odd_ids = IdAssignment((1, 3, 5, 7), 16)
    report = replay_witness(dataclasses.replace(w, ids=odd_ids), parity)
    assert not report and "does not have the recorded behavior" in report.message


def test_legal_homogeneous_visit_is_reported(flip):
    w = lower_bound_witness(flip, 2, coloring(), n=4, mode="empirical")
    report = replay_witness(dataclasses.replace(w, problem=all_zero()), flip)
    assert not report and "legal" in report.message and report.step == 0


def test_missing_trap_is_reported(flip):
    w = lower_bound_witness(flip, 2, coloring(), n=4, mode="empirical")
    assert not replay_witness(dataclasses.replace(w, traps=w.traps[:1]))


def test_wrong_lasso_shape_is_reported(identity):
    w = lower_bound_witness(identity, 2, coloring(), n=4, mode="empirical")
    stretched = [TrapTrace(t.s0, (t.s0,), t.cycle) for t in w.traps]
    report = replay_witness(dataclasses.replace(w, traps=stretched))
    assert not report


def test_instance_shape_errors(ring3, flip):
    with pytest.raises(ValueError):
        model_check_synchronous(ring3, flip, IdAssignment.sequential(4), coloring())
    with pytest.raises(ValueError):
        model_check_synchronous(ring3, flip, IdAssignment.sequential(3), coloring(), f=2)


def test_anonymous_table_runs_like_behavior(ring3, ids3):
    b = Behavior(1, 2, (1, 0, 0, 0, 1, 1, 1, 0))
    alg = Algorithm.from_behavior(b)
    verdict = model_check_synchronous(ring3, alg, ids3, coloring())
    assert verdict.result == NON_STABILIZING
