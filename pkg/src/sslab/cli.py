"""Command-line front end.

Exit codes: 0 success; 1 failed check (replay mismatch, spec not
non-homogeneous); 2 non-stabilizing and 3 unknown (``check`` only);
4 inapplicable problem and 5 no uniform identifier set (``witness`` only);
64 bad usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .algorithm import Algorithm, AlgorithmError, load_algorithm
from .checker import (NON_STABILIZING, STABILIZING, model_check_distributed, model_check_synchronous,
                      replay_witness, simulate)
from .dsl import DSLError
from .lowerbound import (InapplicableError, NoUniformSetError, TabulationLimitError, behavior_cardinality,
                         bucket_identifiers, lower_bound_witness)
from .model import Configuration, IdAssignment, Topology, TopologyError, make_regular, make_ring
from .problems import ProblemSpec, SpecError, problem_by_name, verify_non_homogeneous
from .scheduler import ADVERSARIAL, CENTRAL, RANDOM, Daemon, DaemonError, load_script

REPORT_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_NONSTAB, EXIT_UNKNOWN = 0, 1, 2, 3
EXIT_INAPPLICABLE, EXIT_NO_UNIFORM, EXIT_USAGE = 4, 5, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sha256(data: str | bytes) -> str:
    return hashlib.sha256(data.encode() if isinstance(data, str) else data).hexdigest()


def _exponent(text: str) -> Fraction:
    try:
        c = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid exponent {text!r}")
    if c <= 1:
        raise argparse.ArgumentTypeError(f"c must be greater than 1 (got {text})")
    return c


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _topology(args) -> Topology:
    if args.ring is not None:
        return make_ring(args.ring, scrambled=args.scrambled, seed=args.seed)
    if args.regular is not None:
        n, d = args.regular
        if not args.edges:
            raise UsageError("--regular needs --edges")
        edges = [tuple(int(x) for x in e.split("-")) for e in args.edges.split(",")]
        return make_regular(n, d, edges)
    raise UsageError("give --ring N or --regular N D --edges ...")


def _problem(name: str) -> ProblemSpec:
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        return ProblemSpec.from_json(json.loads(path.read_text(encoding="utf-8")))
    return problem_by_name(name)


def _ids(args, n: int) -> IdAssignment:
    ids = args.ids or list(range(1, n + 1))
    if len(ids) != n:
        raise UsageError(f"--ids lists {len(ids)} identifiers for {n} nodes")
    return IdAssignment(tuple(ids), max(max(ids), n))


def _alg_inputs(args, alg: Algorithm) -> dict:
    return {"algorithm": alg.name, "algorithm_sha256": alg.digest()}


def cmd_count(args) -> tuple[int, dict, dict]:
    space = behavior_cardinality(args.f, args.d)
    print(f"behaviors for f={args.f}, d={args.d}: log2 = {space.log2_cardinality}")
    if space.materialized:
        print(f"exact count: {space.cardinality}")
    else:
        print("exact count not materialized (log2 above 10^6)")
    outputs = {
        "f": args.f, "d": args.d, "log2_cardinality": space.log2_cardinality,
        "cardinality": None if space.cardinality is None else str(space.cardinality),
    }
    return EXIT_OK, {}, outputs


def cmd_bucket(args) -> tuple[int, dict, dict]:
    alg = load_algorithm(args.alg, args.d)
    classes = bucket_identifiers(alg, args.lo, args.hi)
    sizes = [c.size for c in classes]
    word = "class" if len(sizes) == 1 else "classes"
    print(f"{len(sizes)} {word}: {', '.join(str(s) for s in sizes)}")
    outputs = {
        "range": [args.lo, args.hi],
        "classes": [{"behavior_hex": c.behavior.to_hex(), "size": c.size, "members": list(c.members)}
                    for c in classes],
    }
    return EXIT_OK, _alg_inputs(args, alg), outputs


def cmd_witness(args) -> tuple[int, dict, dict]:
    alg = load_algorithm(args.alg, 2)
    spec = _problem(args.problem)
    inputs = _alg_inputs(args, alg)
    try:
        w = lower_bound_witness(alg, args.c, spec, n=args.n, mode=args.mode)
    except InapplicableError as e:
        print(f"inapplicable: {e}", file=sys.stderr)
        return EXIT_INAPPLICABLE, inputs, {"error": "inapplicable", "message": str(e)}
    except NoUniformSetError as e:
        print(f"no uniform identifier set: {e}", file=sys.stderr)
        return EXIT_NO_UNIFORM, inputs, {"error": "no-uniform-set", "message": str(e)}
    doc = w.to_json()
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    mode = "guaranteed" if w.guaranteed else "empirical"
    print(f"ring size n={w.n}, c={args.c}, mode={mode}")
    print(f"{w.n} identifiers in [1, {w.ids.id_cap}] share one behavior (class size {w.id_class_size})")
    for t in w.traps:
        print(f"  s0={t.s0}: prefix {list(t.prefix)}, cycle {list(t.cycle)}")
    print(f"replay: {'OK' if w.replay_ok else 'FAILED'}; witness written to {args.out}")
    outputs = {"witness_file": str(args.out), "witness_sha256": _sha256(json.dumps(doc, sort_keys=True)),
               "n": w.n, "mode": mode, "id_class_size": w.id_class_size, "replay_ok": w.replay_ok}
    return (EXIT_OK if w.replay_ok else EXIT_FAIL), inputs, outputs


def cmd_check(args) -> tuple[int, dict, dict]:
    topology = _topology(args)
    alg = load_algorithm(args.alg, topology.max_degree)
    ids = _ids(args, topology.n)
    spec = _problem(args.problem)
    if args.daemon in ("sync", "synchronous"):
        verdict = model_check_synchronous(topology, alg, ids, spec, cap=args.cap)
    else:
        verdict = model_check_distributed(topology, alg, ids, spec, cap=args.cap)
    line = verdict.result
    if verdict.result == STABILIZING:
        bound = "unbounded" if verdict.convergence_bound is None else verdict.convergence_bound
        line += f" (convergence bound {bound}, {verdict.explored} explored)"
    elif verdict.result == NON_STABILIZING:
        cycle = verdict.counterexample.cycle()
        line += " cycle: " + " -> ".join("".join(map(str, c.states)) if alg.f == 1 else str(list(c.states))
                                          for c in cycle)
    else:
        line += " (exploration cap exceeded)"
    print(line)
    inputs = {**_alg_inputs(args, alg), "topology_sha256": _sha256(json.dumps(topology.to_json(), sort_keys=True))}
    code = {STABILIZING: EXIT_OK, NON_STABILIZING: EXIT_NONSTAB}.get(verdict.result, EXIT_UNKNOWN)
    return code, inputs, {"daemon": args.daemon, "problem": spec.to_json(), "verdict": verdict.to_json()}


def cmd_simulate(args) -> tuple[int, dict, dict]:
    topology = _topology(args)
    alg = load_algorithm(args.alg, topology.max_degree)
    ids = _ids(args, topology.n)
    states = args.init if args.init is not None else [0] * topology.n
    if len(states) != topology.n:
        raise UsageError(f"--init lists {len(states)} states for {topology.n} nodes")
    initial = Configuration(alg.f, tuple(states))
    if args.daemon in ("sync", "synchronous"):
        daemon = Daemon.synchronous()
    elif args.daemon == "central":
        daemon = Daemon(CENTRAL, args.policy, args.seed or 0)
    elif args.daemon == "random":
        daemon = Daemon(RANDOM, None, args.seed or 0)
    else:
        if not args.script:
            raise UsageError("--daemon script needs --script FILE")
        daemon = load_script(args.script)
    trace = simulate(topology, alg, ids, daemon, initial, args.budget)
    for t, config in enumerate(trace.configurations):
        active = "" if t == 0 else f"  active {list(trace.steps[t - 1][0])}"
        print(f"{t:4d}: {list(config.states)}{active}")
    st = trace.status
    print(f"status: {st.kind}" + (f" (start {st.start}, period {st.period})" if st.kind == "cycle" else ""))
    inputs = {**_alg_inputs(args, alg), "topology_sha256": _sha256(json.dumps(topology.to_json(), sort_keys=True))}
    return EXIT_OK, inputs, {"daemon": daemon.kind if daemon.kind != ADVERSARIAL else "script",
                             "trace": trace.to_json()}


def cmd_verify_spec(args) -> tuple[int, dict, dict]:
    topology = _topology(args)
    spec = _problem(args.problem)
    ok = verify_non_homogeneous(spec, topology, args.f)
    print(f"{spec.label} on {topology.kind} n={topology.n}, f={args.f}: "
          f"{'non-homogeneous' if ok else 'has a legal homogeneous configuration'}")
    return (EXIT_OK if ok else EXIT_FAIL), {}, {"problem": spec.to_json(), "f": args.f, "non_homogeneous": ok}


def cmd_replay(args) -> tuple[int, dict, dict]:
    from .lowerbound import Witness

    data = json.loads(Path(args.witness).read_text(encoding="utf-8"))
    w = Witness.from_json(data)
    alg = load_algorithm(args.alg, w.d) if args.alg else None
    report = replay_witness(w, alg)
    print("replay: OK" if report else f"replay: FAILED ({report.message}, s0={report.s0}, step={report.step}, "
                                      f"node={report.node}, expected={report.expected}, observed={report.observed})")
    return (EXIT_OK if report else EXIT_FAIL), {"witness_sha256": _sha256(json.dumps(data, sort_keys=True))}, {
        "replay_ok": report.ok, "message": report.message, "s0": report.s0, "step": report.step,
        "node": report.node, "expected": report.expected, "observed": report.observed}


def _add_topology(p):
    p.add_argument("--ring", type=int, metavar="N", help="ring on N nodes")
    p.add_argument("--scrambled", action="store_true", help="permute each ring node's port labels")
    p.add_argument("--seed", type=int, help="seed for --scrambled and the random daemon")
    p.add_argument("--regular", type=int, nargs=2, metavar=("N", "D"), help="d-regular graph")
    p.add_argument("--edges", help="edges for --regular, e.g. 0-1,1-2,2-0")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("count", help="number of possible node behaviors")
    p.add_argument("--f", type=int, required=True, help="register width in bits")
    p.add_argument("--d", type=int, default=2, help="node degree")
    p.set_defaults(run=cmd_count)

    p = sub.add_parser("bucket", help="group identifiers by behavior")
    p.add_argument("--alg", required=True, help="algorithm file (.ss or .json) or built-in name")
    p.add_argument("--lo", type=int, default=1)
    p.add_argument("--hi", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.set_defaults(run=cmd_bucket)

    p = sub.add_parser("witness", help="build a never-legal ring instance")
    p.add_argument("--alg", required=True)
    p.add_argument("--c", type=_exponent, required=True, help="identifier range exponent, > 1")
    p.add_argument("--problem", required=True, help="problem name or JSON spec file")
    p.add_argument("--n", type=int, help="ring size (default: the guaranteed size)")
    p.add_argument("--mode", choices=("auto", "guaranteed", "empirical"), default="auto")
    p.add_argument("--out", default="witness.json", help="witness output file")
    p.set_defaults(run=cmd_witness)

    p = sub.add_parser("check", help="model-check stabilization")
    p.add_argument("--alg", required=True)
    _add_topology(p)
    p.add_argument("--ids", type=_int_list, help="comma-separated identifiers (default 1..n)")
    p.add_argument("--problem", required=True)
    p.add_argument("--daemon", choices=("sync", "synchronous", "distributed"), default="sync")
    p.add_argument("--cap", type=int, default=1 << 24, help="exploration cap")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("simulate", help="run one execution")
    p.add_argument("--alg", required=True)
    _add_topology(p)
    p.add_argument("--ids", type=_int_list)
    p.add_argument("--init", type=_int_list, help="initial states (default all 0)")
    p.add_argument("--daemon", choices=("sync", "synchronous", "central", "random", "script"), default="sync")
    p.add_argument("--policy", choices=("lowest", "random"), default="lowest", help="central daemon policy")
    p.add_argument("--script", help="JSON array of node-index arrays, one per step")
    p.add_argument("--budget", type=int, default=100)
    p.set_defaults(run=cmd_simulate)

    p = sub.add_parser("verify-spec", help="check that no homogeneous configuration is legal")
    _add_topology(p)
    p.add_argument("--problem", required=True)
    p.add_argument("--f", type=int, required=True)
    p.set_defaults(run=cmd_verify_spec)

    p = sub.add_parser("replay", help="replay a witness file")
    p.add_argument("witness")
    p.add_argument("--alg", help="algorithm to replay with (default: the recorded behavior)")
    p.set_defaults(run=cmd_replay)

    for p in sub.choices.values():
        p.add_argument("--json", metavar="PATH", help="write the machine-readable run report")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        code, inputs, outputs = args.run(args)
    except UsageError as e:
        print(f"sslab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (AlgorithmError, DSLError, SpecError, TopologyError, TabulationLimitError, DaemonError,
            FileNotFoundError, ValueError) as e:
        print(f"sslab: error: {e}", file=sys.stderr)
        return EXIT_FAIL
    if args.json:
        report = {
            "version": REPORT_VERSION,
            "tool_version": __version__,
            "command": argv,
            "inputs": inputs,
            "outputs": outputs,
            "exit_code": code,
            "wall_time": round(time.perf_counter() - started, 6),
        }
        Path(args.json).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
