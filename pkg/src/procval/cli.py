"""Command-line workbench tying the modules together over text files.

Exit codes: 0 success, 2 parse error, 3 resource cap, 4 evaluation error,
5 missing file or other failure.  Output is deterministic line-oriented
text; `--json` switches to one record per line with a fixed key order.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bisim as bs
from . import encodings as enc
from . import lattice as lat
from . import synth as sy
from .fixpoint import FixpointError
from .lexer import ParseError
from .pel import (
    BudgetExceeded, EvalError, Evaluator, StateSpace, parse_atom_interp,
    parse_formula, union_lts,
)
from .proc import (
    ProcError, StateCapExceeded, UnknownConstant, build_lts, parse_process,
    parse_system, process_text, system_text,
)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _emit(args, record: dict, human: str):
    if args.json:
        print(json.dumps(record))
    else:
        print(human)


# ---------------------------------------------------------------------------
# Commands


def cmd_lts(args) -> int:
    spec = parse_system(_read(args.system))
    if args.initial is not None:
        initial = parse_process(args.initial, spec, strict=args.strict)
    elif spec.initial is not None:
        initial = spec.initial
    else:
        print("error: no initial process (use --initial)", file=sys.stderr)
        return 2
    lts = build_lts(initial, spec, cap=args.cap)
    _emit(args, {"type": "summary", "states": len(lts.states),
                 "edges": len(lts.edges)},
          f"states: {len(lts.states)}")
    for i, state in enumerate(lts.states):
        _emit(args, {"type": "state", "index": i, "text": process_text(state)},
              f"{i}: {process_text(state)}")
    if not args.json:
        print(f"edges: {len(lts.edges)}")
    for src, lab, dst in sorted(lts.edges, key=lambda e: (e[0], e[1].text(), e[2])):
        _emit(args, {"type": "edge", "src": src, "label": lab.text(), "dst": dst},
              f"{src} -{lab.text()}-> {dst}")
    return 0


def cmd_eval(args) -> int:
    systems = [parse_system(_read(path)) for path in args.system]
    lattice = lat.make_lattice(lat.parse_lattice_spec(_read(args.lattice)))
    formula = parse_formula(_read(args.formula))
    atoms = parse_atom_interp(_read(args.atoms), lattice) if args.atoms else {}
    if len(systems) == 1 and len(args.tuple) > 1:
        systems = systems * len(args.tuple)
    if len(systems) != len(args.tuple):
        print("error: need one system per tuple position", file=sys.stderr)
        return 2
    spaces = [StateSpace(spec, cap=args.cap) for spec in systems]
    processes = [parse_process(text, spec, strict=args.strict)
                 for text, spec in zip(args.tuple, systems)]
    ev = Evaluator(spaces, lattice, atoms, eq_budget=args.budget,
                   strict_equations=not args.permissive)
    value = ev.evaluate_at(formula, processes)
    _emit(args, {"type": "value", "text": lat.element_text(value)},
          lat.element_text(value))
    if args.table:
        table = ev.value_function(formula)
        for key in sorted(table.table):
            texts = [process_text(space.states[i])
                     for space, i in zip(spaces, key)]
            _emit(args, {"type": "entry", "tuple": texts,
                         "value": lat.element_text(table.table[key])},
                  f"({', '.join(texts)}): {lat.element_text(table.table[key])}")
    return 0


def cmd_bisim(args) -> int:
    spec = parse_system(_read(args.system))
    left = parse_process(args.left, spec, strict=args.strict)
    right = parse_process(args.right, spec, strict=args.strict)
    lts = union_lts(spec, [left, right], cap=args.cap)
    p, q = lts.state_index(left), lts.state_index(right)
    if args.mode == "strong":
        same, _ = bs.strong_bisimilar(lts, p, q)
        depth = None if same else bs.distinguishing_depth(lts, p, q)
    elif args.mode == "weak":
        same, depth = bs.weak_bisimilar(lts, p, q), None
    elif args.mode == "approx":
        same, depth = bs.strong_approx(args.depth, lts, p, q), args.depth
    else:  # via-pel
        same, depth = bs.bisim_via_pel(lts, p, q), None
    verdict = "BISIMILAR" if same else "NOT_BISIMILAR"
    human = verdict
    if args.mode == "approx":
        human = f"{verdict} k={depth}"
    elif not same and depth is not None:
        human = f"{verdict} distinguishing_depth={depth}"
    _emit(args, {"type": "bisim", "mode": args.mode, "result": bool(same),
                 "depth": depth}, human)
    return 0


def cmd_synth(args) -> int:
    spec = parse_system(_read(args.system))
    lattice = lat.make_lattice(lat.parse_lattice_spec(_read(args.lattice)))
    atoms = parse_atom_interp(_read(args.atoms), lattice) if args.atoms else {}
    bounds = sy.Bounds(
        max_depth=args.max_depth,
        pool=tuple(args.pool.split(",")) if args.pool else tuple(sorted(spec.constants)),
        max_candidates=args.max_candidates,
        max_solutions=args.max_solutions,
        state_cap=args.cap,
        eq_budget=args.budget)
    if args.driver in ("program", "counterexample"):
        formula = parse_formula(_read(args.formula))
        run = sy.synth_program if args.driver == "program" else sy.gen_counterexample
        result = run(formula, atoms, spec, bounds, lattice)
    elif args.driver == "bisimilar":
        if not args.fixed:
            print("error: --driver bisimilar needs --fixed <reference>",
                  file=sys.stderr)
            return 2
        reference = parse_process(args.fixed[0], spec, strict=args.strict)
        result = sy.gen_bisimilar(reference, spec, bounds, lattice)
    elif args.driver == "controller":
        if not args.environment:
            print("error: --driver controller needs --environment <process>",
                  file=sys.stderr)
            return 2
        formula = parse_formula(_read(args.formula))
        target = lat.parse_element(lattice, args.target)
        environment = parse_process(args.environment, spec, strict=args.strict)
        result = sy.synth_controller(formula, environment, target, atoms,
                                     spec, bounds, lattice)
    else:
        formula = parse_formula(_read(args.formula))
        target = lat.parse_element(lattice, args.target)
        fixed = tuple(parse_process(t, spec, strict=args.strict)
                      for t in args.fixed)
        problem = sy.SynthProblem(formula, atoms, {}, lattice, target, spec,
                                  bounds, free_count=args.free, fixed=fixed)
        result = sy.synthesize(problem)
    for combo in result.solutions:
        text = ", ".join(process_text(p) for p in combo)
        _emit(args, {"type": "solution", "tuple": [process_text(p) for p in combo]},
              f"solution: {text}")
    _emit(args, {"type": "summary", "solutions": len(result.solutions),
                 "candidates": result.candidates_tried,
                 "failures": len(result.failures)},
          f"solutions: {len(result.solutions)} candidates: "
          f"{result.candidates_tried} failures: {len(result.failures)}")
    return 0


def cmd_encode_tm(args) -> int:
    machine, config = enc.parse_tm(_read(args.machine))
    spec, proc = enc.trans_tm(machine, config)
    spec.initial = proc
    text = system_text(spec)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    if args.steps:
        report = enc.check_tm_simulation(machine, config, args.steps)
        print(report.text())
        if not report.ok:
            return 4
    return 0


def cmd_encode_pn(args) -> int:
    net, marking = enc.parse_pn(_read(args.net))
    spec, proc = enc.trans_pn(net, marking)
    spec.initial = proc
    text = system_text(spec)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    if args.steps:
        report = enc.check_pn_simulation(net, marking, args.steps)
        print(report.text())
        if not report.ok:
            return 4
    return 0


def cmd_lattice_check(args) -> int:
    spec = lat.parse_lattice_spec(_read(args.lattice))
    try:
        lattice = lat.make_lattice(spec)
    except lat.NotALattice as err:
        print(f"NOT_A_LATTICE: {err}")
        return 4
    except lat.EmptyUniverse as err:
        print(f"EMPTY_UNIVERSE: {err}")
        return 4
    violations = lat.verify_laws(lattice)
    if violations:  # pragma: no cover - constructors enforce the laws
        for v in violations:
            print(f"VIOLATION: {v}")
        return 4
    print(f"OK elements={lattice.size} bot={lat.element_text(lattice.bot)} "
          f"top={lat.element_text(lattice.top)}")
    return 0


# ---------------------------------------------------------------------------
# Wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procval",
        description="process calculus and lattice-valued evaluation workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true",
                       help="machine-readable line records")
        p.add_argument("--cap", type=int, default=10000,
                       help="reachable-state cap")
        p.add_argument("--strict", action="store_true",
                       help="reject constants not declared by the system")

    p = sub.add_parser("lts", help="build and print a transition system")
    p.add_argument("system")
    p.add_argument("--initial", help="initial process (defaults to the file's)")
    common(p)
    p.set_defaults(func=cmd_lts)

    p = sub.add_parser("eval", help="evaluate a formula at a process tuple")
    p.add_argument("--system", action="append", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--lattice", required=True)
    p.add_argument("--atoms")
    p.add_argument("--tuple", nargs="+", required=True,
                   help="one process per coordinate")
    p.add_argument("--table", action="store_true",
                   help="also print the full value table")
    p.add_argument("--budget", type=int, default=10 ** 6)
    p.add_argument("--permissive", action="store_true",
                   help="warn instead of failing on ill-formed equations")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bisim", help="bisimulation checking")
    p.add_argument("system")
    p.add_argument("--mode", choices=["strong", "weak", "approx", "via-pel"],
                   default="strong")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("-k", "--depth", type=int, default=1,
                   help="approximant depth (approx mode)")
    common(p)
    p.set_defaults(func=cmd_bisim)

    p = sub.add_parser("synth", help="enumerate processes hitting a target value")
    p.add_argument("--system", required=True)
    p.add_argument("--lattice", required=True)
    p.add_argument("--formula")
    p.add_argument("--atoms")
    p.add_argument("--target", default="True")
    p.add_argument("--free", type=int, default=1)
    p.add_argument("--fixed", nargs="*", default=[])
    p.add_argument("--environment", help="plant process (controller driver)")
    p.add_argument("--driver",
                   choices=["program", "counterexample", "bisimilar", "controller"])
    p.add_argument("--max-depth", type=int, default=2)
    p.add_argument("--pool", help="comma-separated constant pool")
    p.add_argument("--max-solutions", type=int, default=25)
    p.add_argument("--max-candidates", type=int, default=2000)
    p.add_argument("--budget", type=int, default=10 ** 6)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode-tm", help="translate a machine file to a system")
    p.add_argument("machine")
    p.add_argument("-o", "--out")
    p.add_argument("--steps", type=int, default=0,
                   help="also run the lockstep simulation check")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_encode_tm)

    p = sub.add_parser("encode-pn", help="translate a net file to a system")
    p.add_argument("net")
    p.add_argument("-o", "--out")
    p.add_argument("--steps", type=int, default=0,
                   help="also run the lockstep simulation check")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_encode_pn)

    p = sub.add_parser("lattice-check", help="validate a lattice spec file")
    p.add_argument("lattice")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_lattice_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 5
    except (ParseError, UnknownConstant) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except StateCapExceeded as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (BudgetExceeded, EvalError, FixpointError, ProcError,
            lat.LatticeError, enc.EncodingError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except Exception as err:  # pragma: no cover - last resort
        print(f"error: {err}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
