"""Enumerative synthesis: find processes whose evaluation hits a target value.

Candidates are every canonical term over a constant pool up to a depth
bound, streamed in size order.  Each candidate tuple is evaluated and kept
exactly when its value equals the target; accepted solutions are re-verified
by a fresh evaluation before being reported.  Evaluation failures (state
caps, budgets) disqualify the candidate and are recorded, never fatal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .lattice import Lattice, element_text
from .pel import (
    CtxAbs, CHole, CPar, CProc, Evaluator, Formula, StateSpace,
)
from .proc import (
    EPS, Choice, Const, Par, Process, Restrict, Seq, SystemSpec,
    canonicalize, process_text,
)
from .bisim import bisim_formula


@dataclass(frozen=True)
class Bounds:
    """Search-space limits for candidate enumeration and evaluation."""

    max_depth: int = 2
    pool: tuple = ()
    max_candidates: int = 2000
    max_solutions: int = 100
    sync_sets: tuple | None = None   # defaults to (empty, full alphabet)
    restrict_names: tuple | None = None  # defaults to the declared alphabet
    state_cap: int = 2000
    eq_budget: int = 10 ** 6


@dataclass
class SynthProblem:
    formula: Formula
    atoms: dict
    env: dict
    lattice: Lattice
    target: object
    system: SystemSpec
    bounds: Bounds
    free_count: int = 1
    fixed: tuple = ()

    def __post_init__(self):
        if self.free_count < 1:
            raise ValueError("at least one tuple position must be synthesized")
        self.lattice.check(self.target)


@dataclass
class SynthResult:
    solutions: list                  # tuples of processes, enumeration order
    failures: list = field(default_factory=list)  # (tuple, error text)
    candidates_tried: int = 0

    def first(self):
        return self.solutions[0] if self.solutions else None


def _node_count(p: Process) -> int:
    if isinstance(p, (Seq, Choice, Par)):
        return 1 + sum(_node_count(q) for q in p.parts)
    if isinstance(p, Restrict):
        return 1 + _node_count(p.body)
    return 1


def enumerate_processes(bounds: Bounds, system: SystemSpec | None = None) -> list:
    """All distinct canonical terms buildable within the bounds, ordered by
    size then text, truncated at max_candidates."""
    alphabet = tuple(sorted(system.alphabet)) if system is not None else ()
    sync_sets = bounds.sync_sets
    if sync_sets is None:
        sync_sets = (frozenset(),) if not alphabet else (frozenset(), frozenset(alphabet))
    sync_sets = tuple(frozenset(s) for s in sync_sets)
    restrict_names = bounds.restrict_names
    if restrict_names is None:
        restrict_names = alphabet
    layers = [set(), {EPS} | {Const(c) for c in bounds.pool}]
    seen = {canonicalize(p, system) for p in layers[1]}
    for depth in range(2, bounds.max_depth + 1):
        smaller = set().union(*layers)
        new = set()
        for left in smaller:
            for name in restrict_names:
                new.add(Restrict(name, left))
            for right in smaller:
                new.add(Seq((left, right)))
                new.add(Choice((left, right)))
                for sync in sync_sets:
                    new.add(Par(sync, (left, right)))
        layer = set()
        for p in new:
            c = canonicalize(p, system)
            if c not in seen:
                seen.add(c)
                layer.add(c)
        layers.append(layer | layers[-1])
    ordered = sorted(seen, key=lambda p: (_node_count(p), process_text(p)))
    return ordered[: bounds.max_candidates]


def _evaluate_tuple(problem: SynthProblem, processes) -> object:
    spaces = [StateSpace(problem.system, problem.bounds.state_cap)
              for _ in processes]
    ev = Evaluator(spaces, problem.lattice, problem.atoms, problem.env,
                   eq_budget=problem.bounds.eq_budget)
    return ev.evaluate_at(problem.formula, list(processes))


def synthesize(problem: SynthProblem) -> SynthResult:
    """Search candidate tuples for the leading free positions; keep tuples
    evaluating exactly to the target, re-verified by a fresh evaluation."""
    candidates = enumerate_processes(problem.bounds, problem.system)
    result = SynthResult(solutions=[])
    for combo in itertools.product(candidates, repeat=problem.free_count):
        full = tuple(combo) + tuple(problem.fixed)
        result.candidates_tried += 1
        try:
            value = _evaluate_tuple(problem, full)
        except Exception as err:  # per-candidate failures are data, not fatal
            result.failures.append((full, f"{type(err).__name__}: {err}"))
            continue
        if value == problem.target:
            check = _evaluate_tuple(problem, full)
            if check != problem.target:  # pragma: no cover - determinism guard
                result.failures.append((full, "re-verification mismatch"))
                continue
            result.solutions.append(full)
            if len(result.solutions) >= problem.bounds.max_solutions:
                break
    return result


def invert_eval(formula: Formula, atoms: dict, env: dict, lattice: Lattice,
                system: SystemSpec, bounds: Bounds, free_count: int = 1,
                fixed: tuple = ()) -> dict:
    """Bucket every candidate tuple by its evaluation value; the synthesis
    answer for target e is exactly the bucket at e."""
    problem = SynthProblem(formula, atoms, env, lattice,
                           lattice.bot, system, bounds,
                           free_count=free_count, fixed=tuple(fixed))
    candidates = enumerate_processes(bounds, system)
    buckets: dict = {}
    for combo in itertools.product(candidates, repeat=free_count):
        full = tuple(combo) + tuple(fixed)
        try:
            value = _evaluate_tuple(problem, full)
        except Exception:
            continue
        buckets.setdefault(element_text(value), []).append(full)
    return buckets


# ---------------------------------------------------------------------------
# Problem drivers


def synth_program(formula: Formula, atoms: dict, system: SystemSpec,
                  bounds: Bounds, lattice: Lattice, env: dict | None = None
                  ) -> SynthResult:
    """Find processes satisfying a boolean-valued specification."""
    return synthesize(SynthProblem(formula, atoms, dict(env or {}), lattice,
                                   lattice.top, system, bounds))


def gen_counterexample(formula: Formula, atoms: dict, system: SystemSpec,
                       bounds: Bounds, lattice: Lattice,
                       env: dict | None = None) -> SynthResult:
    """Find processes falsifying a boolean-valued specification."""
    return synthesize(SynthProblem(formula, atoms, dict(env or {}), lattice,
                                   lattice.bot, system, bounds))


def gen_bisimilar(reference: Process, system: SystemSpec, bounds: Bounds,
                  lattice: Lattice) -> SynthResult:
    """Find processes bisimilar to a reference, via the two-coordinate
    matching fixpoint with the reference on the fixed coordinate."""
    formula = bisim_formula(system.alphabet)
    return synthesize(SynthProblem(
        formula, {}, {}, lattice, lattice.top, system, bounds,
        free_count=1, fixed=(canonicalize(reference, system),)))


def synth_controller(value_formula: Formula, environment: Process,
                     target, atoms: dict, system: SystemSpec, bounds: Bounds,
                     lattice: Lattice, env: dict | None = None) -> SynthResult:
    """Find a controller whose composition with the environment process
    achieves the target value: candidates fill the hole of [X] |{}| Q."""
    ctx = CPar(frozenset(), (CHole("X"), CProc(canonicalize(environment, system))))
    wrapped = CtxAbs(("X",), (ctx,), value_formula)
    return synthesize(SynthProblem(wrapped, atoms, dict(env or {}), lattice,
                                   target, system, bounds))
