"""Lattice-valued evaluation formulas over tuples of processes.

A formula denotes a total function from n-tuples of reachable states to a
finite complete lattice.  Conjunction and disjunction are pointwise meet and
join; an indexed modality quantifies over the i-th coordinate's transitions
whose label matches exactly; equation fixpoints take the least or greatest
solution of Evl(lhs)(U) = Evl(rhs)(U) over the pointwise-ordered function
lattice; context abstraction precomposes evaluation with a substitution of
the argument processes into process contexts.

There is no negation in the syntax, so evaluation is monotone in the
variable environment throughout.
"""

from __future__ import annotations

import itertools
import warnings
from collections import deque
from dataclasses import dataclass

from . import fixpoint as fx
from .lattice import Lattice, ProductLattice, element_text, parse_element
from .lexer import ParseError, TokenStream, stream
from .proc import (
    EPS, Choice, Const, Eps, Label, LTS, Par, Process, Restrict, Seq,
    StateCapExceeded, SystemSpec, canonicalize, process_text, step,
)


class EvalError(Exception):
    pass


class UnboundVariable(EvalError):
    """A formula variable with no binder and no environment entry."""


class BudgetExceeded(EvalError):
    """A general equation would enumerate a function lattice past the budget."""


class IllFormedEquation(EvalError):
    """No substitution makes the equation's left side into its right side."""


# ---------------------------------------------------------------------------
# Formula syntax


class Formula:
    __slots__ = ()

    def __str__(self):
        return formula_text(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Box(Formula):
    label: Label
    coord: int
    body: Formula


@dataclass(frozen=True)
class Diamond(Formula):
    label: Label
    coord: int
    body: Formula


@dataclass(frozen=True)
class Lfp(Formula):
    var: str
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Gfp(Formula):
    var: str
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class CtxAbs(Formula):
    vars: tuple         # hole variable names, one per coordinate
    contexts: tuple     # Context trees, one per coordinate
    body: Formula


def box(action, coord, body) -> Formula:
    return Box(Label.single(action), coord, body)

def diamond(action, coord, body) -> Formula:
    return Diamond(Label.single(action), coord, body)

def and_all(parts):
    parts = list(parts)
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out

def or_all(parts):
    parts = list(parts)
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


# ---------------------------------------------------------------------------
# Process contexts


class Context:
    __slots__ = ()


@dataclass(frozen=True)
class CHole(Context):
    var: str


@dataclass(frozen=True)
class CProc(Context):
    proc: Process


@dataclass(frozen=True)
class CSeq(Context):
    parts: tuple


@dataclass(frozen=True)
class CChoice(Context):
    parts: tuple


@dataclass(frozen=True)
class CPar(Context):
    sync: frozenset
    parts: tuple


@dataclass(frozen=True)
class CRestrict(Context):
    name: str
    body: Context


def context_holes(ctx: Context) -> set:
    if isinstance(ctx, CHole):
        return {ctx.var}
    if isinstance(ctx, (CSeq, CChoice, CPar)):
        out = set()
        for c in ctx.parts:
            out |= context_holes(c)
        return out
    if isinstance(ctx, CRestrict):
        return context_holes(ctx.body)
    return set()


def fill_context(ctx: Context, binding: dict) -> Process:
    """Substitute processes for holes; contexts are never alpha-converted."""
    if isinstance(ctx, CHole):
        return binding[ctx.var]
    if isinstance(ctx, CProc):
        return ctx.proc
    if isinstance(ctx, CSeq):
        return Seq(tuple(fill_context(c, binding) for c in ctx.parts))
    if isinstance(ctx, CChoice):
        return Choice(tuple(fill_context(c, binding) for c in ctx.parts))
    if isinstance(ctx, CPar):
        return Par(ctx.sync, tuple(fill_context(c, binding) for c in ctx.parts))
    if isinstance(ctx, CRestrict):
        return Restrict(ctx.name, fill_context(ctx.body, binding))
    raise TypeError(f"not a context: {ctx!r}")


def context_text(ctx: Context) -> str:
    if isinstance(ctx, CHole):
        return f"[{ctx.var}]"
    if isinstance(ctx, CProc):
        return process_text(ctx.proc)
    if isinstance(ctx, CSeq):
        return " ; ".join(_ctx_part(c, (CChoice, CPar)) for c in ctx.parts)
    if isinstance(ctx, CPar):
        sep = " |{" + ",".join(sorted(ctx.sync)) + "}| "
        return sep.join(_ctx_part(c, (CChoice, CPar)) for c in ctx.parts)
    if isinstance(ctx, CChoice):
        return " + ".join(context_text(c) for c in ctx.parts)
    if isinstance(ctx, CRestrict):
        inner = context_text(ctx.body)
        atomic = isinstance(ctx.body, (CHole, CRestrict)) or (
            isinstance(ctx.body, CProc) and isinstance(ctx.body.proc, (Eps, Const)))
        if not atomic:
            inner = f"({inner})"
        return f"new {ctx.name} . {inner}"
    raise TypeError(f"not a context: {ctx!r}")


def _ctx_part(c, wrap_types):
    text = context_text(c)
    if isinstance(c, wrap_types):
        return f"({text})"
    return text


# ---------------------------------------------------------------------------
# Value functions


@dataclass
class ValFunction:
    """Total table from tuples of state indices to lattice elements."""

    domains: tuple   # per coordinate, a sorted tuple of state indices
    table: dict      # tuple -> element

    def tuples(self):
        return list(itertools.product(*self.domains))

    def at(self, key):
        return self.table[key]

    def restrict(self, domains) -> "ValFunction":
        if tuple(domains) == self.domains:
            return self
        table = {t: self.table[t] for t in itertools.product(*domains)}
        return ValFunction(tuple(domains), table)

    def __eq__(self, other):
        return (isinstance(other, ValFunction)
                and self.domains == other.domains and self.table == other.table)

    def leq(self, other: "ValFunction", lattice: Lattice) -> bool:
        """Pointwise order on shared domains."""
        return all(lattice.leq(v, other.table[t]) for t, v in self.table.items())


def constant_valfunction(domains, value) -> ValFunction:
    return ValFunction(tuple(domains),
                       {t: value for t in itertools.product(*domains)})


@dataclass
class AtomValue:
    """Partial atom interpretation: exact entries by state text, a default,
    or an arbitrary function of the state processes."""

    entries: dict | None = None       # tuple[str, ...] -> element
    default: object = None            # element; None means lattice bottom
    func: object = None               # callable(tuple[Process]) -> element

    def value_at(self, processes, lattice: Lattice):
        if self.func is not None:
            return self.func(tuple(processes))
        key = tuple(process_text(p) for p in processes)
        if self.entries and key in self.entries:
            return self.entries[key]
        return self.default if self.default is not None else lattice.bot


# ---------------------------------------------------------------------------
# Growable state spaces


class StateSpace:
    """Reachability-closed, append-only state table over one rule system."""

    def __init__(self, spec: SystemSpec, cap: int = 10000):
        self.spec = spec
        self.cap = cap
        self.states: list[Process] = []
        self.index: dict[Process, int] = {}
        self.edges: list[list] = []   # per state: [(Label, succ index), ...]

    @classmethod
    def from_lts(cls, lts: LTS) -> "StateSpace":
        space = cls(lts.spec, lts.cap)
        space.states = list(lts.states)
        space.index = {s: i for i, s in enumerate(space.states)}
        space.edges = [[] for _ in space.states]
        for src, lab, dst in lts.edges:
            space.edges[src].append((lab, dst))
        return space

    def ensure(self, p: Process) -> int:
        """Index of the canonical form of p, exploring its reachable set."""
        p = canonicalize(p, self.spec)
        if p in self.index:
            return self.index[p]
        root = self._add(p)
        queue = deque([root])
        while queue:
            i = queue.popleft()
            if self.edges[i] is not None:
                continue
            out = []
            for lab, succ in step(self.states[i], self.spec):
                if succ in self.index:
                    j = self.index[succ]
                else:
                    j = self._add(succ)
                    queue.append(j)
                out.append((lab, j))
            self.edges[i] = out
        return root

    def _add(self, p: Process) -> int:
        if len(self.states) >= self.cap:
            raise StateCapExceeded(
                f"state cap {self.cap} exceeded while growing the space",
                found=[process_text(s) for s in self.states])
        i = len(self.states)
        self.states.append(p)
        self.index[p] = i
        self.edges.append(None)
        return i

    def successors(self, i: int, label: Label) -> list:
        return [j for lab, j in self.edges[i] if lab == label]

    def closure(self, roots) -> tuple:
        """Sorted reachable closure of a set of state indices."""
        seen = set(roots)
        work = deque(seen)
        while work:
            i = work.popleft()
            for _, j in self.edges[i]:
                if j not in seen:
                    seen.add(j)
                    work.append(j)
        return tuple(sorted(seen))

    def all_indices(self) -> tuple:
        return tuple(range(len(self.states)))


def union_lts(spec: SystemSpec, processes, cap: int = 10000) -> LTS:
    """LTS covering the reachable closure of several root processes; the
    first root is the initial state."""
    space = StateSpace(spec, cap)
    for p in processes:
        space.ensure(p)
    edges = []
    for i, out in enumerate(space.edges):
        for lab, j in out:
            edges.append((i, lab, j))
    return LTS(spec, tuple(space.states), 0, tuple(edges), cap)


def pre_value_set(label: Label, coord: int, vf: ValFunction,
                  systems: list) -> dict:
    """Per tuple, the set of body values over matching successors of the
    coord-th component (exact label match)."""
    i = coord - 1
    out = {}
    for t in vf.tuples():
        vals = []
        for q in systems[i].successors(t[i], label):
            key = t[:i] + (q,) + t[i + 1:]
            if key in vf.table:
                vals.append(vf.table[key])
        uniq = []
        for v in vals:
            if not any(v == u for u in uniq):
                uniq.append(v)
        out[t] = sorted(uniq, key=element_text)
    return out


# ---------------------------------------------------------------------------
# The evaluator


class Evaluator:
    """Evaluation engine over n coordinate state spaces and one lattice.

    `atoms` maps atom names to AtomValue; `env` supplies interpretations for
    free formula variables the same way.  `eq_budget` caps the number of
    function-lattice entries a general (non-variable left side) equation may
    enumerate; `strict_equations` turns a failed equation shape check into an
    error instead of a warning.
    """

    def __init__(self, systems, lattice: Lattice, atoms=None, env=None, *,
                 eq_budget: int = 10 ** 6, strict_equations: bool = True,
                 use_fast_path: bool = True):
        self.systems = list(systems)
        self.lattice = lattice
        self.atoms = dict(atoms or {})
        self.env = dict(env or {})
        self.eq_budget = eq_budget
        self.strict_equations = strict_equations
        self.use_fast_path = use_fast_path

    @property
    def arity(self) -> int:
        return len(self.systems)

    # -- public entry points

    def evaluate_at(self, formula: Formula, processes) -> object:
        processes = list(processes)
        if len(processes) != self.arity:
            raise EvalError(f"expected {self.arity} processes, got {len(processes)}")
        roots = [space.ensure(p) for space, p in zip(self.systems, processes)]
        needed = tuple(space.closure({r})
                       for space, r in zip(self.systems, roots))
        vf = self._eval(formula, {}, needed)
        return vf.table[tuple(roots)]

    def value_function(self, formula: Formula) -> ValFunction:
        needed = tuple(space.closure(set(space.all_indices())) if space.states
                       else () for space in self.systems)
        if any(not d for d in needed):
            raise EvalError("a coordinate state space is empty; ensure() a root first")
        return self._eval(formula, {}, needed)

    # -- recursive evaluation

    def _eval(self, f: Formula, binds: dict, needed: tuple) -> ValFunction:
        if isinstance(f, Atom):
            if f.name not in self.atoms:
                raise EvalError(f"atom {f.name!r} has no interpretation")
            return self._materialize(self.atoms[f.name], needed)
        if isinstance(f, Var):
            if f.name in binds:
                return binds[f.name].restrict(needed)
            if f.name in self.env:
                return self._materialize(self.env[f.name], needed)
            raise UnboundVariable(f"variable {f.name!r} is unbound")
        if isinstance(f, (And, Or)):
            lv = self._eval(f.left, binds, needed)
            rv = self._eval(f.right, binds, needed)
            op = self.lattice.meet if isinstance(f, And) else self.lattice.join
            return ValFunction(needed, {t: op(lv.table[t], rv.table[t])
                                        for t in lv.tuples()})
        if isinstance(f, (Box, Diamond)):
            self._check_coord(f.coord)
            body = self._eval(f.body, binds, needed)
            i = f.coord - 1
            fold = self.lattice.meet_all if isinstance(f, Box) else self.lattice.join_all
            table = {}
            for t in body.tuples():
                vals = [body.table[t[:i] + (q,) + t[i + 1:]]
                        for q in self.systems[i].successors(t[i], f.label)]
                table[t] = fold(vals)
            return ValFunction(needed, table)
        if isinstance(f, (Lfp, Gfp)):
            return self._eval_equation(f, binds, needed)
        if isinstance(f, CtxAbs):
            return self._eval_ctx(f, binds, needed)
        raise TypeError(f"not a formula: {f!r}")

    def _materialize(self, value, needed) -> ValFunction:
        if isinstance(value, ValFunction):
            return value.restrict(needed)
        table = {}
        for t in itertools.product(*needed):
            procs = [space.states[i] for space, i in zip(self.systems, t)]
            v = value.value_at(procs, self.lattice)
            self.lattice.check(v)
            table[t] = v
        return ValFunction(tuple(needed), table)

    def _check_coord(self, coord):
        if not 1 <= coord <= self.arity:
            raise EvalError(f"coordinate {coord} out of range 1..{self.arity}")

    # -- context abstraction

    def _coordinate_images(self, f: CtxAbs, needed):
        """Per coordinate: map from state index to the index of the context
        instantiated with that state, growing the spaces as needed."""
        if len(f.vars) != self.arity or len(f.contexts) != self.arity:
            raise EvalError(
                f"context abstraction has {len(f.contexts)} coordinates, "
                f"expected {self.arity}")
        for x, ctx in zip(f.vars, f.contexts):
            holes = context_holes(ctx)
            if not holes <= {x}:
                raise EvalError(f"context for {x!r} uses foreign holes {sorted(holes - {x})}")
            if x not in holes:
                raise EvalError(f"hole variable {x!r} never occurs in its context")
        images = []
        for i, (x, ctx) in enumerate(zip(f.vars, f.contexts)):
            space = self.systems[i]
            img = {}
            for s in needed[i]:
                inst = fill_context(ctx, {x: space.states[s]})
                img[s] = space.ensure(inst)
            images.append(img)
        return images

    def _eval_ctx(self, f: CtxAbs, binds, needed) -> ValFunction:
        images = self._coordinate_images(f, needed)
        body_needed = tuple(
            space.closure(set(img.values()))
            for space, img in zip(self.systems, images))
        body = self._eval(f.body, binds, body_needed)
        table = {}
        for t in itertools.product(*needed):
            key = tuple(img[s] for img, s in zip(images, t))
            table[t] = body.table[key]
        return ValFunction(tuple(needed), table)

    # -- equation fixpoints

    def _eval_equation(self, f, binds, needed) -> ValFunction:
        least = isinstance(f, Lfp)
        psi_needed = self._binding_domains(f, binds, needed)
        self._wellformed(f)
        if self.use_fast_path and f.lhs == Var(f.var):
            return self._kleene(f, binds, psi_needed, least).restrict(needed)
        return self._general(f, binds, psi_needed, least).restrict(needed)

    def _binding_domains(self, f, binds, needed) -> tuple:
        """Domains the bound function must cover: everywhere the variable is
        read while evaluating either side, closed under reachability."""
        current = tuple(tuple(d) for d in needed)
        for _ in range(64):
            acc = [set(d) for d in current]
            self._collect_var_needed(f.lhs, f.var, binds, current, acc)
            self._collect_var_needed(f.rhs, f.var, binds, current, acc)
            grown = tuple(space.closure(s)
                          for space, s in zip(self.systems, acc))
            if grown == current:
                return current
            current = grown
        raise BudgetExceeded("equation binding domains failed to stabilize")

    def _collect_var_needed(self, f, var, binds, needed, acc):
        if isinstance(f, Var):
            if f.name == var:
                for i, d in enumerate(needed):
                    acc[i] |= set(d)
            return
        if isinstance(f, (Atom,)):
            return
        if isinstance(f, (And, Or)):
            self._collect_var_needed(f.left, var, binds, needed, acc)
            self._collect_var_needed(f.right, var, binds, needed, acc)
            return
        if isinstance(f, (Box, Diamond)):
            self._collect_var_needed(f.body, var, binds, needed, acc)
            return
        if isinstance(f, (Lfp, Gfp)):
            if f.var == var:
                return  # shadowed
            self._collect_var_needed(f.lhs, var, binds, needed, acc)
            self._collect_var_needed(f.rhs, var, binds, needed, acc)
            return
        if isinstance(f, CtxAbs):
            images = self._coordinate_images(f, needed)
            body_needed = tuple(
                space.closure(set(img.values()))
                for space, img in zip(self.systems, images))
            self._collect_var_needed(f.body, var, binds, body_needed, acc)
            return
        raise TypeError(f"not a formula: {f!r}")

    def _wellformed(self, f):
        try:
            check_equation_wellformed(f.lhs, f.rhs, f.var)
        except IllFormedEquation:
            if self.strict_equations:
                raise
            warnings.warn(
                f"equation on {f.var} has no substitution witness; "
                "evaluating anyway", stacklevel=2)

    def _kleene(self, f, binds, domains, least) -> ValFunction:
        seed = self.lattice.bot if least else self.lattice.top
        u = constant_valfunction(domains, seed)
        height = (self.lattice.size) * max(1, len(u.table)) + 2
        for _ in range(height):
            binds2 = dict(binds)
            binds2[f.var] = u
            nxt = self._eval(f.rhs, binds2, domains)
            if nxt == u:
                return u
            u = nxt
        raise EvalError("fixpoint iteration failed to stabilize")  # pragma: no cover

    def _general(self, f, binds, domains, least) -> ValFunction:
        tuples_list = list(itertools.product(*domains))
        n = len(tuples_list)
        size = self.lattice.size ** n
        if size * max(n, 1) > self.eq_budget:
            raise BudgetExceeded(
                f"function lattice of {size} entries over {n} tuples "
                f"exceeds budget {self.eq_budget}")
        fun_lat = ProductLattice([self.lattice] * n)

        def to_vf(vec):
            return ValFunction(domains, dict(zip(tuples_list, vec)))

        def as_vec(vf):
            return tuple(vf.table[t] for t in tuples_list)

        def side_table(side):
            table = {}
            for vec in fun_lat.elements():
                binds2 = dict(binds)
                binds2[f.var] = to_vf(vec)
                table[vec] = as_vec(self._eval(side, binds2, domains))
            return table

        fmap = fx.MonotoneMap(fun_lat, fun_lat, side_table(f.lhs))
        gmap = fx.MonotoneMap(fun_lat, fun_lat, side_table(f.rhs))
        solver = fx.least_solution if least else fx.greatest_solution
        return to_vf(solver(fmap, gmap))


# ---------------------------------------------------------------------------
# Equation well-formedness


def substitute(f: Formula, var: str, repl: Formula) -> Formula:
    if isinstance(f, Var):
        return repl if f.name == var else f
    if isinstance(f, Atom):
        return f
    if isinstance(f, And):
        return And(substitute(f.left, var, repl), substitute(f.right, var, repl))
    if isinstance(f, Or):
        return Or(substitute(f.left, var, repl), substitute(f.right, var, repl))
    if isinstance(f, Box):
        return Box(f.label, f.coord, substitute(f.body, var, repl))
    if isinstance(f, Diamond):
        return Diamond(f.label, f.coord, substitute(f.body, var, repl))
    if isinstance(f, (Lfp, Gfp)):
        if f.var == var:
            return f
        cls = type(f)
        return cls(f.var, substitute(f.lhs, var, repl), substitute(f.rhs, var, repl))
    if isinstance(f, CtxAbs):
        return CtxAbs(f.vars, f.contexts, substitute(f.body, var, repl))
    raise TypeError(f"not a formula: {f!r}")


def _ac_key(f: Formula):
    """Comparison key identifying formulas up to and/or reordering."""
    if isinstance(f, Atom):
        return ("atom", f.name)
    if isinstance(f, Var):
        return ("var", f.name)
    if isinstance(f, (And, Or)):
        tag = "and" if isinstance(f, And) else "or"
        kids = []
        stack = [f]
        while stack:
            g = stack.pop()
            if isinstance(g, type(f)):
                stack.extend([g.left, g.right])
            else:
                kids.append(_ac_key(g))
        return (tag, tuple(sorted(kids)))
    if isinstance(f, (Box, Diamond)):
        tag = "box" if isinstance(f, Box) else "dia"
        return (tag, f.label.counts, f.coord, _ac_key(f.body))
    if isinstance(f, (Lfp, Gfp)):
        tag = "lfp" if isinstance(f, Lfp) else "gfp"
        return (tag, f.var, _ac_key(f.lhs), _ac_key(f.rhs))
    if isinstance(f, CtxAbs):
        return ("ctx", f.vars, tuple(context_text(c) for c in f.contexts),
                _ac_key(f.body))
    raise TypeError(f"not a formula: {f!r}")


def ac_equal(a: Formula, b: Formula) -> bool:
    return _ac_key(a) == _ac_key(b)


def _flatten(f, cls):
    out = []
    stack = [f]
    while stack:
        g = stack.pop(0)
        if isinstance(g, cls):
            stack.insert(0, g.right)
            stack.insert(0, g.left)
        else:
            out.append(g)
    return out


def _match_candidates(pat: Formula, tgt: Formula, var: str):
    """Yield the substitution each match imposes: a Formula, or None when the
    pattern constrains nothing.  Associative-commutative across and/or."""
    if isinstance(pat, Var) and pat.name == var:
        yield tgt
        return
    if isinstance(pat, (Atom, Var)):
        if _ac_key(pat) == _ac_key(tgt):
            yield None
        return
    if isinstance(pat, (And, Or)):
        if not isinstance(tgt, type(pat)):
            return
        pats = _flatten(pat, type(pat))
        tgts = _flatten(tgt, type(pat))
        if len(pats) != len(tgts):
            return
        yield from _match_lists(pats, tgts, var)
        return
    if isinstance(pat, (Box, Diamond)):
        if (isinstance(tgt, type(pat)) and tgt.label == pat.label
                and tgt.coord == pat.coord):
            yield from _match_candidates(pat.body, tgt.body, var)
        return
    if isinstance(pat, (Lfp, Gfp)):
        if not isinstance(tgt, type(pat)) or tgt.var != pat.var:
            return
        if pat.var == var:  # inner binder shadows the hole
            if _ac_key(pat) == _ac_key(tgt):
                yield None
            return
        for b1 in _match_candidates(pat.lhs, tgt.lhs, var):
            for b2 in _match_candidates(pat.rhs, tgt.rhs, var):
                merged = _merge(b1, b2)
                if merged is not _FAIL:
                    yield merged
        return
    if isinstance(pat, CtxAbs):
        if (isinstance(tgt, CtxAbs) and tgt.vars == pat.vars
                and tgt.contexts == pat.contexts):
            yield from _match_candidates(pat.body, tgt.body, var)
        return
    raise TypeError(f"not a formula: {pat!r}")


_FAIL = object()


def _merge(b1, b2):
    if b1 is None:
        return b2
    if b2 is None:
        return b1
    if ac_equal(b1, b2):
        return b1
    return _FAIL


def _match_lists(pats, tgts, var):
    if not pats:
        yield None
        return
    head, rest = pats[0], pats[1:]
    for k in range(len(tgts)):
        for b1 in _match_candidates(head, tgts[k], var):
            for b2 in _match_lists(rest, tgts[:k] + tgts[k + 1:], var):
                merged = _merge(b1, b2)
                if merged is not _FAIL:
                    yield merged


def check_equation_wellformed(lhs: Formula, rhs: Formula, var: str) -> Formula:
    """Witness formula substituting the variable in lhs to give rhs, up to
    and/or reordering; raises IllFormedEquation when none exists."""
    if lhs == Var(var):
        return rhs
    for cand in _match_candidates(lhs, rhs, var):
        psi = cand if cand is not None else Var(var)
        if ac_equal(substitute(lhs, var, psi), rhs):
            return psi
    raise IllFormedEquation(
        f"no substitution for {var} turns {formula_text(lhs)} into {formula_text(rhs)}")


# ---------------------------------------------------------------------------
# Derived temporal operators


def expand_ctl(kind: str, alphabet, coord: int, phi: Formula,
               phi2: Formula | None = None) -> Formula:
    """Existential temporal operators as evaluation formulas over a finite
    alphabet: EX as a disjunction of diamonds, EG and EU as equation
    fixpoints."""
    actions = sorted(alphabet)
    if not actions:
        raise ValueError("empty alphabet")
    if kind == "EX":
        return or_all([diamond(a, coord, phi) for a in actions])
    if kind == "EG":
        v = "Xg"
        body = And(phi, or_all([box(a, coord, Var(v)) for a in actions]))
        return Gfp(v, Var(v), body)
    if kind == "EU":
        if phi2 is None:
            raise ValueError("EU needs two subformulas")
        v = "Xu"
        steps = or_all([diamond(a, coord, Var(v)) for a in actions])
        return Lfp(v, Var(v), Or(phi2, And(phi, steps)))
    raise ValueError(f"unknown operator {kind!r}")


# ---------------------------------------------------------------------------
# Text formats


def formula_text(f: Formula) -> str:
    if isinstance(f, Atom):
        return f"atom({f.name})"
    if isinstance(f, Var):
        return f.name
    if isinstance(f, And):
        return (f"{_txt(f.left, (Or, Lfp, Gfp, CtxAbs))} /\\ "
                f"{_txt(f.right, (And, Or, Lfp, Gfp, CtxAbs))}")
    if isinstance(f, Or):
        return (f"{_txt(f.left, (Lfp, Gfp, CtxAbs))} \\/ "
                f"{_txt(f.right, (Or, Lfp, Gfp, CtxAbs))}")
    if isinstance(f, (Box, Diamond)):
        opener, closer = ("[", "]") if isinstance(f, Box) else ("<", ">")
        names = []
        for n, c in f.label.counts:
            names.extend([n] * c)
        lab = names[0] if len(names) == 1 else "{" + ",".join(names) + "}"
        body = _txt(f.body, (And, Or, Lfp, Gfp, CtxAbs))
        return f"{opener}{lab}{closer}_{f.coord} {body}"
    if isinstance(f, (Lfp, Gfp)):
        kw = "mu" if isinstance(f, Lfp) else "nu"
        lhs = _txt(f.lhs, (Lfp, Gfp, CtxAbs))
        rhs = _txt(f.rhs, (Lfp, Gfp, CtxAbs))
        return f"{kw} {f.var} . {lhs} == {rhs}"
    if isinstance(f, CtxAbs):
        vars_txt = ",".join(f.vars)
        ctxs = ", ".join(context_text(c) for c in f.contexts)
        return f"ctx ({vars_txt}) . ({ctxs}) |> {_txt(f.body, (Lfp, Gfp, CtxAbs))}"
    raise TypeError(f"not a formula: {f!r}")


def _txt(f, wrap):
    text = formula_text(f)
    return f"({text})" if isinstance(f, wrap) else text


def parse_formula(text: str) -> Formula:
    ts = stream(text)
    f = _parse_formula(ts)
    ts.expect("eof")
    return f


def _parse_formula(ts: TokenStream) -> Formula:
    tok = ts.peek()
    if tok.kind == "ident" and tok.text in ("mu", "nu"):
        ts.next()
        var = _parse_var_name(ts)
        ts.expect("sym", ".")
        lhs = _parse_or(ts)
        ts.expect("sym", "==")
        rhs = _parse_or(ts)
        return (Lfp if tok.text == "mu" else Gfp)(var, lhs, rhs)
    if tok.kind == "ident" and tok.text == "ctx":
        ts.next()
        ts.expect("sym", "(")
        vars_ = [_parse_var_name(ts)]
        while ts.accept("sym", ","):
            vars_.append(_parse_var_name(ts))
        ts.expect("sym", ")")
        ts.expect("sym", ".")
        ts.expect("sym", "(")
        ctxs = [_parse_context(ts)]
        while ts.accept("sym", ","):
            ctxs.append(_parse_context(ts))
        ts.expect("sym", ")")
        ts.expect("sym", "|>")
        body = _parse_formula(ts)
        return CtxAbs(tuple(vars_), tuple(ctxs), body)
    return _parse_or(ts)


def _parse_var_name(ts) -> str:
    tok = ts.expect("ident")
    if not tok.text[0].isupper():
        raise ParseError(f"variable must be capitalized: {tok.text!r}",
                         tok.line, tok.col)
    return tok.text


def _parse_or(ts) -> Formula:
    out = _parse_and(ts)
    while ts.accept("sym", "\\/"):
        out = Or(out, _parse_and(ts))
    return out


def _parse_and(ts) -> Formula:
    out = _parse_unary(ts)
    while ts.accept("sym", "/\\"):
        out = And(out, _parse_unary(ts))
    return out


def _parse_unary(ts) -> Formula:
    if ts.accept("sym", "("):
        f = _parse_formula(ts)
        ts.expect("sym", ")")
        return f
    if ts.at("sym", "[") or ts.at("sym", "<"):
        opener = ts.next().text
        closer = "]" if opener == "[" else ">"
        label = _parse_label(ts)
        ts.expect("sym", closer)
        ts.expect("sym", "_")
        coord = int(ts.expect("int").text)
        body = _parse_unary(ts)
        return (Box if opener == "[" else Diamond)(label, coord, body)
    tok = ts.expect("ident")
    if tok.text == "atom":
        ts.expect("sym", "(")
        name = ts.expect("ident").text
        ts.expect("sym", ")")
        return Atom(name)
    if tok.text[0].isupper():
        return Var(tok.text)
    raise ParseError(f"unexpected {tok.text!r} in formula", tok.line, tok.col)


def _parse_label(ts) -> Label:
    if ts.accept("sym", "{"):
        names = [ts.expect("ident").text]
        while ts.accept("sym", ","):
            names.append(ts.expect("ident").text)
        ts.expect("sym", "}")
        return Label.of(names)
    return Label.single(ts.expect("ident").text)


def _parse_context(ts) -> Context:
    return _ctx_choice(ts)


def _ctx_choice(ts) -> Context:
    parts = [_ctx_par(ts)]
    while ts.accept("sym", "+"):
        parts.append(_ctx_par(ts))
    return parts[0] if len(parts) == 1 else CChoice(tuple(parts))


def _ctx_par(ts) -> Context:
    left = _ctx_seq(ts)
    while ts.at("sym", "|{"):
        ts.next()
        names = []
        while not ts.at("sym", "}|"):
            names.append(ts.expect("ident").text)
            if not ts.accept("sym", ","):
                break
        ts.expect("sym", "}|")
        right = _ctx_seq(ts)
        left = CPar(frozenset(names), (left, right))
    return left


def _ctx_seq(ts) -> Context:
    parts = [_ctx_prim(ts)]
    while ts.accept("sym", ";"):
        parts.append(_ctx_prim(ts))
    return parts[0] if len(parts) == 1 else CSeq(tuple(parts))


def _ctx_prim(ts) -> Context:
    if ts.accept("sym", "["):
        name = _parse_var_name(ts)
        ts.expect("sym", "]")
        return CHole(name)
    if ts.accept("sym", "("):
        c = _ctx_choice(ts)
        ts.expect("sym", ")")
        return c
    tok = ts.expect("ident")
    if tok.text == "eps":
        return CProc(EPS)
    if tok.text == "new":
        name = ts.expect("ident").text
        ts.expect("sym", ".")
        return CRestrict(name, _ctx_prim(ts))
    return CProc(Const(tok.text))


def parse_atom_interp(text: str, lattice: Lattice) -> dict:
    """Atom-interpretation files: `A: { (p0): True; default: False } ...`."""
    ts = stream(text)
    out = {}
    while not ts.at("eof"):
        name = ts.expect("ident").text
        ts.expect("sym", ":")
        ts.expect("sym", "{")
        entries = {}
        default = None
        while not ts.at("sym", "}"):
            if ts.at("ident", "default"):
                ts.next()
                ts.expect("sym", ":")
                default = parse_element(lattice, _value_text(ts))
            else:
                ts.expect("sym", "(")
                procs = [_collect_until(ts, (",", ")"))]
                while ts.accept("sym", ","):
                    procs.append(_collect_until(ts, (",", ")")))
                ts.expect("sym", ")")
                ts.expect("sym", ":")
                value = parse_element(lattice, _value_text(ts))
                from .proc import parse_process
                key = tuple(process_text(parse_process(p)) for p in procs)
                entries[key] = value
            ts.accept("sym", ";")
        ts.expect("sym", "}")
        out[name] = AtomValue(entries=entries, default=default)
    return out


def _collect_until(ts, stops) -> str:
    depth = 0
    pieces = []
    while True:
        tok = ts.peek()
        if tok.kind == "eof":
            ts.error("unterminated tuple entry")
        if tok.kind == "sym" and tok.text in ("(", "|{", "{"):
            depth += 1
        elif tok.kind == "sym" and tok.text in (")", "}|", "}"):
            if depth == 0 and tok.text in stops:
                break
            depth -= 1
        elif depth == 0 and tok.kind == "sym" and tok.text in stops:
            break
        pieces.append(ts.next().text)
    return " ".join(pieces)


def _value_text(ts) -> str:
    depth = 0
    pieces = []
    while True:
        tok = ts.peek()
        if tok.kind == "eof":
            break
        if tok.kind == "sym" and tok.text in ("(", "{", "|{"):
            depth += 1
        elif tok.kind == "sym" and tok.text in (")", "}", "}|"):
            if depth == 0:
                break
            depth -= 1
        elif depth == 0 and tok.kind == "sym" and tok.text == ";":
            break
        pieces.append(ts.next().text)
    return " ".join(pieces)
