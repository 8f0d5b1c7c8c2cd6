"""True-concurrent process calculus: terms, structural congruence, semantics.

Terms are built from the empty process, constants, sequencing `;`, choice
`+`, synchronized parallel `|{...}|` and restriction `new a . P`.  Transition
labels are finite multisets of action names; parallel components must agree
on the actions in the synchronization set and their matched occurrences are
merged, so a multi-element label is a set of truly concurrent actions.

Structural congruence (associativity/commutativity, units, binder laws and
scope extrusion) is implemented as a canonical form.  Binder placement is
normalized in two phases: binders first float up as far as the extrusion
side conditions allow, then are pushed back down to minimal scope in sorted
order.  A single oriented rewrite pass is not confluent here - two congruent
terms can park a binder on different operands - which is why the round trip
is needed.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

from .lexer import ParseError, stream

TAU = "tau"  # the internal action; not user-declarable


class ProcError(Exception):
    pass


class UnknownConstant(ProcError):
    """Strict parsing rejected a constant not declared by the system."""


class SyncMismatch(ProcError):
    """T-COM side condition failed: components disagree on synchronized actions."""


class StateCapExceeded(ProcError):
    """Reachable state set grew past the cap; carries the partial exploration."""

    def __init__(self, message, found=(), frontier=()):
        super().__init__(message)
        self.found = list(found)
        self.frontier = list(frontier)


# ---------------------------------------------------------------------------
# Terms


class Process:
    __slots__ = ()

    def __str__(self):
        return process_text(self)


@dataclass(frozen=True)
class Eps(Process):
    __slots__ = ()


@dataclass(frozen=True)
class Const(Process):
    name: str


@dataclass(frozen=True)
class Seq(Process):
    parts: tuple


@dataclass(frozen=True)
class Choice(Process):
    parts: tuple


@dataclass(frozen=True)
class Par(Process):
    sync: frozenset
    parts: tuple


@dataclass(frozen=True)
class Restrict(Process):
    name: str
    body: Process


EPS = Eps()


def seq(*parts) -> Process:
    return Seq(tuple(parts))

def choice(*parts) -> Process:
    return Choice(tuple(parts))

def par(sync, *parts) -> Process:
    return Par(frozenset(sync), tuple(parts))

def restrict(name, body) -> Process:
    return Restrict(name, body)


@lru_cache(maxsize=None)
def process_text(p: Process) -> str:
    """Stable, reparseable rendering; doubles as the canonical sort key."""
    if isinstance(p, Eps):
        return "eps"
    if isinstance(p, Const):
        return p.name
    if isinstance(p, Seq):
        return " ; ".join(
            f"({process_text(q)})" if isinstance(q, (Choice, Par)) else process_text(q)
            for q in p.parts)
    if isinstance(p, Par):
        sep = " |{" + ",".join(sorted(p.sync)) + "}| "
        return sep.join(
            f"({process_text(q)})" if isinstance(q, (Choice, Par)) else process_text(q)
            for q in p.parts)
    if isinstance(p, Choice):
        return " + ".join(process_text(q) for q in p.parts)
    if isinstance(p, Restrict):
        body = process_text(p.body)
        if not isinstance(p.body, (Eps, Const, Restrict)):
            body = f"({body})"
        return f"new {p.name} . {body}"
    raise TypeError(f"not a process: {p!r}")


# ---------------------------------------------------------------------------
# Labels


@dataclass(frozen=True)
class Label:
    """Finite multiset of action names."""

    counts: tuple  # sorted ((name, count), ...), counts >= 1

    @staticmethod
    def empty() -> "Label":
        return Label(())

    @staticmethod
    def single(name: str) -> "Label":
        return Label(((name, 1),))

    @staticmethod
    def of(names) -> "Label":
        acc = {}
        for n in names:
            acc[n] = acc.get(n, 0) + 1
        return Label(tuple(sorted(acc.items())))

    def as_dict(self) -> dict:
        return dict(self.counts)

    def names(self):
        return [n for n, _ in self.counts]

    @property
    def size(self) -> int:
        return sum(c for _, c in self.counts)

    def is_empty(self) -> bool:
        return not self.counts

    def is_tau_only(self) -> bool:
        return bool(self.counts) and all(n == TAU for n, _ in self.counts)

    def union(self, other: "Label") -> "Label":
        acc = self.as_dict()
        for n, c in other.counts:
            acc[n] = acc.get(n, 0) + c
        return Label(tuple(sorted(acc.items())))

    def project(self, names) -> "Label":
        """Restriction of the multiset to the given name set."""
        return Label(tuple((n, c) for n, c in self.counts if n in names))

    def rename(self, old: str, new: str) -> "Label":
        acc = {}
        for n, c in self.counts:
            m = new if n == old else n
            acc[m] = acc.get(m, 0) + c
        return Label(tuple(sorted(acc.items())))

    def strip_tau(self) -> "Label":
        return Label(tuple((n, c) for n, c in self.counts if n != TAU))

    def text(self) -> str:
        items = []
        for n, c in self.counts:
            items.extend([n] * c)
        return "{" + ", ".join(items) + "}"

    def __str__(self):
        return self.text()


def label_sync(a: Label, b: Label, sync) -> Label:
    """Combine two component labels across a synchronization set.

    Both sides must carry identical multiplicities of every synchronized
    action; each matched pair collapses to a single occurrence.
    """
    sync = frozenset(sync)
    pa, pb = a.project(sync), b.project(sync)
    if pa != pb:
        raise SyncMismatch(
            f"labels {a.text()} and {b.text()} disagree on {{{','.join(sorted(sync))}}}")
    acc = {}
    for n, c in a.counts:
        acc[n] = acc.get(n, 0) + c
    for n, c in b.counts:
        acc[n] = acc.get(n, 0) + c
    for n, c in pa.counts:
        acc[n] -= c  # keep one occurrence per matched pair
        if acc[n] == 0:
            del acc[n]
    return Label(tuple(sorted(acc.items())))


# ---------------------------------------------------------------------------
# Systems


@dataclass(frozen=True)
class DeltaRule:
    lhs: Process
    action: str
    rhs: Process


class SystemSpec:
    """A finite rule system: constants, an action alphabet and basic rules.

    Instances are identity-hashed and carry the per-system memo tables for
    name analysis, canonicalization and stepping.
    """

    def __init__(self, rules, constants=None, alphabet=None, initial=None):
        self.rules = list(rules)
        self.alphabet = set(alphabet) if alphabet is not None else set()
        self.constants = set(constants) if constants is not None else set()
        for r in self.rules:
            self.alphabet.add(r.action)
            self.constants |= _mentioned_constants(r.lhs)
            self.constants |= _mentioned_constants(r.rhs)
        if TAU in self.alphabet or TAU in self.constants:
            raise ValueError(f"{TAU!r} is reserved and not declarable")
        self.initial = initial
        self._fn_cache = {}
        self._canon_cache = {}
        self._step_cache = {}
        self.const_alpha = self._close_const_alpha()
        for r in self.rules:
            if canonicalize(r.lhs, self) == EPS:
                raise ValueError("rule left side must not be the empty process")
        self._canon_rules = [
            (canonicalize(r.lhs, self), r.action, canonicalize(r.rhs, self))
            for r in self.rules]

    def _close_const_alpha(self):
        """Least map giving every constant the actions reachable through rules."""
        alpha = {c: set() for c in self.constants}
        changed = True
        while changed:
            changed = False
            for r in self.rules:
                names = {r.action}
                names |= _syntactic_names(r.lhs, alpha)
                names |= _syntactic_names(r.rhs, alpha)
                for c in _mentioned_constants(r.lhs):
                    if not names <= alpha[c]:
                        alpha[c] |= names
                        changed = True
        return {c: frozenset(s) for c, s in alpha.items()}


def _mentioned_constants(p: Process) -> set:
    if isinstance(p, Const):
        return {p.name}
    if isinstance(p, (Seq, Choice, Par)):
        out = set()
        for q in p.parts:
            out |= _mentioned_constants(q)
        return out
    if isinstance(p, Restrict):
        return _mentioned_constants(p.body)
    return set()


def _syntactic_names(p: Process, alpha) -> set:
    """Action names a term can exhibit, using a constant-alphabet map."""
    if isinstance(p, Const):
        return set(alpha.get(p.name, ()))
    if isinstance(p, (Seq, Choice)):
        out = set()
        for q in p.parts:
            out |= _syntactic_names(q, alpha)
        return out
    if isinstance(p, Par):
        out = set()
        for q in p.parts:
            out |= _syntactic_names(q, alpha)
        return out
    if isinstance(p, Restrict):
        return _syntactic_names(p.body, alpha) - {p.name}
    return set()


_FN_NOSPEC: dict = {}
_CANON_NOSPEC: dict = {}


def free_names(p: Process, spec: SystemSpec | None = None) -> frozenset:
    """Free action names; constants contribute their rule alphabet."""
    cache = spec._fn_cache if spec is not None else _FN_NOSPEC
    hit = cache.get(p)
    if hit is not None:
        return hit
    if isinstance(p, Eps):
        out = frozenset()
    elif isinstance(p, Const):
        out = spec.const_alpha.get(p.name, frozenset()) if spec else frozenset()
    elif isinstance(p, (Seq, Choice, Par)):
        out = frozenset()
        for q in p.parts:
            out |= free_names(q, spec)
    elif isinstance(p, Restrict):
        out = free_names(p.body, spec) - {p.name}
    else:
        raise TypeError(f"not a process: {p!r}")
    cache[p] = out
    return out


def bound_names(p: Process) -> frozenset:
    if isinstance(p, (Seq, Choice, Par)):
        out = frozenset()
        for q in p.parts:
            out |= bound_names(q)
        return out
    if isinstance(p, Restrict):
        return bound_names(p.body) | {p.name}
    return frozenset()


def names(p: Process, spec: SystemSpec | None = None) -> frozenset:
    return free_names(p, spec) | bound_names(p)


# ---------------------------------------------------------------------------
# Canonical forms


def canonicalize(p: Process, spec: SystemSpec | None = None) -> Process:
    """Canonical representative of the structural-congruence class of p."""
    cache = spec._canon_cache if spec is not None else _CANON_NOSPEC
    hit = cache.get(p)
    if hit is not None:
        return hit
    out = _finalize(_canon_inner(p, spec), spec)
    cache[p] = out
    cache[out] = out
    return out


def _canon_inner(p: Process, spec) -> Process:
    """Canonicalize below p; floatable binders are left stacked on top."""
    if isinstance(p, (Eps, Const)):
        return p
    if isinstance(p, Restrict):
        inner = _canon_inner(p.body, spec)
        if isinstance(inner, Eps):
            return EPS
        if p.name not in free_names(inner, spec):
            # vacuous binders are congruent to nothing at all:
            # (va)P == (va)(P + eps) == P + (va)eps == P
            return inner
        return Restrict(p.name, inner)
    if isinstance(p, Seq):
        parts = []
        for q in p.parts:
            fq = _finalize(_canon_inner(q, spec), spec)
            if isinstance(fq, Seq):
                parts.extend(fq.parts)
            elif not isinstance(fq, Eps):
                parts.append(fq)
        if not parts:
            return EPS
        if len(parts) == 1:
            return parts[0]
        return Seq(tuple(parts))
    if isinstance(p, (Choice, Par)):
        return _canon_ac(p, spec)
    raise TypeError(f"not a process: {p!r}")


def _canon_ac(p, spec):
    """Choice/Par: flatten, drop units, float eligible binders, sort."""
    is_par = isinstance(p, Par)
    sync = p.sync if is_par else None
    kids = [_canon_inner(q, spec) for q in p.parts]
    pending = []
    while True:
        changed = False
        flat = []
        for k in kids:
            if isinstance(k, Eps):
                changed = True
            elif is_par and isinstance(k, Par) and k.sync == sync:
                flat.extend(k.parts)
                changed = True
            elif not is_par and isinstance(k, Choice):
                flat.extend(k.parts)
                changed = True
            else:
                flat.append(k)
        kids = flat
        # float binders past siblings that do not use the name
        for i, k in enumerate(kids):
            if isinstance(k, Restrict):
                name = k.name
                if is_par and name in sync:
                    continue
                if all(name not in free_names(o, spec)
                       for j, o in enumerate(kids) if j != i):
                    pending.append(name)
                    kids[i] = k.body
                    changed = True
                    break
        if changed:
            continue
        # push stuck binder chains down into their own operand
        for i, k in enumerate(kids):
            if isinstance(k, Restrict):
                f = _finalize(k, spec)
                if f != k:
                    kids[i] = f
                    changed = True
                    break
        if not changed:
            break
    kids.sort(key=process_text)
    if not kids:
        node = EPS
    elif len(kids) == 1:
        node = kids[0]
    elif is_par:
        node = Par(sync, tuple(kids))
    else:
        node = Choice(tuple(kids))
    for name in sorted(pending, reverse=True):
        if isinstance(node, Eps):
            return EPS
        node = Restrict(name, node)
    return node


def _finalize(term: Process, spec) -> Process:
    """Push the binder chain on top of `term` down to minimal scope."""
    names_chain = []
    core = term
    while isinstance(core, Restrict):
        names_chain.append(core.name)
        core = core.body
    if not names_chain:
        return term
    if isinstance(core, Eps):
        return EPS
    # drop vacuous binders, innermost first (an inner binder shadows an
    # outer duplicate of the same name)
    live = []
    visible = set(free_names(core, spec))
    for n in reversed(names_chain):
        if n in visible:
            live.append(n)
            visible.discard(n)
    names_chain = live
    if not names_chain:
        return core
    if isinstance(core, (Const, Seq)):
        out = core
        for n in sorted(names_chain, reverse=True):
            out = Restrict(n, out)
        return out
    # Choice/Par: place each binder, smallest name first; binders that stay
    # at this level wrap the result in sorted order.  Placement preserves the
    # operand count, so `core` remains a Choice/Par throughout.
    stuck = []
    for n in sorted(names_chain):
        placed = _push_one(n, core, spec)
        if isinstance(placed, Restrict) and placed.name == n and placed.body == core:
            stuck.append(n)
        else:
            core = placed
    out = core
    for n in sorted(stuck, reverse=True):
        out = Restrict(n, out)
    return out


def _push_one(name: str, node: Process, spec) -> Process:
    """Push one binder into a Choice/Par node, or wrap it if it cannot move."""
    if isinstance(node, Par) and name in node.sync:
        return Restrict(name, node)
    parts = sorted(node.parts, key=process_text)
    using = [q for q in parts if name in free_names(q, spec)]
    others = [q for q in parts if name not in free_names(q, spec)]
    rebuild = (lambda ps: Par(node.sync, tuple(ps))) if isinstance(node, Par) \
        else (lambda ps: Choice(tuple(ps)))
    if not others:
        return Restrict(name, rebuild(parts))
    if not using:
        return rebuild(parts)  # vacuous; callers normally filter these out
    group = using[0] if len(using) == 1 else rebuild(using)
    wrapped = _dive(name, group, spec)
    return rebuild(sorted(others + [wrapped], key=process_text))


def _dive(name: str, target: Process, spec) -> Process:
    """Restrict `target` by `name`, continuing the push inside it."""
    return _finalize(Restrict(name, target), spec)


# ---------------------------------------------------------------------------
# Operational semantics


def step(p: Process, spec: SystemSpec) -> list:
    """All one-step derivatives of p: a list of (Label, successor) pairs.

    The empty-label self-loop every process has is implicit and never
    emitted; inside a parallel composition components may still idle.
    Results are canonical, deduplicated and deterministically ordered.
    """
    p = canonicalize(p, spec)
    hit = spec._step_cache.get(p)
    if hit is not None:
        return list(hit)
    results = set()
    _con_matches(p, spec, results)
    if isinstance(p, Seq):
        parts = p.parts
        for j in range(1, len(parts)):
            head = parts[0] if j == 1 else canonicalize(Seq(parts[:j]), spec)
            for lab, h2 in step(head, spec):
                tail = (h2,) + parts[j:]
                results.add((lab, canonicalize(Seq(tail), spec)))
    elif isinstance(p, Choice):
        parts = p.parts
        for q in parts:
            for lab, q2 in step(q, spec):
                results.add((lab, q2))
        # a proper sub-multiset of operands may match a rule as a unit
        for size in range(2, len(parts)):
            for idxs in itertools.combinations(range(len(parts)), size):
                group = canonicalize(Choice(tuple(parts[i] for i in idxs)), spec)
                _con_matches(group, spec, results)
    elif isinstance(p, Par):
        for item in _par_moves(p.sync, p.parts, spec):
            results.add(item)
    elif isinstance(p, Restrict):
        for lab, b2 in step(p.body, spec):
            results.add((lab.rename(p.name, TAU),
                         canonicalize(Restrict(p.name, b2), spec)))
    ordered = sorted(results, key=lambda it: (it[0].text(), process_text(it[1])))
    spec._step_cache[p] = tuple(ordered)
    return ordered


def _con_matches(p: Process, spec: SystemSpec, results: set):
    for lhs, action, rhs in spec._canon_rules:
        if p == lhs:
            results.add((Label.single(action), rhs))


def _par_moves(sync, parts, spec):
    """Derivations of a parallel node: each operand idles, moves on its own,
    or joins a group that matches a rule as a whole; all participating labels
    must agree on the synchronized actions."""
    n = len(parts)
    out = set()

    def emit(units, idle_parts):
        if not units:
            return
        projections = {u[0].project(sync) for u in units}
        if idle_parts:
            projections.add(Label.empty().project(sync))
        if len(projections) != 1:
            return
        common = next(iter(projections))
        acc = {}
        for lab, _ in units:
            for name, c in lab.counts:
                if name not in sync:
                    acc[name] = acc.get(name, 0) + c
        for name, c in common.counts:
            acc[name] = acc.get(name, 0) + c
        label = Label(tuple(sorted(acc.items())))
        new_parts = list(idle_parts)
        for _, repl in units:
            new_parts.extend(repl)
        succ = canonicalize(Par(sync, tuple(new_parts)), spec)
        out.add((label, succ))

    def assign(i, units, idle_parts, taken):
        if i == n:
            emit(units, idle_parts)
            return
        if i in taken:
            assign(i + 1, units, idle_parts, taken)
            return
        # idle
        assign(i + 1, units, idle_parts + [parts[i]], taken)
        # move alone
        for lab, q2 in step(parts[i], spec):
            assign(i + 1, units + [(lab, (q2,))], idle_parts, taken)
        # join later operands in a rule-matching group
        rest = [j for j in range(i + 1, n) if j not in taken]
        for size in range(1, len(rest) + 1):
            for combo in itertools.combinations(rest, size):
                group = canonicalize(
                    Par(sync, tuple([parts[i]] + [parts[j] for j in combo])), spec)
                found = set()
                _con_matches(group, spec, found)
                for lab, rhs in found:
                    assign(i + 1, units + [(lab, (rhs,))],
                           idle_parts, taken | set(combo))

    assign(0, [], [], frozenset())
    return out


# ---------------------------------------------------------------------------
# Transition systems


@dataclass(frozen=True)
class LTS:
    spec: SystemSpec
    states: tuple          # canonical processes, index = state id
    initial: int
    edges: tuple           # (src, Label, dst), deterministic order
    cap: int

    def edges_from(self, i: int):
        return [(lab, dst) for src, lab, dst in self.edges if src == i]

    def state_index(self, p: Process) -> int:
        p = canonicalize(p, self.spec)
        for i, s in enumerate(self.states):
            if s == p:
                return i
        raise KeyError(f"{process_text(p)} is not a state of this system")


def build_lts(initial: Process, spec: SystemSpec, cap: int = 10000) -> LTS:
    """Breadth-first closure of `step`, states numbered by discovery order."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    init = canonicalize(initial, spec)
    states = [init]
    index = {init: 0}
    edges = []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for lab, succ in step(states[i], spec):
            if succ not in index:
                if len(states) >= cap:
                    raise StateCapExceeded(
                        f"state cap {cap} exceeded",
                        found=[process_text(s) for s in states],
                        frontier=[process_text(states[j]) for j in queue])
                index[succ] = len(states)
                states.append(succ)
                queue.append(index[succ])
            edges.append((i, lab, index[succ]))
    return LTS(spec, tuple(states), 0, tuple(edges), cap)


def weak_saturate(lts: LTS) -> LTS:
    """Replace edges by weak transitions: silent closure on both sides and
    all internal-action occurrences stripped from the label."""
    n = len(lts.states)
    silent = [[] for _ in range(n)]
    for src, lab, dst in lts.edges:
        if lab.is_tau_only():
            silent[src].append(dst)
    closure = []
    for s in range(n):
        seen = {s}
        work = deque([s])
        while work:
            q = work.popleft()
            for r in silent[q]:
                if r not in seen:
                    seen.add(r)
                    work.append(r)
        closure.append(sorted(seen))
    outgoing = [[] for _ in range(n)]
    for src, lab, dst in lts.edges:
        outgoing[src].append((lab, dst))
    weak = set()
    for p in range(n):
        for q in closure[p]:
            if q != p:
                weak.add((p, Label.empty(), q))
            for lab, r in outgoing[q]:
                wl = lab.strip_tau()
                for s in closure[r]:
                    weak.add((p, wl, s))
    ordered = sorted(weak, key=lambda e: (e[0], e[1].text(), e[2]))
    return LTS(lts.spec, lts.states, lts.initial, tuple(ordered), lts.cap)


# ---------------------------------------------------------------------------
# Text formats


_RESERVED = {"eps", "new", TAU}


def parse_process(text: str, spec: SystemSpec | None = None,
                  strict: bool = False) -> Process:
    ts = stream(text)
    p = _parse_choice(ts)
    ts.expect("eof")
    if strict and spec is not None:
        unknown = _mentioned_constants(p) - spec.constants
        if unknown:
            raise UnknownConstant(f"unknown constant {sorted(unknown)[0]!r}")
    return canonicalize(p, spec)


def _parse_choice(ts) -> Process:
    parts = [_parse_par(ts)]
    while ts.accept("sym", "+"):
        parts.append(_parse_par(ts))
    return parts[0] if len(parts) == 1 else Choice(tuple(parts))


def _parse_par(ts) -> Process:
    left = _parse_seq(ts)
    while ts.at("sym", "|{"):
        ts.next()
        names = []
        while not ts.at("sym", "}|"):
            tok = ts.expect("ident")
            if tok.text == TAU:
                ts.error(f"{TAU!r} cannot appear in a synchronization set")
            names.append(tok.text)
            if not ts.accept("sym", ","):
                break
        ts.expect("sym", "}|")
        right = _parse_seq(ts)
        left = Par(frozenset(names), (left, right))
    return left


def _parse_seq(ts) -> Process:
    parts = [_parse_prim(ts)]
    while ts.accept("sym", ";"):
        parts.append(_parse_prim(ts))
    return parts[0] if len(parts) == 1 else Seq(tuple(parts))


def _parse_prim(ts) -> Process:
    if ts.accept("sym", "("):
        p = _parse_choice(ts)
        ts.expect("sym", ")")
        return p
    tok = ts.expect("ident")
    if tok.text == "eps":
        return EPS
    if tok.text == "new":
        name = ts.expect("ident").text
        if name == TAU:
            ts.error(f"{TAU!r} cannot be restricted")
        ts.expect("sym", ".")
        return Restrict(name, _parse_prim(ts))
    if tok.text == TAU:
        ts.error(f"{TAU!r} is reserved")
    return Const(tok.text)


def parse_system(text: str) -> SystemSpec:
    """Parse the system format: `consts:`, `alphabet:`, `rules:` sections and
    an optional `initial:` section.

    Inside `rules:` a semicolon both separates rules and builds sequences; a
    segment without an arrow extends the neighbouring rule's process.
    """
    from .lexer import tokenize
    toks = tokenize(text)
    sections = {}
    for i, tok in enumerate(toks):
        if (tok.kind == "ident"
                and tok.text in ("consts", "alphabet", "rules", "initial")
                and i + 1 < len(toks) and toks[i + 1].kind == "sym"
                and toks[i + 1].text == ":"):
            if tok.text in sections:
                raise ParseError(f"duplicate section {tok.text!r}", tok.line, tok.col)
            sections[tok.text] = i
    if "rules" not in sections:
        raise ParseError("missing `rules:` section", 1, 1)
    order = sorted(sections.items(), key=lambda kv: kv[1])
    slices = {}
    for k, (name, start) in enumerate(order):
        end = order[k + 1][1] if k + 1 < len(order) else len(toks) - 1
        slices[name] = toks[start + 2:end]
    constants = _names_from(slices.get("consts", []))
    alphabet = _names_from(slices.get("alphabet", []))
    rules = _parse_rules(slices.get("rules", []))
    spec = SystemSpec(rules, constants=constants or None,
                      alphabet=alphabet or None)
    if "initial" in slices:
        initial = _parse_tokens_as_process(_strip_trailing_semis(slices["initial"]))
        spec.initial = canonicalize(initial, spec)
    _validate_declared(spec, constants, alphabet)
    return spec


def _names_from(toks):
    names = []
    for t in toks:
        if t.kind == "ident":
            if t.text == TAU:
                raise ParseError(f"{TAU!r} is reserved", t.line, t.col)
            names.append(t.text)
        elif t.kind == "sym" and t.text in (",", ";"):
            continue
        else:
            raise ParseError(f"unexpected {t.text!r} in name list", t.line, t.col)
    return names


def _strip_trailing_semis(toks):
    out = list(toks)
    while out and out[-1].kind == "sym" and out[-1].text == ";":
        out.pop()
    return out


def _parse_tokens_as_process(toks):
    from .lexer import Token, TokenStream
    ts = TokenStream(list(toks) + [Token("eof", "", 0, 0)])
    p = _parse_choice(ts)
    ts.expect("eof")
    return p


def _find_arrow(seg):
    """Position of the depth-0 `-action->` triple in a token list, or None."""
    depth = 0
    for i in range(len(seg)):
        t = seg[i]
        if t.kind == "sym" and t.text in ("(", "|{", "{"):
            depth += 1
        elif t.kind == "sym" and t.text in (")", "}|", "}"):
            depth -= 1
        if (depth == 0 and i + 2 < len(seg)
                and t.kind == "sym" and t.text == "-"
                and seg[i + 1].kind == "ident"
                and seg[i + 2].kind == "sym" and seg[i + 2].text == "->"):
            return i
    return None


def _parse_rules(toks) -> list:
    from .lexer import Token
    toks = _strip_trailing_semis(toks)
    if not toks:
        return []
    # split on depth-0 semicolons, then merge arrow-less segments into the
    # rule they belong to (left side before its arrow, right side after)
    segments = []
    depth = 0
    cur = []
    for t in toks:
        if t.kind == "sym" and t.text in ("(", "|{", "{"):
            depth += 1
        elif t.kind == "sym" and t.text in (")", "}|", "}"):
            depth -= 1
        if depth == 0 and t.kind == "sym" and t.text == ";":
            segments.append(cur)
            cur = []
        else:
            cur.append(t)
    segments.append(cur)
    merged = []
    cur = None
    for seg in segments:
        if cur is None:
            cur = list(seg)
        elif _find_arrow(cur) is not None and _find_arrow(seg) is not None:
            merged.append(cur)
            cur = list(seg)
        else:
            anchor = seg[0] if seg else cur[-1]
            cur.append(Token("sym", ";", anchor.line, anchor.col))
            cur.extend(seg)
    if cur:
        merged.append(cur)
    rules = []
    for seg in merged:
        arrow = _find_arrow(seg)
        if arrow is None:
            raise ParseError("rule without `-action->` arrow",
                             seg[0].line, seg[0].col)
        action_tok = seg[arrow + 1]
        if action_tok.text == TAU:
            raise ParseError(f"{TAU!r} is reserved", action_tok.line, action_tok.col)
        lhs = _parse_tokens_as_process(seg[:arrow])
        rhs = _parse_tokens_as_process(seg[arrow + 3:])
        rules.append(DeltaRule(lhs, action_tok.text, rhs))
    return rules


def _validate_declared(spec, constants, alphabet):
    if constants:
        undeclared = set()
        for r in spec.rules:
            undeclared |= _mentioned_constants(r.lhs) - set(constants)
            undeclared |= _mentioned_constants(r.rhs) - set(constants)
        if undeclared:
            raise ParseError(f"rule mentions undeclared constant "
                             f"{sorted(undeclared)[0]!r}")
    if alphabet:
        for r in spec.rules:
            if r.action not in alphabet:
                raise ParseError(f"rule action {r.action!r} not in alphabet")


def system_text(spec: SystemSpec) -> str:
    """Render a system in the file format (sequences parenthesized)."""
    lines = []
    lines.append("consts: " + ", ".join(sorted(spec.constants)) + ";")
    lines.append("alphabet: " + ", ".join(sorted(spec.alphabet)) + ";")
    lines.append("rules:")
    for r in spec.rules:
        lines.append(f"  {_rule_side(r.lhs)} -{r.action}-> {_rule_side(r.rhs)};")
    if spec.initial is not None:
        lines.append("initial: " + _rule_side(spec.initial) + ";")
    return "\n".join(lines) + "\n"


def _rule_side(p: Process) -> str:
    text = process_text(p)
    if isinstance(p, Seq):
        return f"({text})"
    return text
