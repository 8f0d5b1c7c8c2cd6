"""Turing-machine and Petri-net reference semantics and their translations
into rule systems, with lockstep simulation checking.

The tape translation keeps three parallel components - left segment, head,
right segment - synchronized on action names that encode (left neighbour,
head symbol, right neighbour, state, move, next state) six-tuples, all
restricted so that every machine step surfaces as a single silent step.
Both tape segments are stored nearest-to-head first and terminated by a
regenerating end marker, so all rewriting happens at the head of a sequence
and a segment never runs dry; left cells, right cells and head constants
live in disjoint name families so decoding is unambiguous.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field

from .lexer import ParseError
from .proc import (
    EPS, Const, DeltaRule, Eps, Label, Par, Process, Restrict, Seq,
    SystemSpec, canonicalize, process_text, step,
)


class EncodingError(Exception):
    pass


class AlphabetClash(EncodingError):
    """Symbol or state names that cannot be embedded into constant names."""


class NotEnabled(EncodingError):
    """Firing a transition whose input places are not all marked."""


class UnsafeFiring(EncodingError):
    """Firing that would put a second token on a marked place."""


LEFT_END = "lend"
RIGHT_END = "rend"

_NAME = re.compile(r"^[A-Za-z][A-Za-z0-9]*$")
_RESERVED = {"eps", "new", "tau", LEFT_END, RIGHT_END}


def _check_name(kind, name):
    if not _NAME.match(name) or "X" in name or name in _RESERVED:
        raise AlphabetClash(
            f"{kind} {name!r} must be alphanumeric, free of the separator "
            "letter X, and none of the reserved words, to embed into "
            "generated constant names")


# ---------------------------------------------------------------------------
# Turing machines


@dataclass(frozen=True)
class TuringMachine:
    states: frozenset
    tape_alphabet: frozenset
    blank: str
    input_alphabet: frozenset
    delta: dict          # (state, symbol) -> (state, symbol, "L" | "R")
    initial: str
    finals: frozenset

    def __post_init__(self):
        if self.blank not in self.tape_alphabet:
            raise ValueError("blank symbol must be in the tape alphabet")
        if not self.input_alphabet <= self.tape_alphabet - {self.blank}:
            raise ValueError("input symbols must be non-blank tape symbols")
        if self.initial not in self.states:
            raise ValueError("initial state unknown")
        if not self.finals <= self.states:
            raise ValueError("final states unknown")
        for (q, s), (q2, s2, move) in self.delta.items():
            if q in self.finals:
                raise ValueError("transition function defined on a final state")
            if q not in self.states or q2 not in self.states:
                raise ValueError(f"unknown state in transition ({q},{s})")
            if s not in self.tape_alphabet or s2 not in self.tape_alphabet:
                raise ValueError(f"unknown symbol in transition ({q},{s})")
            if move not in ("L", "R"):
                raise ValueError("move must be L or R")


@dataclass(frozen=True)
class TmConfig:
    """Tape around the head; both segments nearest-to-head first, blanks
    implicit beyond the ends."""

    left: tuple
    head: str
    state: str
    right: tuple

    def normalized(self, blank: str) -> "TmConfig":
        left = list(self.left)
        while left and left[-1] == blank:
            left.pop()
        right = list(self.right)
        while right and right[-1] == blank:
            right.pop()
        return TmConfig(tuple(left), self.head, self.state, tuple(right))

    def text(self) -> str:
        cells = list(reversed(self.left)) + [f"{self.head}^{self.state}"] + list(self.right)
        return "|".join(cells)


def initial_config(machine: TuringMachine, tape=()) -> TmConfig:
    tape = tuple(tape)
    head = tape[0] if tape else machine.blank
    return TmConfig((), head, machine.initial, tape[1:])


def tm_step(machine: TuringMachine, config: TmConfig) -> TmConfig | None:
    """One move of the machine; None when it halts (final state or no rule)."""
    if config.state in machine.finals:
        return None
    key = (config.state, config.head)
    if key not in machine.delta:
        return None
    state2, written, move = machine.delta[key]
    if move == "R":
        left = (written,) + config.left
        head = config.right[0] if config.right else machine.blank
        right = config.right[1:]
    else:
        right = (written,) + config.right
        head = config.left[0] if config.left else machine.blank
        left = config.left[1:]
    return TmConfig(left, head, state2, right)


def _lcell(sym):
    return f"l{sym}X"

def _rcell(sym):
    return f"r{sym}X"

def _hcell(sym, state):
    return f"h{sym}X{state}X"

def _action(a, b, g, q, move, q2):
    return f"t{a}X{b}X{g}X{q}X{move}X{q2}X"


def trans_tm(machine: TuringMachine, config: TmConfig):
    """(rule system, composite process) simulating the machine from config.

    Every six-tuple action in the synchronization set forces the three
    components to move together; exactly one tuple matches a machine
    configuration, so the composite has exactly one silent step per move.
    """
    for s in machine.tape_alphabet:
        _check_name("tape symbol", s)
    for q in machine.states:
        _check_name("state", q)
    gamma = sorted(machine.tape_alphabet)
    # Only tuples consistent with the transition function index any rule;
    # the rest of the six-tuple space can never occur in a label, so it is
    # inert in both the synchronization set and the restriction and is left
    # out to keep encoded states readable.
    sync = sorted(
        _action(a, b, g, q, move, q2)
        for (q, b), (q2, _written, move) in machine.delta.items()
        for a in gamma for g in gamma
    )
    if len(set(sync)) != len(sync):
        raise AlphabetClash("six-tuple action names collide")
    rules = []
    for (q, b), (q2, written, move) in sorted(machine.delta.items()):
        for a in gamma:
            for g in gamma:
                act = _action(a, b, g, q, move, q2)
                if move == "L":
                    # head walks onto the left neighbour; written symbol
                    # joins the right segment
                    rules.append(DeltaRule(Const(_lcell(a)), act, EPS))
                    if a == machine.blank:
                        rules.append(DeltaRule(Const(LEFT_END), act, Const(LEFT_END)))
                    rules.append(DeltaRule(Const(_hcell(b, q)), act, Const(_hcell(a, q2))))
                    rules.append(DeltaRule(
                        Const(_rcell(g)), act, Seq((Const(_rcell(written)), Const(_rcell(g))))))
                    if g == machine.blank:
                        rules.append(DeltaRule(
                            Const(RIGHT_END), act,
                            Seq((Const(_rcell(written)), Const(RIGHT_END)))))
                else:
                    rules.append(DeltaRule(
                        Const(_lcell(a)), act, Seq((Const(_lcell(written)), Const(_lcell(a))))))
                    if a == machine.blank:
                        rules.append(DeltaRule(
                            Const(LEFT_END), act,
                            Seq((Const(_lcell(written)), Const(LEFT_END)))))
                    rules.append(DeltaRule(Const(_hcell(b, q)), act, Const(_hcell(g, q2))))
                    rules.append(DeltaRule(Const(_rcell(g)), act, EPS))
                    if g == machine.blank:
                        rules.append(DeltaRule(Const(RIGHT_END), act, Const(RIGHT_END)))
    spec = SystemSpec(rules, alphabet=sync)
    return spec, encode_config(config, machine, spec)


def encode_config(config: TmConfig, machine: TuringMachine,
                  spec: SystemSpec) -> Process:
    config = config.normalized(machine.blank)
    left = Seq(tuple([Const(_lcell(s)) for s in config.left] + [Const(LEFT_END)])) \
        if config.left else Const(LEFT_END)
    right = Seq(tuple([Const(_rcell(s)) for s in config.right] + [Const(RIGHT_END)])) \
        if config.right else Const(RIGHT_END)
    head = Const(_hcell(config.head, config.state))
    sync = frozenset(spec.alphabet)
    body = Par(sync, (left, head, right))
    proc = body
    for name in sorted(sync, reverse=True):
        proc = Restrict(name, proc)
    return canonicalize(proc, spec)


def decode_tm(proc: Process, machine: TuringMachine) -> TmConfig:
    """Read a configuration back out of an encoded state."""
    body = proc
    while isinstance(body, Restrict):
        body = body.body
    if not isinstance(body, Par) or len(body.parts) != 3:
        raise EncodingError(f"not an encoded configuration: {process_text(proc)}")
    left = head = right = None
    for part in body.parts:
        cells = part.parts if isinstance(part, Seq) else (part,)
        if not all(isinstance(c, Const) for c in cells):
            raise EncodingError("component is not a constant sequence")
        names = [c.name for c in cells]
        if names[-1] == LEFT_END:
            left = [_strip(n, "l") for n in names[:-1]]
        elif names[-1] == RIGHT_END:
            right = [_strip(n, "r") for n in names[:-1]]
        elif len(names) == 1 and names[0].startswith("h"):
            head, state = names[0][1:-1].split("X")[:2]
        else:
            raise EncodingError(f"unrecognized component {process_text(part)}")
    if left is None or right is None or head is None:
        raise EncodingError("missing tape component")
    return TmConfig(tuple(left), head, state, tuple(right)).normalized(machine.blank)


def _strip(name, prefix):
    if not (name.startswith(prefix) and name.endswith("X")):
        raise EncodingError(f"unexpected cell constant {name!r}")
    return name[len(prefix):-1]


@dataclass
class SimReport:
    ok: bool
    steps_checked: int
    halted: bool = False
    reason: str = ""
    at_step: int | None = None

    def text(self) -> str:
        if self.ok:
            tail = " (halted)" if self.halted else ""
            return f"SIMULATION_OK steps={self.steps_checked}{tail}"
        return f"DIVERGENCE step={self.at_step}: {self.reason}"


def check_tm_simulation(machine: TuringMachine, config: TmConfig,
                        steps: int) -> SimReport:
    """Run machine and encoding in lockstep: every machine move must be
    matched by exactly one silent step decoding to the same configuration."""
    spec, proc = trans_tm(machine, config)
    cur_c = config.normalized(machine.blank)
    cur_p = proc
    for k in range(1, steps + 1):
        nxt_c = tm_step(machine, cur_c)
        moves = step(cur_p, spec)
        if nxt_c is None:
            if moves:
                return SimReport(False, k - 1, reason="machine halted but "
                                 f"encoding still moves", at_step=k)
            return SimReport(True, k - 1, halted=True)
        if len(moves) != 1:
            return SimReport(False, k - 1, at_step=k,
                             reason=f"expected exactly one step, found {len(moves)}")
        lab, succ = moves[0]
        if lab != Label.single("tau"):
            return SimReport(False, k - 1, at_step=k,
                             reason=f"label {lab.text()} is not a single silent action")
        decoded = decode_tm(succ, machine)
        if decoded != nxt_c.normalized(machine.blank):
            return SimReport(False, k - 1, at_step=k,
                             reason=f"decoded {decoded.text()} differs from "
                             f"machine {nxt_c.text()}")
        cur_c, cur_p = nxt_c.normalized(machine.blank), succ
    return SimReport(True, steps)


# ---------------------------------------------------------------------------
# Petri nets


@dataclass(frozen=True)
class PetriNet:
    places: frozenset
    transitions: frozenset
    arcs: frozenset     # (place, transition) and (transition, place) pairs

    def __post_init__(self):
        if self.places & self.transitions:
            raise ValueError("places and transitions must be disjoint")
        for src, dst in self.arcs:
            ok = (src in self.places and dst in self.transitions) or \
                 (src in self.transitions and dst in self.places)
            if not ok:
                raise ValueError(f"arc ({src}, {dst}) is not place<->transition")

    def inputs(self, t) -> frozenset:
        return frozenset(p for p, t2 in self.arcs
                         if t2 == t and p in self.places)

    def outputs(self, t) -> frozenset:
        return frozenset(p for t2, p in self.arcs
                         if t2 == t and p in self.places)


def pn_fire(net: PetriNet, marking: frozenset, t) -> frozenset:
    """Fire one transition under the one-token-per-place discipline."""
    if t not in net.transitions:
        raise ValueError(f"unknown transition {t!r}")
    ins, outs = net.inputs(t), net.outputs(t)
    if not ins <= marking:
        raise NotEnabled(f"{t} needs {sorted(ins - marking)} marked")
    rest = marking - ins
    if rest & outs:
        raise UnsafeFiring(f"{t} would double-mark {sorted(rest & outs)}")
    return frozenset(rest | outs)


def pn_fire_set(net: PetriNet, marking: frozenset, ts) -> frozenset:
    """Fire a set of transitions simultaneously; they must consume disjoint
    tokens and produce non-overlapping output."""
    ts = sorted(ts)
    all_ins = set()
    all_outs = set()
    for t in ts:
        ins, outs = net.inputs(t), net.outputs(t)
        if not ins <= marking:
            raise NotEnabled(f"{t} needs {sorted(ins - marking)} marked")
        if all_ins & ins:
            raise NotEnabled(f"{t} competes for tokens {sorted(all_ins & ins)}")
        if all_outs & outs:
            raise UnsafeFiring(f"concurrent output clash on {sorted(all_outs & outs)}")
        all_ins |= ins
        all_outs |= outs
    rest = marking - all_ins
    if rest & all_outs:
        raise UnsafeFiring(f"would double-mark {sorted(rest & all_outs)}")
    return frozenset(rest | all_outs)


def pn_step_sets(net: PetriNet, marking: frozenset) -> list:
    """All nonempty sets of transitions that can fire together, with their
    successor markings, deterministically ordered."""
    enabled = [t for t in sorted(net.transitions)
               if net.inputs(t) <= marking]
    out = []
    for size in range(1, len(enabled) + 1):
        for combo in itertools.combinations(enabled, size):
            try:
                nxt = pn_fire_set(net, marking, combo)
            except (NotEnabled, UnsafeFiring):
                continue
            out.append((frozenset(combo), nxt))
    return out


def net_reachability(net: PetriNet, marking: frozenset, depth: int):
    """(nodes, edges, level) of the depth-bounded reachability graph."""
    start = frozenset(marking)
    level = {start: 0}
    order = [start]
    edges = []
    queue = deque([start])
    while queue:
        m = queue.popleft()
        if level[m] >= depth:
            continue
        for ts, nxt in pn_step_sets(net, m):
            if nxt not in level:
                level[nxt] = level[m] + 1
                order.append(nxt)
                queue.append(nxt)
            edges.append((m, ts, nxt))
    return order, edges, level


def trans_pn(net: PetriNet, marking: frozenset):
    """(rule system, marking process): one constant per place, transitions as
    rules consuming their input constants in parallel."""
    for name in sorted(net.places | net.transitions):
        _check_name("net element", name)
    rules = []
    for t in sorted(net.transitions):
        ins = sorted(net.inputs(t))
        outs = sorted(net.outputs(t))
        if not ins:
            raise EncodingError(
                f"transition {t!r} has no input places; a rule left side "
                "cannot be the empty process")
        lhs = _marking_process(ins)
        rhs = _marking_process(outs)
        rules.append(DeltaRule(lhs, t, rhs))
    spec = SystemSpec(rules, constants=sorted(net.places),
                      alphabet=sorted(net.transitions))
    return spec, canonicalize(_marking_process(sorted(marking)), spec)


def _marking_process(places) -> Process:
    if not places:
        return EPS
    if len(places) == 1:
        return Const(places[0])
    return Par(frozenset(), tuple(Const(p) for p in places))


def decode_pn(proc: Process) -> frozenset:
    if isinstance(proc, Eps):
        return frozenset()
    if isinstance(proc, Const):
        return frozenset([proc.name])
    if isinstance(proc, Par) and not proc.sync \
            and all(isinstance(p, Const) for p in proc.parts):
        names = [p.name for p in proc.parts]
        if len(set(names)) != len(names):
            raise EncodingError(f"duplicated token in {process_text(proc)}")
        return frozenset(names)
    raise EncodingError(f"not an encoded marking: {process_text(proc)}")


def check_pn_simulation(net: PetriNet, marking: frozenset,
                        depth: int) -> SimReport:
    """Depth-bounded comparison of the net reachability graph against the
    encoded system: markings correspond to decoded states and every
    simultaneous firing set to an identically labelled step."""
    marking = frozenset(marking)
    spec, proc0 = trans_pn(net, marking)
    seen = {marking: proc0}
    level = {marking: 0}
    queue = deque([marking])
    checked = 0
    while queue:
        m = queue.popleft()
        if level[m] >= depth:
            continue
        net_moves = {(ts, nxt) for ts, nxt in pn_step_sets(net, m)}
        proc_moves = step(seen[m], spec)
        decoded_moves = set()
        for lab, succ in proc_moves:
            if any(c != 1 for _, c in lab.counts):
                return SimReport(False, checked, at_step=level[m] + 1,
                                 reason=f"label {lab.text()} repeats a transition")
            try:
                decoded = decode_pn(succ)
            except EncodingError as err:
                # the encoded system has no one-token-per-place guard; a net
                # that is not structurally safe diverges here
                return SimReport(False, checked, at_step=level[m] + 1,
                                 reason=str(err))
            decoded_moves.add((frozenset(lab.names()), decoded))
        net_set = {(ts, nxt) for ts, nxt in net_moves}
        if net_set != decoded_moves:
            key = lambda mv: (sorted(mv[0]), sorted(mv[1]))
            what = []
            missing = sorted(net_set - decoded_moves, key=key)
            extra = sorted(decoded_moves - net_set, key=key)
            if missing:
                what.append(f"net fires {sorted(missing[0][0])} unmatched")
            if extra:
                what.append(f"encoding steps {sorted(extra[0][0])} unmatched")
            return SimReport(False, checked, at_step=level[m] + 1,
                             reason="; ".join(what))
        checked += 1
        for lab, succ in proc_moves:
            nxt = decode_pn(succ)
            if nxt not in seen:
                seen[nxt] = succ
                level[nxt] = level[m] + 1
                queue.append(nxt)
            elif process_text(seen[nxt]) != process_text(succ):
                return SimReport(False, checked, at_step=level[m] + 1,
                                 reason=f"two encodings of marking {sorted(nxt)}")
    return SimReport(True, checked)


# ---------------------------------------------------------------------------
# File formats


def parse_tm(text: str):
    """Machine file: `states/gamma/blank/sigma/q0/finals/tape` name lists and
    `delta: (q,s) -> (q2,s2,L)` entries.  Returns (machine, initial config)."""
    fields = _key_lines(text)
    need = ["states", "gamma", "blank", "q0"]
    for key in need:
        if key not in fields:
            raise ParseError(f"missing {key!r} line")
    states = _csv(fields["states"])
    gamma = _csv(fields["gamma"])
    blank = fields["blank"].strip()
    sigma = _csv(fields.get("sigma", ""))
    finals = _csv(fields.get("finals", ""))
    delta = {}
    for entry in fields.get("delta", "").split(";"):
        entry = entry.strip()
        if not entry:
            continue
        m = re.match(r"^\(\s*(\w+)\s*,\s*(\w+)\s*\)\s*->\s*"
                     r"\(\s*(\w+)\s*,\s*(\w+)\s*,\s*([LR])\s*\)$", entry)
        if not m:
            raise ParseError(f"bad delta entry {entry!r}")
        q, s, q2, s2, move = m.groups()
        if (q, s) in delta:
            raise ParseError(f"duplicate delta entry for ({q},{s})")
        delta[(q, s)] = (q2, s2, move)
    machine = TuringMachine(
        states=frozenset(states), tape_alphabet=frozenset(gamma), blank=blank,
        input_alphabet=frozenset(sigma), delta=delta,
        initial=fields["q0"].strip(), finals=frozenset(finals))
    tape = _csv(fields.get("tape", ""))
    return machine, initial_config(machine, tape)


def parse_pn(text: str):
    """Net file: `places/transitions/marking` name lists and `arcs: p -> t`
    entries.  Returns (net, initial marking)."""
    fields = _key_lines(text)
    for key in ("places", "transitions"):
        if key not in fields:
            raise ParseError(f"missing {key!r} line")
    places = _csv(fields["places"])
    transitions = _csv(fields["transitions"])
    arcs = set()
    for entry in fields.get("arcs", "").replace(";", ",").split(","):
        entry = entry.strip()
        if not entry:
            continue
        m = re.match(r"^(\w+)\s*->\s*(\w+)$", entry)
        if not m:
            raise ParseError(f"bad arc {entry!r}")
        arcs.add((m.group(1), m.group(2)))
    net = PetriNet(frozenset(places), frozenset(transitions), frozenset(arcs))
    marking = frozenset(_csv(fields.get("marking", "")))
    unknown = marking - net.places
    if unknown:
        raise ParseError(f"marking mentions unknown place {sorted(unknown)[0]!r}")
    return net, marking


def _key_lines(text: str) -> dict:
    fields = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError(f"expected `key: value` line, got {line!r}")
        key, value = line.split(":", 1)
        key = key.strip()
        if key in fields:
            fields[key] = fields[key] + ";" + value.strip()
        else:
            fields[key] = value.strip()
    return fields


def _csv(text: str) -> list:
    return [part.strip() for part in text.split(",") if part.strip()]
