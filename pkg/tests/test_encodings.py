"""Machine/net reference semantics, translations, and lockstep checks."""

import pytest

from procval.encodings import (
    AlphabetClash, EncodingError, NotEnabled, PetriNet, TmConfig,
    TuringMachine, UnsafeFiring, check_pn_simulation, check_tm_simulation,
    decode_pn, decode_tm, initial_config, net_reachability, parse_pn,
    parse_tm, pn_fire, pn_fire_set, pn_step_sets, tm_step, trans_pn, trans_tm,
)
from procval.proc import (
    Label, Par, Restrict, SystemSpec, canonicalize, process_text, step,
)


def increment_machine():
    """Walk right over the ones, append one more, walk back, halt."""
    return TuringMachine(
        states=frozenset(["q0", "q1", "qf"]),
        tape_alphabet=frozenset(["b", "one"]),
        blank="b",
        input_alphabet=frozenset(["one"]),
        delta={
            ("q0", "one"): ("q0", "one", "R"),
            ("q0", "b"): ("q1", "one", "L"),
            ("q1", "one"): ("q1", "one", "L"),
            ("q1", "b"): ("qf", "b", "R"),
        },
        initial="q0",
        finals=frozenset(["qf"]))


def safe_producer_consumer():
    """Two-phase producer and a one-slot buffer; structurally one-safe."""
    net = PetriNet(
        places=frozenset(["pready", "pbusy", "free", "full"]),
        transitions=frozenset(["produce", "put", "take"]),
        arcs=frozenset([
            ("pready", "produce"), ("produce", "pbusy"),
            ("pbusy", "put"), ("free", "put"), ("put", "pready"), ("put", "full"),
            ("full", "take"), ("take", "free"),
        ]))
    return net, frozenset(["pready", "free"])


# ---------------------------------------------------------------------------
# Machine stepping


def test_tm_step_writes_and_moves():
    m = TuringMachine(
        states=frozenset(["q0", "qf"]), tape_alphabet=frozenset(["b", "one"]),
        blank="b", input_alphabet=frozenset(["one"]),
        delta={("q0", "b"): ("qf", "one", "R")},
        initial="q0", finals=frozenset(["qf"]))
    c = initial_config(m)
    n = tm_step(m, c)
    assert n == TmConfig(("one",), "b", "qf", ())
    # final state halts; undefined entry halts
    assert tm_step(m, n) is None
    m2 = TuringMachine(
        states=frozenset(["q0"]), tape_alphabet=frozenset(["b"]), blank="b",
        input_alphabet=frozenset(), delta={}, initial="q0", finals=frozenset())
    assert tm_step(m2, initial_config(m2)) is None


def test_tm_step_left_into_blank_region():
    m = increment_machine()
    c = TmConfig((), "one", "q1", ())
    n = tm_step(m, c)
    assert n == TmConfig((), "b", "q1", ("one",))
    assert n.normalized("b").text() == "b^q1|one"


def test_config_normalization():
    c = TmConfig(("one", "b", "b"), "one", "q0", ("b",))
    n = c.normalized("b")
    assert n.left == ("one",) and n.right == ()


# ---------------------------------------------------------------------------
# Machine translation


def test_encoded_step_is_single_tau():
    m = increment_machine()
    c = initial_config(m, ["one"])
    spec, proc = trans_tm(m, c)
    moves = step(proc, spec)
    assert len(moves) == 1
    lab, succ = moves[0]
    assert lab == Label.single("tau")
    assert decode_tm(succ, m) == tm_step(m, c).normalized("b")


def test_translation_shape_and_decode_inverse():
    m = increment_machine()
    c = initial_config(m, ["one", "one"])
    spec, proc = trans_tm(m, c)
    assert decode_tm(proc, m) == c.normalized("b")
    peeled = proc
    names = []
    while isinstance(peeled, Restrict):
        names.append(peeled.name)
        peeled = peeled.body
    assert names, "encoding must restrict its synchronization actions"
    assert isinstance(peeled, Par) and len(peeled.parts) == 3


def test_halted_machine_has_no_steps():
    m = increment_machine()
    c = TmConfig((), "one", "qf", ())
    spec, proc = trans_tm(m, c)
    assert step(proc, spec) == []


def test_tm_lockstep_simulation():
    m = increment_machine()
    c = initial_config(m, ["one", "one", "one"])
    report = check_tm_simulation(m, c, 20)
    assert report.ok and report.halted
    assert report.steps_checked == 8


def test_tm_encoding_is_a_silent_line():
    from procval.proc import build_lts
    m = increment_machine()
    c = initial_config(m, ["one", "one"])
    spec, proc = trans_tm(m, c)
    lts = build_lts(proc, spec, cap=50)
    assert all(lab == Label.single("tau") for _, lab, _ in lts.edges)
    # deterministic machine: exactly one successor per non-final state
    assert len(lts.edges) == len(lts.states) - 1


def test_tm_simulation_zero_steps():
    m = increment_machine()
    report = check_tm_simulation(m, initial_config(m, ["one"]), 0)
    assert report.ok and report.steps_checked == 0


def test_tm_fault_injection_detected():
    m = increment_machine()
    c = initial_config(m, ["one", "one"])
    spec, proc = trans_tm(m, c)
    # drop one rule and re-run the lockstep check by hand
    broken = SystemSpec(spec.rules[:-1], alphabet=sorted(spec.alphabet))
    cur_c, cur_p = c.normalized("b"), canonicalize(proc, broken)
    diverged_at = None
    for k in range(1, 21):
        nxt = tm_step(m, cur_c)
        moves = step(cur_p, broken)
        if nxt is None:
            diverged_at = None if not moves else k
            break
        if len(moves) != 1 or decode_tm(moves[0][1], m) != nxt.normalized("b"):
            diverged_at = k
            break
        cur_c, cur_p = nxt.normalized("b"), moves[0][1]
    assert diverged_at is not None


def test_alphabet_clash_rejected():
    with pytest.raises(AlphabetClash):
        trans_tm(TuringMachine(
            states=frozenset(["q0"]), tape_alphabet=frozenset(["b", "a_1"]),
            blank="b", input_alphabet=frozenset(), delta={}, initial="q0",
            finals=frozenset()), TmConfig((), "b", "q0", ()))
    with pytest.raises(AlphabetClash):
        trans_tm(TuringMachine(
            states=frozenset(["qX"]), tape_alphabet=frozenset(["b"]),
            blank="b", input_alphabet=frozenset(), delta={}, initial="qX",
            finals=frozenset()), TmConfig((), "b", "qX", ()))


# ---------------------------------------------------------------------------
# Nets


def test_pn_fire_examples():
    net = PetriNet(frozenset(["p1", "p2"]), frozenset(["t"]),
                   frozenset([("p1", "t"), ("t", "p2")]))
    assert pn_fire(net, frozenset(["p1"]), "t") == frozenset(["p2"])
    with pytest.raises(NotEnabled):
        pn_fire(net, frozenset(["p2"]), "t")
    # a transition with no inputs is vacuously enabled
    net2 = PetriNet(frozenset(["p"]), frozenset(["t"]), frozenset([("t", "p")]))
    assert pn_fire(net2, frozenset(), "t") == frozenset(["p"])
    with pytest.raises(UnsafeFiring):
        pn_fire(net2, frozenset(["p"]), "t")


def test_pn_fire_set_requires_independence():
    net = PetriNet(frozenset(["p", "q1", "q2"]), frozenset(["t1", "t2"]),
                   frozenset([("p", "t1"), ("t1", "q1"),
                              ("p", "t2"), ("t2", "q2")]))
    with pytest.raises(NotEnabled):
        pn_fire_set(net, frozenset(["p"]), ["t1", "t2"])
    assert pn_fire_set(net, frozenset(["p"]), ["t1"]) == frozenset(["q1"])


def test_single_arc_encoding():
    net = PetriNet(frozenset(["p1", "p2"]), frozenset(["t"]),
                   frozenset([("p1", "t"), ("t", "p2")]))
    spec, proc = trans_pn(net, frozenset(["p1"]))
    moves = step(proc, spec)
    assert [(l.text(), process_text(s)) for l, s in moves] == [("{t}", "p2")]
    assert decode_pn(proc) == frozenset(["p1"])


def test_empty_marking_encodes_to_empty_process():
    net = PetriNet(frozenset(["p1"]), frozenset(["t"]),
                   frozenset([("p1", "t")]))
    spec, proc = trans_pn(net, frozenset())
    assert process_text(proc) == "eps"
    assert step(proc, spec) == []


def test_independent_transitions_fire_together():
    net = PetriNet(frozenset(["p1", "p2", "q1", "q2"]), frozenset(["t1", "t2"]),
                   frozenset([("p1", "t1"), ("t1", "q1"),
                              ("p2", "t2"), ("t2", "q2")]))
    spec, proc = trans_pn(net, frozenset(["p1", "p2"]))
    labels = sorted(l.text() for l, _ in step(proc, spec))
    assert labels == ["{t1, t2}", "{t1}", "{t2}"]


def test_source_transition_not_encodable():
    net = PetriNet(frozenset(["p"]), frozenset(["t"]), frozenset([("t", "p")]))
    with pytest.raises(EncodingError):
        trans_pn(net, frozenset())


def test_pn_lockstep_simulation():
    net, m0 = safe_producer_consumer()
    report = check_pn_simulation(net, m0, 8)
    assert report.ok
    assert check_pn_simulation(net, m0, 0).ok


def test_pn_reachability_shape():
    net, m0 = safe_producer_consumer()
    nodes, edges, level = net_reachability(net, m0, 6)
    assert len(nodes) == 4
    # the marking with a full buffer and a ready producer steps concurrently
    combined = [ts for _, ts, _ in edges if len(ts) == 2]
    assert combined == [frozenset(["produce", "take"])]


def test_pn_fault_injection_detected():
    net, m0 = safe_producer_consumer()
    spec, proc = trans_pn(net, m0)
    broken = SystemSpec(spec.rules[:-1],
                        constants=sorted(spec.constants),
                        alphabet=sorted(spec.alphabet))
    # recheck by hand against the broken rule system
    from collections import deque
    from procval.encodings import pn_step_sets
    ok = True
    seen = {m0: canonicalize(proc, broken)}
    level = {m0: 0}
    queue = deque([m0])
    while queue and ok:
        m = queue.popleft()
        if level[m] >= 6:
            continue
        net_moves = {(ts, nxt) for ts, nxt in pn_step_sets(net, m)}
        got = set()
        for lab, succ in step(seen[m], broken):
            got.add((frozenset(lab.names()), decode_pn(succ)))
        if net_moves != got:
            ok = False
            break
        for ts, nxt in net_moves:
            if nxt not in seen:
                seen[nxt] = [s for l, s in step(seen[m], broken)
                             if decode_pn(s) == nxt][0]
                level[nxt] = level[m] + 1
                queue.append(nxt)
    assert not ok, "removing a rule must break the correspondence"


def test_unsafe_net_reported_not_crashed():
    net = PetriNet(
        places=frozenset(["pready", "pbusy", "full", "cready", "cbusy"]),
        transitions=frozenset(["produce", "put", "take", "consume"]),
        arcs=frozenset([
            ("pready", "produce"), ("produce", "pbusy"),
            ("pbusy", "put"), ("put", "pready"), ("put", "full"),
            ("full", "take"), ("cready", "take"), ("take", "cbusy"),
            ("cbusy", "consume"), ("consume", "cready"),
        ]))
    report = check_pn_simulation(net, frozenset(["pready", "cready"]), 6)
    assert not report.ok
    assert "token" in report.reason or "unmatched" in report.reason


# ---------------------------------------------------------------------------
# File formats


def test_parse_tm_file():
    text = """
    # unary increment
    states: q0, q1, qf
    gamma: b, one
    blank: b
    sigma: one
    q0: q0
    finals: qf
    delta: (q0, one) -> (q0, one, R); (q0, b) -> (q1, one, L)
    delta: (q1, one) -> (q1, one, L)
    delta: (q1, b) -> (qf, b, R)
    tape: one, one
    """
    machine, config = parse_tm(text)
    assert machine.initial == "q0"
    assert len(machine.delta) == 4
    assert config == TmConfig((), "one", "q0", ("one",))
    report = check_tm_simulation(machine, config, 10)
    assert report.ok


def test_parse_pn_file():
    text = """
    places: p1, p2
    transitions: t
    arcs: p1 -> t, t -> p2
    marking: p1
    """
    net, marking = parse_pn(text)
    assert net.inputs("t") == frozenset(["p1"])
    assert marking == frozenset(["p1"])
    assert check_pn_simulation(net, marking, 4).ok


def test_parse_errors():
    from procval.lexer import ParseError
    with pytest.raises(ParseError):
        parse_tm("states: q0")
    with pytest.raises(ParseError):
        parse_pn("places: p")
    with pytest.raises(ParseError):
        parse_pn("places: p\ntransitions: t\nmarking: zz")
