"""Bisimulation: refinement, approximants, and the formula encoding."""

import random

from procval.bisim import (
    bisim_via_pel, bisim_table_via_pel, check_is_bisimulation,
    distinguishing_depth, strong_approx, strong_bisimilar, strong_partition,
    weak_approx, weak_bisimilar,
)
from procval.pel import union_lts
from procval.proc import (
    EPS, Const, DeltaRule, SystemSpec, build_lts, parse_process,
)

from generators import random_bool_model


def classic_choice_pair():
    """a;(b+c) versus (a;b)+(a;c), the standard non-bisimilar pair."""
    spec = SystemSpec([
        DeltaRule(Const("A"), "a", EPS),
        DeltaRule(Const("B"), "b", EPS),
        DeltaRule(Const("C"), "c", EPS),
    ])
    left = parse_process("A ; (B + C)", spec)
    right = parse_process("(A ; B) + (A ; C)", spec)
    lts = union_lts(spec, [left, right], cap=50)
    return lts, lts.state_index(left), lts.state_index(right)


def test_reflexive():
    spec = SystemSpec([DeltaRule(Const("C"), "a", Const("C"))])
    lts = build_lts(Const("C"), spec, cap=10)
    ok, part = strong_bisimilar(lts, 0, 0)
    assert ok
    assert check_is_bisimulation(lts, part)


def test_classic_pair_not_bisimilar():
    lts, p, q = classic_choice_pair()
    ok, part = strong_bisimilar(lts, p, q)
    assert not ok
    assert check_is_bisimulation(lts, part)
    # the split appears at matching depth 2
    assert strong_approx(0, lts, p, q)
    assert strong_approx(1, lts, p, q)
    assert not strong_approx(2, lts, p, q)
    assert distinguishing_depth(lts, p, q) == 2


def test_isomorphic_loops_bisimilar():
    spec = SystemSpec([DeltaRule(Const("C"), "a", Const("C")),
                       DeltaRule(Const("D"), "a", Const("D"))])
    lts = union_lts(spec, [Const("C"), Const("D")], cap=10)
    p, q = lts.state_index(Const("C")), lts.state_index(Const("D"))
    assert strong_bisimilar(lts, p, q)[0]


def test_weak_collapses_silent_prefix():
    # h;Q with h hidden is weakly (not strongly) bisimilar to Q
    spec = SystemSpec([
        DeltaRule(Const("H"), "h", Const("Q")),
        DeltaRule(Const("Q"), "a", EPS),
    ])
    hidden = parse_process("new h . H", spec)
    lts = union_lts(spec, [hidden, Const("Q")], cap=20)
    p, q = lts.state_index(hidden), lts.state_index(Const("Q"))
    assert not strong_bisimilar(lts, p, q)[0]
    assert weak_bisimilar(lts, p, q)


def test_distinct_actions_not_weakly_bisimilar():
    spec = SystemSpec([DeltaRule(Const("C"), "a", Const("C")),
                       DeltaRule(Const("D"), "b", Const("D"))])
    lts = union_lts(spec, [Const("C"), Const("D")], cap=10)
    p, q = lts.state_index(Const("C")), lts.state_index(Const("D"))
    assert not weak_bisimilar(lts, p, q)


def test_approx_zero_total_and_stabilizes():
    rng = random.Random(41)
    for _ in range(10):
        lts, _, _ = random_bool_model(rng, max_states=12)
        n = len(lts.states)
        part = strong_partition(lts)
        for p in range(n):
            for q in range(n):
                assert strong_approx(0, lts, p, q)
                stable = strong_approx(n * n, lts, p, q)
                assert stable == part.same_block(p, q)
                # refining in k: separation once reached persists
                seen_false = False
                for k in range(n + 1):
                    val = strong_approx(k, lts, p, q)
                    if seen_false:
                        assert not val
                    if not val:
                        seen_false = True


def test_strong_implies_weak():
    rng = random.Random(42)
    for _ in range(10):
        lts, _, _ = random_bool_model(rng, max_states=10)
        n = len(lts.states)
        strong = strong_partition(lts)
        for p in range(n):
            for q in range(n):
                if strong.same_block(p, q):
                    assert weak_bisimilar(lts, p, q)


def test_formula_encoding_agrees_with_refinement():
    rng = random.Random(43)
    for _ in range(8):
        lts, _, _ = random_bool_model(rng, max_states=10)
        part = strong_partition(lts)
        table = bisim_table_via_pel(lts)
        n = len(lts.states)
        for p in range(n):
            for q in range(n):
                assert table.table[(p, q)] == part.same_block(p, q)


def test_formula_encoding_on_classic_pair():
    lts, p, q = classic_choice_pair()
    assert bisim_via_pel(lts, p, p)
    assert not bisim_via_pel(lts, p, q)


def test_weak_approx_matches_weak():
    spec = SystemSpec([
        DeltaRule(Const("H"), "h", Const("Q")),
        DeltaRule(Const("Q"), "a", EPS),
    ])
    hidden = parse_process("new h . H", spec)
    lts = union_lts(spec, [hidden, Const("Q")], cap=20)
    p, q = lts.state_index(hidden), lts.state_index(Const("Q"))
    assert weak_approx(0, lts, p, q)
    n = len(lts.states)
    assert weak_approx(n * n, lts, p, q) == weak_bisimilar(lts, p, q)
