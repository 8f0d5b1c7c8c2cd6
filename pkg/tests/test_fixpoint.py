"""Monotone maps, preimage selectors, and the equation solver vs brute force."""

import random

import pytest

from procval import lattice as lat
from procval.fixpoint import (
    EmptyPreimage, MonotoneMap, NoGreatestElement, NoLeastElement,
    NotConverged, RangeViolation, brute_solutions, check_monotone,
    greatest_solution, kleene_gfp, kleene_lfp, least_solution, max_preimage,
    min_preimage, range_of,
)

from generators import random_monotone_pair

CHAIN3 = lat.chain(3)
BOOL = lat.bool_lattice()


def ident(L):
    return MonotoneMap.from_function(L, L, lambda x: x)

def const(L1, L2, v):
    return MonotoneMap.from_function(L1, L2, lambda _: v)

def step_f():
    # 0 -> False, 1 -> True, 2 -> True
    return MonotoneMap(CHAIN3, BOOL, {0: False, 1: True, 2: True})


def test_check_monotone():
    ok, _ = check_monotone(ident(CHAIN3))
    assert ok
    ok, _ = check_monotone(const(CHAIN3, BOOL, False))
    assert ok
    two = lat.chain(2)
    flipped = MonotoneMap(two, two, {0: 1, 1: 0})
    ok, violations = check_monotone(flipped)
    assert not ok
    assert (0, 1) in violations


def test_range_of():
    assert range_of(ident(CHAIN3)) == [0, 1, 2]
    assert range_of(const(BOOL, BOOL, False)) == [False]
    assert range_of(ident(CHAIN3), [1]) == [1]
    from procval.lattice import ForeignElement
    with pytest.raises(ForeignElement):
        range_of(ident(CHAIN3), [7])


def test_min_max_preimage():
    assert min_preimage(ident(CHAIN3), 2) == 2
    assert max_preimage(ident(CHAIN3), 0) == 0
    f = step_f()
    assert min_preimage(f, True) == 1
    assert max_preimage(f, True) == 2
    with pytest.raises(EmptyPreimage):
        min_preimage(const(CHAIN3, BOOL, False), True)
    with pytest.raises(EmptyPreimage):
        max_preimage(const(CHAIN3, BOOL, False), True)


def test_preimage_without_minimum():
    diamond = lat.table(
        ["bot", "a", "b", "top"],
        [("bot", "a"), ("bot", "b"), ("a", "top"), ("b", "top")])
    f = MonotoneMap(diamond, BOOL,
                    {"bot": False, "a": True, "b": True, "top": True})
    assert check_monotone(f)[0]
    with pytest.raises(NoLeastElement):
        min_preimage(f, True)
    g = MonotoneMap(diamond, BOOL,
                    {"bot": False, "a": False, "b": False, "top": True})
    with pytest.raises(NoGreatestElement):
        max_preimage(g, False)


def test_brute_solutions():
    assert brute_solutions(ident(CHAIN3), ident(CHAIN3)) == [0, 1, 2]
    assert brute_solutions(ident(CHAIN3), const(CHAIN3, CHAIN3, 1)) == [1]
    assert brute_solutions(step_f(), const(CHAIN3, BOOL, True)) == [1, 2]


def test_least_and_greatest_solution_examples():
    assert least_solution(ident(CHAIN3), const(CHAIN3, CHAIN3, 0)) == 0
    assert least_solution(ident(CHAIN3), ident(CHAIN3)) == 0
    assert greatest_solution(ident(CHAIN3), ident(CHAIN3)) == 2
    f = step_f()
    g = const(CHAIN3, BOOL, True)
    assert least_solution(f, g) == 1
    assert greatest_solution(f, g) == 2


def test_range_violation():
    f = const(CHAIN3, BOOL, False)
    g = const(CHAIN3, BOOL, True)
    with pytest.raises(RangeViolation):
        least_solution(f, g)
    with pytest.raises(RangeViolation):
        greatest_solution(f, g)


def test_kleene_fixpoints():
    assert kleene_lfp(ident(BOOL)) is False
    assert kleene_gfp(ident(BOOL)) is True
    c = const(CHAIN3, CHAIN3, 1)
    assert kleene_lfp(c) == 1
    assert kleene_gfp(c) == 1
    h = MonotoneMap.from_function(CHAIN3, CHAIN3, lambda x: max(x, 1))
    assert kleene_lfp(h) == 1
    assert kleene_gfp(h) == 2


def test_solver_agrees_with_brute_force_random():
    # On non-chain domains the preimage selector can fail to exist or fail to
    # be order preserving; the solver reports those instead of guessing, and
    # must be exact everywhere else.
    rng = random.Random(2024)
    clean = 0
    for _ in range(200):
        f, g = random_monotone_pair(rng)
        sols = brute_solutions(f, g)
        assert sols, "solution set must be nonempty under the range condition"
        try:
            stats_lo, stats_hi = {}, {}
            lo = least_solution(f, g, stats=stats_lo)
            hi = greatest_solution(f, g, stats=stats_hi)
        except (NoLeastElement, NoGreatestElement, NotConverged):
            continue
        clean += 1
        assert lo in sols and hi in sols
        assert all(f.dom.leq(lo, s) for s in sols)
        assert all(f.dom.leq(s, hi) for s in sols)
        assert stats_lo["iterations"] <= f.dom.size
        assert stats_hi["iterations"] <= f.dom.size
    assert clean >= 120


def test_solver_refuses_non_monotone_selector():
    # Dual pentagon: minimum preimages of 5 and 7 exist but are incomparable,
    # so iterating the selector would oscillate; the solver must say so
    # rather than return a non-least solution.
    pentagon = lat.dual(lat.table(
        ["bot", "x", "y", "z", "top"],
        [("bot", "x"), ("x", "top"), ("bot", "y"), ("y", "z"), ("z", "top")]))
    c8 = lat.chain(8)
    f = MonotoneMap(pentagon, c8, {"top": 4, "x": 5, "z": 7, "y": 7, "bot": 7})
    g = MonotoneMap(pentagon, c8, {"top": 5, "x": 7, "z": 5, "y": 7, "bot": 7})
    assert check_monotone(f)[0] and check_monotone(g)[0]
    assert brute_solutions(f, g) == ["bot", "y"]
    with pytest.raises(NotConverged):
        least_solution(f, g)


def test_composed_equation_solutions_nonempty():
    # For monotone endomaps f and g, f(x) = f(g(x)) always has a solution
    # (any fixpoint of g works).  Least/greatest members need not exist:
    # on the diamond with f = [bot->b, rest->top] and g constant b, the
    # solution set {a, b, top} has no least element.
    rng = random.Random(7)
    from generators import random_small_lattice, random_monotone_map
    for _ in range(60):
        L = random_small_lattice(rng)
        f = random_monotone_map(rng, L, L)
        g = random_monotone_map(rng, L, L)
        h = MonotoneMap.from_function(L, L, lambda x: f(g(x)))
        assert brute_solutions(f, h)
    diamond = lat.table(
        ["bot", "a", "b", "top"],
        [("bot", "a"), ("bot", "b"), ("a", "top"), ("b", "top")])
    f = MonotoneMap(diamond, diamond,
                    {"bot": "b", "a": "top", "b": "top", "top": "top"})
    g = MonotoneMap.from_function(diamond, diamond, lambda _: "b")
    h = MonotoneMap.from_function(diamond, diamond, lambda x: f(g(x)))
    sols = brute_solutions(f, h)
    assert sols == ["a", "b", "top"]
    assert not any(diamond.meet_all(sols) == s for s in sols)


def test_kleene_lfp_is_minimum_fixpoint():
    rng = random.Random(11)
    for _ in range(80):
        from generators import random_small_lattice, random_monotone_map
        L = random_small_lattice(rng)
        h = random_monotone_map(rng, L, L)
        fixed = [x for x in L.elements() if h(x) == x]
        lfp = kleene_lfp(h)
        gfp = kleene_gfp(h)
        assert lfp in fixed and gfp in fixed
        assert all(L.leq(lfp, x) for x in fixed)
        assert all(L.leq(x, gfp) for x in fixed)
        assert L.leq(lfp, gfp)
