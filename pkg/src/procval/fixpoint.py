"""Monotone-map utilities and least/greatest solutions of f(x) = g(x).

The solver iterates the minimum-preimage (resp. maximum-preimage) selector
composed with g, starting from the bottom (resp. top) of the domain lattice,
and converges within |domain| rounds on finite lattices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lattice import Lattice, element_text


class FixpointError(Exception):
    pass


class EmptyPreimage(FixpointError):
    """The requested value is not in the range of the map."""


class NoLeastElement(FixpointError):
    """A preimage set whose meet lies outside the set has no minimum."""


class NoGreatestElement(FixpointError):
    """A preimage set whose join lies outside the set has no maximum."""


class RangeViolation(FixpointError):
    """Some value of g has an empty preimage under f."""


class NotConverged(FixpointError):
    """The iterate failed the final f(x) = g(x) verification."""


@dataclass
class MonotoneMap:
    """Total table from one finite lattice into another.

    Monotonicity is a promise of the caller; `check_monotone` verifies it
    exhaustively.
    """

    dom: Lattice
    cod: Lattice
    table: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [x for x in self.dom.elements() if _k(x) not in self._keyed()]
        if missing:
            raise ValueError(f"table is not total; missing {element_text(missing[0])}")

    def _keyed(self):
        if not hasattr(self, "_keys"):
            self._keys = {_k(x): v for x, v in self.table.items()}
        return self._keys

    @classmethod
    def from_function(cls, dom: Lattice, cod: Lattice, fn) -> "MonotoneMap":
        return cls(dom, cod, {x: fn(x) for x in dom.elements()})

    def __call__(self, x):
        return self._keyed()[_k(x)]


def _k(x):
    # floats/ints/bools hash consistently; frozensets and tuples are hashable
    return x


def check_monotone(f: MonotoneMap):
    """Exhaustive order-preservation test; returns (ok, violating pairs)."""
    elems = f.dom.elements()
    violations = []
    for x in elems:
        for y in elems:
            if f.dom.leq(x, y) and not f.cod.leq(f(x), f(y)):
                violations.append((x, y))
    return (not violations, violations)


def range_of(f: MonotoneMap, subset=None) -> list:
    """Image of the domain (or of a subset), in codomain enumeration order."""
    if subset is None:
        subset = f.dom.elements()
    else:
        subset = list(subset)
        f.dom.check(*subset)
    image = {_k(f(x)) for x in subset}
    return [v for v in f.cod.elements() if _k(v) in image]


def preimage(f: MonotoneMap, u) -> list:
    f.cod.check(u)
    return [x for x in f.dom.elements() if f(x) == u]


def min_preimage(f: MonotoneMap, u):
    """Least x with f(x) = u; errors if the preimage is empty or has no minimum."""
    pre = preimage(f, u)
    if not pre:
        raise EmptyPreimage(f"{element_text(u)} is not in the range")
    low = f.dom.meet_all(pre)
    if not any(low == x for x in pre):
        raise NoLeastElement(
            f"preimage of {element_text(u)} has no least element")
    return low


def max_preimage(f: MonotoneMap, u):
    """Greatest x with f(x) = u; dual of `min_preimage`."""
    pre = preimage(f, u)
    if not pre:
        raise EmptyPreimage(f"{element_text(u)} is not in the range")
    high = f.dom.join_all(pre)
    if not any(high == x for x in pre):
        raise NoGreatestElement(
            f"preimage of {element_text(u)} has no greatest element")
    return high


def brute_solutions(f: MonotoneMap, g: MonotoneMap) -> list:
    """Exhaustive solution set of f(x) = g(x), in enumeration order."""
    _check_shared(f, g)
    return [x for x in f.dom.elements() if f(x) == g(x)]


def least_solution(f: MonotoneMap, g: MonotoneMap, stats: dict | None = None):
    """Least x with f(x) = g(x), by iterating min_preimage(f, g(_)) from bottom."""
    return _solve(f, g, greatest=False, stats=stats)


def greatest_solution(f: MonotoneMap, g: MonotoneMap, stats: dict | None = None):
    """Greatest x with f(x) = g(x), by iterating max_preimage(f, g(_)) from top."""
    return _solve(f, g, greatest=True, stats=stats)


def _check_shared(f, g):
    if f.dom.elements() != g.dom.elements() or f.cod.elements() != g.cod.elements():
        raise ValueError("maps must share domain and codomain")


def _solve(f, g, *, greatest, stats):
    _check_shared(f, g)
    f_range = set(map(_k, range_of(f)))
    g_range = range_of(g)
    for v in g_range:
        if _k(v) not in f_range:
            raise RangeViolation(
                f"g reaches {element_text(v)} which has no f-preimage")
    pre = max_preimage if greatest else min_preimage
    # Memoize the preimage selector on rang(g) and verify it is order
    # preserving there; without that the iteration below can oscillate and
    # settle on a non-extremal solution.
    selector = {_k(v): pre(f, v) for v in g_range}
    for u in g_range:
        for v in g_range:
            if f.cod.leq(u, v):
                if not f.dom.leq(selector[_k(u)], selector[_k(v)]):
                    raise NotConverged(
                        "preimage selector is not order preserving between "
                        f"{element_text(u)} and {element_text(v)}")
    combine = f.dom.meet if greatest else f.dom.join
    x = f.dom.top if greatest else f.dom.bot
    acc = x
    iterations = 0
    for _ in range(f.dom.size):
        nxt = selector[_k(g(x))]
        iterations += 1
        acc = combine(acc, nxt)
        if nxt == x:
            break
        x = nxt
    if stats is not None:
        stats["iterations"] = iterations
    if f(acc) != g(acc):
        raise NotConverged(
            f"iterate {element_text(acc)} does not solve f(x) = g(x)")
    return acc


def kleene_lfp(h: MonotoneMap, stats: dict | None = None):
    """Least fixpoint of a monotone endomap, by iteration from bottom."""
    return _kleene(h, from_top=False, stats=stats)


def kleene_gfp(h: MonotoneMap, stats: dict | None = None):
    """Greatest fixpoint of a monotone endomap, by iteration from top."""
    return _kleene(h, from_top=True, stats=stats)


def _kleene(h, *, from_top, stats):
    if h.dom.elements() != h.cod.elements():
        raise ValueError("kleene iteration needs an endomap")
    x = h.dom.top if from_top else h.dom.bot
    iterations = 0
    for _ in range(h.dom.size + 1):
        nxt = h(x)
        iterations += 1
        if nxt == x:
            break
        x = nxt
    if stats is not None:
        stats["iterations"] = iterations
    return x
