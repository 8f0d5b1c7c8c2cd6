"""Finite complete lattices: constructors, order tests, and the meet/join algebra.

Every lattice here is a finite universe with a decidable partial order where
every subset has a greatest lower bound and a least upper bound.  Handles are
immutable after construction; all operations are pure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .lexer import stream

INF = math.inf  # top element of the capped-numeric chain, printed as "inf"


class LatticeError(Exception):
    pass


class NotALattice(LatticeError):
    """A table spec whose order lacks some binary meet or join."""


class EmptyUniverse(LatticeError):
    """A lattice spec with no elements."""


class ForeignElement(LatticeError):
    """An element handed to a lattice that is not in its universe."""


# ---------------------------------------------------------------------------
# Specs


@dataclass(frozen=True)
class LatticeSpec:
    """Description of a lattice universe; see `make_lattice`.

    kind is one of: bool, chain, natcap, powerset, product, dual, table.
    Only the fields relevant to the kind are populated.
    """

    kind: str
    n: int = 0
    ground: tuple = ()
    factors: tuple = ()
    inner: "LatticeSpec | None" = None
    elems: tuple = ()
    pairs: tuple = ()

    @staticmethod
    def bool_():
        return LatticeSpec("bool")

    @staticmethod
    def chain(n: int):
        return LatticeSpec("chain", n=n)

    @staticmethod
    def natcap(cap: int):
        return LatticeSpec("natcap", n=cap)

    @staticmethod
    def powerset(names):
        return LatticeSpec("powerset", ground=tuple(names))

    @staticmethod
    def product(*factors):
        return LatticeSpec("product", factors=tuple(factors))

    @staticmethod
    def dual(inner):
        return LatticeSpec("dual", inner=inner)

    @staticmethod
    def table(elems, pairs):
        return LatticeSpec("table", elems=tuple(elems), pairs=tuple(pairs))


class Lattice:
    """Base class: a finite complete lattice with an enumerable universe."""

    tag = "lattice"

    def elements(self) -> list:
        raise NotImplementedError

    def leq(self, x, y) -> bool:
        raise NotImplementedError

    def meet(self, x, y):
        raise NotImplementedError

    def join(self, x, y):
        raise NotImplementedError

    @property
    def bot(self):
        raise NotImplementedError

    @property
    def top(self):
        raise NotImplementedError

    @property
    def size(self) -> int:
        return len(self.elements())

    def __contains__(self, x) -> bool:
        raise NotImplementedError

    def check(self, *xs):
        for x in xs:
            if x not in self:
                raise ForeignElement(f"{element_text(x)} is not an element of {self.tag}")

    def meet_all(self, xs):
        """Greatest lower bound of a collection; the empty meet is top."""
        acc = self.top
        for x in xs:
            self.check(x)
            acc = self.meet(acc, x)
        return acc

    def join_all(self, xs):
        """Least upper bound of a collection; the empty join is bottom."""
        acc = self.bot
        for x in xs:
            self.check(x)
            acc = self.join(acc, x)
        return acc

    def linear_extension(self) -> list:
        """Universe sorted so that x <= y implies x comes first."""
        pending = list(self.elements())
        out = []
        while pending:
            for x in pending:
                if not any(self.leq(y, x) and not self.leq(x, y) for y in pending):
                    out.append(x)
                    pending.remove(x)
                    break
            else:  # pragma: no cover - guarded by antisymmetry checks
                raise LatticeError("cycle in order relation")
        return out

    def __repr__(self):
        return f"<{self.tag}: {self.size} elements>"


class ChainLattice(Lattice):
    """Totally ordered universe; covers bool, counting chains and capped naturals."""

    def __init__(self, elems, tag):
        if not elems:
            raise EmptyUniverse("chain with no elements")
        self._elems = list(elems)
        self._index = {e: i for i, e in enumerate(self._elems)}
        self.tag = tag

    def elements(self):
        return list(self._elems)

    def __contains__(self, x):
        try:
            return x in self._index
        except TypeError:
            return False

    def leq(self, x, y):
        self.check(x, y)
        return self._index[x] <= self._index[y]

    def meet(self, x, y):
        self.check(x, y)
        return self._elems[min(self._index[x], self._index[y])]

    def join(self, x, y):
        self.check(x, y)
        return self._elems[max(self._index[x], self._index[y])]

    @property
    def bot(self):
        return self._elems[0]

    @property
    def top(self):
        return self._elems[-1]


class PowersetLattice(Lattice):
    """All subsets of a finite ground set, ordered by inclusion."""

    def __init__(self, ground):
        self._ground = tuple(ground)
        if len(set(self._ground)) != len(self._ground):
            raise NotALattice("duplicate names in powerset ground set")
        self.tag = "powerset{" + ",".join(self._ground) + "}"

    def elements(self):
        out = []
        n = len(self._ground)
        for mask in range(1 << n):
            out.append(frozenset(self._ground[i] for i in range(n) if mask >> i & 1))
        return out

    def __contains__(self, x):
        return isinstance(x, frozenset) and x <= set(self._ground)

    def leq(self, x, y):
        self.check(x, y)
        return x <= y

    def meet(self, x, y):
        self.check(x, y)
        return x & y

    def join(self, x, y):
        self.check(x, y)
        return x | y

    @property
    def bot(self):
        return frozenset()

    @property
    def top(self):
        return frozenset(self._ground)


class ProductLattice(Lattice):
    """Componentwise order on tuples drawn from factor lattices."""

    def __init__(self, factors):
        if not factors:
            raise EmptyUniverse("product of no factors")
        self.factors = tuple(factors)
        self.tag = "product(" + ", ".join(f.tag for f in self.factors) + ")"

    def elements(self):
        return [tuple(t) for t in itertools.product(*(f.elements() for f in self.factors))]

    @property
    def size(self):
        n = 1
        for f in self.factors:
            n *= f.size
        return n

    def __contains__(self, x):
        return (isinstance(x, tuple) and len(x) == len(self.factors)
                and all(v in f for v, f in zip(x, self.factors)))

    def leq(self, x, y):
        self.check(x, y)
        return all(f.leq(a, b) for f, a, b in zip(self.factors, x, y))

    def meet(self, x, y):
        self.check(x, y)
        return tuple(f.meet(a, b) for f, a, b in zip(self.factors, x, y))

    def join(self, x, y):
        self.check(x, y)
        return tuple(f.join(a, b) for f, a, b in zip(self.factors, x, y))

    @property
    def bot(self):
        return tuple(f.bot for f in self.factors)

    @property
    def top(self):
        return tuple(f.top for f in self.factors)


class DualLattice(Lattice):
    """The same universe with the order reversed: meet and join swap roles."""

    def __init__(self, inner):
        self.inner = inner
        self.tag = f"dual({inner.tag})"

    def elements(self):
        return self.inner.elements()

    @property
    def size(self):
        return self.inner.size

    def __contains__(self, x):
        return x in self.inner

    def leq(self, x, y):
        return self.inner.leq(y, x)

    def meet(self, x, y):
        return self.inner.join(x, y)

    def join(self, x, y):
        return self.inner.meet(x, y)

    @property
    def bot(self):
        return self.inner.top

    @property
    def top(self):
        return self.inner.bot


class TableLattice(Lattice):
    """Explicit universe and order pairs, validated to be a complete lattice."""

    def __init__(self, elems, pairs, tag="table"):
        elems = list(elems)
        if not elems:
            raise EmptyUniverse("table with no elements")
        if len(set(elems)) != len(elems):
            raise NotALattice("duplicate elements in table spec")
        self._elems = elems
        self._index = {e: i for i, e in enumerate(elems)}
        self.tag = tag
        n = len(elems)
        for x, y in pairs:
            if x not in self._index or y not in self._index:
                raise NotALattice(f"order pair ({x}, {y}) mentions unknown element")
        # reflexive-transitive closure
        rel = [[False] * n for _ in range(n)]
        for i in range(n):
            rel[i][i] = True
        for x, y in pairs:
            rel[self._index[x]][self._index[y]] = True
        for k in range(n):
            for i in range(n):
                if rel[i][k]:
                    row_k = rel[k]
                    row_i = rel[i]
                    for j in range(n):
                        if row_k[j]:
                            row_i[j] = True
        for i in range(n):
            for j in range(i + 1, n):
                if rel[i][j] and rel[j][i]:
                    raise NotALattice(
                        f"antisymmetry violated between {elems[i]} and {elems[j]}")
        self._rel = rel
        self._meet = {}
        self._join = {}
        for i in range(n):
            for j in range(n):
                ups = [k for k in range(n) if rel[i][k] and rel[j][k]]
                lub = [k for k in ups if all(rel[k][m] for m in ups)]
                if not lub:
                    raise NotALattice(f"pair ({elems[i]}, {elems[j]}) has no join")
                downs = [k for k in range(n) if rel[k][i] and rel[k][j]]
                glb = [k for k in downs if all(rel[m][k] for m in downs)]
                if not glb:
                    raise NotALattice(f"pair ({elems[i]}, {elems[j]}) has no meet")
                self._join[i, j] = lub[0]
                self._meet[i, j] = glb[0]
        self._bot = elems[self._fold(self._meet)]
        self._top = elems[self._fold(self._join)]

    def _fold(self, table):
        acc = 0
        for i in range(1, len(self._elems)):
            acc = table[acc, i]
        return acc

    def elements(self):
        return list(self._elems)

    def __contains__(self, x):
        try:
            return x in self._index
        except TypeError:
            return False

    def leq(self, x, y):
        self.check(x, y)
        return self._rel[self._index[x]][self._index[y]]

    def meet(self, x, y):
        self.check(x, y)
        return self._elems[self._meet[self._index[x], self._index[y]]]

    def join(self, x, y):
        self.check(x, y)
        return self._elems[self._join[self._index[x], self._index[y]]]

    @property
    def bot(self):
        return self._bot

    @property
    def top(self):
        return self._top


# ---------------------------------------------------------------------------
# Construction


def bool_lattice() -> Lattice:
    return ChainLattice([False, True], "bool")

def chain(n: int) -> Lattice:
    if n <= 0:
        raise EmptyUniverse("chain needs a positive element count")
    return ChainLattice(list(range(n)), f"chain{n}")

def natcap(cap: int) -> Lattice:
    """Counting chain 0..cap with an extra greatest element `inf`."""
    if cap < 0:
        raise EmptyUniverse("natcap needs a non-negative cap")
    return ChainLattice(list(range(cap + 1)) + [INF], f"natcap{cap}")

def powerset(names) -> Lattice:
    return PowersetLattice(names)

def product(*factors: Lattice) -> Lattice:
    return ProductLattice(factors)

def dual(inner: Lattice) -> Lattice:
    return DualLattice(inner)

def table(elems, pairs) -> Lattice:
    return TableLattice(elems, pairs)


def make_lattice(spec: LatticeSpec) -> Lattice:
    """Build a lattice handle from a spec; raises NotALattice / EmptyUniverse."""
    if spec.kind == "bool":
        return bool_lattice()
    if spec.kind == "chain":
        return chain(spec.n)
    if spec.kind == "natcap":
        return natcap(spec.n)
    if spec.kind == "powerset":
        return powerset(spec.ground)
    if spec.kind == "product":
        return product(*(make_lattice(f) for f in spec.factors))
    if spec.kind == "dual":
        return dual(make_lattice(spec.inner))
    if spec.kind == "table":
        return table(spec.elems, spec.pairs)
    raise LatticeError(f"unknown lattice kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Text format


def parse_lattice_spec(text: str) -> LatticeSpec:
    """Parse the one-per-file lattice spec notation.

    Examples: `bool`, `chain 3`, `natcap 10`, `powerset {a,b,c}`,
    `product [bool, chain 2]`, `dual bool`,
    `table { elems: [x,y,z]; leq: [(x,y),(x,z)] }`.
    """
    ts = stream(text)
    spec = _parse_spec(ts)
    ts.expect("eof")
    return spec


def _parse_spec(ts) -> LatticeSpec:
    tok = ts.expect("ident")
    kind = tok.text
    if kind == "bool":
        return LatticeSpec.bool_()
    if kind in ("chain", "natcap"):
        num = ts.expect("int")
        return LatticeSpec(kind, n=int(num.text))
    if kind == "powerset":
        ts.expect("sym", "{")
        names = _ident_list(ts, "}")
        ts.expect("sym", "}")
        return LatticeSpec.powerset(names)
    if kind == "product":
        ts.expect("sym", "[")
        factors = [_parse_spec(ts)]
        while ts.accept("sym", ","):
            factors.append(_parse_spec(ts))
        ts.expect("sym", "]")
        return LatticeSpec.product(*factors)
    if kind == "dual":
        return LatticeSpec.dual(_parse_spec(ts))
    if kind == "table":
        ts.expect("sym", "{")
        ts.expect("ident", "elems")
        ts.expect("sym", ":")
        ts.expect("sym", "[")
        elems = _ident_list(ts, "]")
        ts.expect("sym", "]")
        pairs = []
        if ts.accept("sym", ";"):
            ts.expect("ident", "leq")
            ts.expect("sym", ":")
            ts.expect("sym", "[")
            while not ts.at("sym", "]"):
                ts.expect("sym", "(")
                a = ts.expect("ident").text
                ts.expect("sym", ",")
                b = ts.expect("ident").text
                ts.expect("sym", ")")
                pairs.append((a, b))
                if not ts.accept("sym", ","):
                    break
            ts.expect("sym", "]")
        ts.expect("sym", "}")
        return LatticeSpec.table(elems, pairs)
    ts.error(f"unknown lattice kind {kind!r}")


def _ident_list(ts, closer):
    names = []
    while not ts.at("sym", closer):
        names.append(ts.expect("ident").text)
        if not ts.accept("sym", ","):
            break
    return names


def verify_laws(L: Lattice, limit: int = 64) -> list:
    """Exhaustive check of the order/meet/join laws plus absorption and
    idempotence; returns human-readable violation strings (empty = lattice).
    Universes above the limit are only spot-checked for bounds."""
    out = []
    elems = L.elements()
    if len(elems) > limit:
        for x in elems:
            if not (L.leq(L.bot, x) and L.leq(x, L.top)):
                out.append(f"bounds violated at {element_text(x)}")
        return out
    for x in elems:
        if L.meet(x, x) != x:
            out.append(f"meet not idempotent at {element_text(x)}")
        if L.join(x, x) != x:
            out.append(f"join not idempotent at {element_text(x)}")
        if not (L.leq(L.bot, x) and L.leq(x, L.top)):
            out.append(f"bounds violated at {element_text(x)}")
    for x in elems:
        for y in elems:
            m, j = L.meet(x, y), L.join(x, y)
            if m != L.meet(y, x) or j != L.join(y, x):
                out.append(f"commutativity fails at ({element_text(x)}, {element_text(y)})")
            if L.meet(x, L.join(x, y)) != x or L.join(x, L.meet(x, y)) != x:
                out.append(f"absorption fails at ({element_text(x)}, {element_text(y)})")
            if L.leq(x, y) != (m == x):
                out.append(f"order/meet disagree at ({element_text(x)}, {element_text(y)})")
            if not (L.leq(m, x) and L.leq(m, y) and L.leq(x, j) and L.leq(y, j)):
                out.append(f"bound property fails at ({element_text(x)}, {element_text(y)})")
    for x in elems:
        for y in elems:
            for z in elems:
                if L.meet(L.meet(x, y), z) != L.meet(x, L.meet(y, z)):
                    out.append("meet associativity fails at "
                               f"({element_text(x)}, {element_text(y)}, {element_text(z)})")
                if L.join(L.join(x, y), z) != L.join(x, L.join(y, z)):
                    out.append("join associativity fails at "
                               f"({element_text(x)}, {element_text(y)}, {element_text(z)})")
                if L.leq(z, x) and L.leq(z, y) and not L.leq(z, L.meet(x, y)):
                    out.append(f"meet is not the glb at ({element_text(x)}, {element_text(y)})")
                if L.leq(x, z) and L.leq(y, z) and not L.leq(L.join(x, y), z):
                    out.append(f"join is not the lub at ({element_text(x)}, {element_text(y)})")
    return out


def element_text(x) -> str:
    """Stable printable form for a lattice element."""
    if x is True:
        return "True"
    if x is False:
        return "False"
    if x is INF:
        return "inf"
    if isinstance(x, frozenset):
        return "{" + ",".join(sorted(x)) + "}"
    if isinstance(x, tuple):
        return "(" + ", ".join(element_text(v) for v in x) + ")"
    return str(x)


def parse_element(lat: Lattice, text: str):
    """Look up a universe element by its printed form."""
    wanted = text.strip().replace(" ", "")
    for x in lat.elements():
        if element_text(x).replace(" ", "") == wanted:
            return x
    raise ForeignElement(f"{text!r} is not an element of {lat.tag}")
