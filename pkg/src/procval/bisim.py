"""Bisimulation checking: partition refinement, finite approximants, and the
two-coordinate formula encoding cross-checked against refinement.

Every state also has an implicit empty-labelled self loop; it is folded into
the refinement signatures so weak matching may answer a silent move by
standing still.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lattice as lat
from .pel import And, Box, Diamond, Evaluator, Gfp, StateSpace, Var, and_all
from .proc import TAU, LTS, Label, weak_saturate


@dataclass
class PartitionRelation:
    """Equivalence on LTS states as index blocks covering the universe."""

    universe: int
    blocks: tuple     # tuple of sorted index tuples, disjoint cover

    def block_of(self, i: int) -> int:
        for b, members in enumerate(self.blocks):
            if i in members:
                return b
        raise KeyError(i)

    def same_block(self, i: int, j: int) -> bool:
        return self.block_of(i) == self.block_of(j)

    def as_pairs(self):
        out = set()
        for members in self.blocks:
            for i in members:
                for j in members:
                    out.add((i, j))
        return out


def _signatures(lts: LTS, block_id: list) -> list:
    outgoing = [[] for _ in lts.states]
    for src, lab, dst in lts.edges:
        outgoing[src].append((lab, dst))
    sigs = []
    for i in range(len(lts.states)):
        sig = {(lab.counts, block_id[dst]) for lab, dst in outgoing[i]}
        sig.add(((), block_id[i]))  # implicit empty self loop
        sigs.append(frozenset(sig))
    return sigs


def _refine_to_stability(lts: LTS, rounds: int | None = None) -> list:
    """Block ids after refinement; all states start equivalent.  With a round
    limit this computes the finite approximant instead of the fixpoint."""
    n = len(lts.states)
    block_id = [0] * n
    done = 0
    while rounds is None or done < rounds:
        sigs = _signatures(lts, block_id)
        canon = {}
        renumbered = []
        for i in range(n):
            key = (block_id[i], sigs[i])
            if key not in canon:
                canon[key] = len(canon)
            renumbered.append(canon[key])
        if renumbered == block_id:
            break
        block_id = renumbered
        done += 1
    return block_id


def _as_partition(block_id: list) -> PartitionRelation:
    groups: dict = {}
    for i, b in enumerate(block_id):
        groups.setdefault(b, []).append(i)
    blocks = tuple(tuple(sorted(g)) for _, g in sorted(groups.items()))
    return PartitionRelation(len(block_id), blocks)


def strong_partition(lts: LTS) -> PartitionRelation:
    """The largest strong bisimulation, as a partition of the state set."""
    return _as_partition(_refine_to_stability(lts))


def strong_bisimilar(lts: LTS, p: int, q: int):
    """(answer, witness partition); the witness is the largest bisimulation."""
    part = strong_partition(lts)
    return part.same_block(p, q), part


def weak_partition(lts: LTS) -> PartitionRelation:
    return _as_partition(_refine_to_stability(weak_saturate(lts)))


def weak_bisimilar(lts: LTS, p: int, q: int) -> bool:
    return weak_partition(lts).same_block(p, q)


def strong_approx(k: int, lts: LTS, p: int, q: int) -> bool:
    """Depth-k matching: everything is equivalent at depth 0, and each round
    requires transitions to be answered into the previous approximant."""
    if k < 0:
        raise ValueError("approximant depth must be a natural number")
    block_id = _refine_to_stability(lts, rounds=k)
    return block_id[p] == block_id[q]


def weak_approx(k: int, lts: LTS, p: int, q: int) -> bool:
    if k < 0:
        raise ValueError("approximant depth must be a natural number")
    block_id = _refine_to_stability(weak_saturate(lts), rounds=k)
    return block_id[p] == block_id[q]


def distinguishing_depth(lts: LTS, p: int, q: int) -> int | None:
    """Smallest k at which the pair separates, or None if bisimilar."""
    if strong_bisimilar(lts, p, q)[0]:
        return None
    k = 1
    while True:
        if not strong_approx(k, lts, p, q):
            return k
        k += 1


def check_is_bisimulation(lts: LTS, part: PartitionRelation) -> bool:
    """Direct transfer-condition audit of a partition, edge by edge."""
    outgoing = [[] for _ in lts.states]
    for src, lab, dst in lts.edges:
        outgoing[src].append((lab, dst))
    for members in part.blocks:
        for p in members:
            for q in members:
                for lab, p2 in outgoing[p]:
                    if not any(lab == lab2 and part.same_block(p2, q2)
                               for lab2, q2 in outgoing[q]):
                        return False
    return True


def bisim_formula(alphabet) -> Gfp:
    """Two-coordinate mutual-matching fixpoint over a finite alphabet."""
    actions = sorted(set(alphabet) | {TAU})
    parts = []
    for a in actions:
        parts.append(And(Box(Label.single(a), 1, Diamond(Label.single(a), 2, Var("F"))),
                         Box(Label.single(a), 2, Diamond(Label.single(a), 1, Var("F")))))
    return Gfp("F", Var("F"), and_all(parts))


def bisim_table_via_pel(lts: LTS, alphabet=None):
    """Value function of the matching fixpoint over all state pairs."""
    if alphabet is None:
        alphabet = lts.spec.alphabet
    space = StateSpace.from_lts(lts)
    ev = Evaluator([space, space], lat.bool_lattice(), atoms={})
    space.ensure(lts.states[lts.initial])
    return ev.value_function(bisim_formula(alphabet))


def bisim_via_pel(lts: LTS, p: int, q: int, alphabet=None) -> bool:
    """Strong bisimilarity decided by evaluating the matching fixpoint over
    the boolean lattice with both coordinates ranging over the same system.

    Sound for systems whose labels are singletons (the modalities match
    single-action labels exactly).
    """
    return bool(bisim_table_via_pel(lts, alphabet).table[(p, q)])
