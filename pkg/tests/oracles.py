"""Independent reference checkers the main pipeline is validated against.

Everything here works on plain state sets with explicit fixpoint iteration,
sharing no code with the lattice-valued evaluator.
"""

from procval.proc import Label


def lts_tables(lts):
    """(states, succ) where succ[action][i] is the list of j with an edge
    i -> j labelled by exactly the singleton {action}."""
    succ = {}
    for src, lab, dst in lts.edges:
        if len(lab.counts) == 1 and lab.counts[0][1] == 1:
            succ.setdefault(lab.counts[0][0], {}).setdefault(src, []).append(dst)
    return list(range(len(lts.states))), succ


def set_check(formula, lts, atom_sets, env=None):
    """Classic set-based checker for boolean formulas over singleton labels.

    `formula` is a pel AST restricted to Atom/Var/And/Or/Box/Diamond and
    variable-left-side Lfp/Gfp; atoms and the result are state-index sets.
    """
    from procval import pel

    states, succ = lts_tables(lts)
    env = dict(env or {})

    def ev(f, env):
        if isinstance(f, pel.Atom):
            return frozenset(atom_sets[f.name])
        if isinstance(f, pel.Var):
            return frozenset(env[f.name])
        if isinstance(f, pel.And):
            return ev(f.left, env) & ev(f.right, env)
        if isinstance(f, pel.Or):
            return ev(f.left, env) | ev(f.right, env)
        if isinstance(f, pel.Box):
            action = _singleton(f.label)
            body = ev(f.body, env)
            table = succ.get(action, {})
            return frozenset(s for s in states
                             if all(q in body for q in table.get(s, [])))
        if isinstance(f, pel.Diamond):
            action = _singleton(f.label)
            body = ev(f.body, env)
            table = succ.get(action, {})
            return frozenset(s for s in states
                             if any(q in body for q in table.get(s, [])))
        if isinstance(f, (pel.Lfp, pel.Gfp)):
            assert f.lhs == pel.Var(f.var), "oracle handles plain fixpoints only"
            cur = frozenset() if isinstance(f, pel.Lfp) else frozenset(states)
            while True:
                env2 = dict(env)
                env2[f.var] = cur
                nxt = ev(f.rhs, env2)
                if nxt == cur:
                    return cur
                cur = nxt
        raise TypeError(f"oracle cannot handle {f!r}")

    return ev(formula, env)


def _singleton(label: Label) -> str:
    assert len(label.counts) == 1 and label.counts[0][1] == 1
    return label.counts[0][0]


def ctl_ex(lts, phi_set, alphabet):
    _, succ = lts_tables(lts)
    out = set()
    for a in alphabet:
        for s, qs in succ.get(a, {}).items():
            if any(q in phi_set for q in qs):
                out.add(s)
    return frozenset(out)


def ctl_eg(lts, phi_set, alphabet):
    """Greatest S with S = phi and (some action whose successors all stay in
    S; an action with no successors counts vacuously)."""
    states, succ = lts_tables(lts)
    cur = frozenset(states)
    while True:
        nxt = frozenset(
            s for s in cur
            if s in phi_set and any(
                all(q in cur for q in succ.get(a, {}).get(s, []))
                for a in alphabet))
        if nxt == cur:
            return cur
        cur = nxt


def ctl_eu(lts, phi1_set, phi2_set, alphabet):
    states, succ = lts_tables(lts)
    cur = frozenset()
    while True:
        nxt = frozenset(
            s for s in states
            if s in phi2_set or (s in phi1_set and any(
                q in cur for a in alphabet for q in succ.get(a, {}).get(s, []))))
        if nxt == cur:
            return cur
        cur = nxt
