"""Slow, definitional reference implementations used only by the tests."""
from __future__ import annotations

import itertools

from ebpd.scope import Structure, Truth


def naive_suffix_array(s):
    return sorted(range(len(s)), key=lambda i: list(s[i:]))


def brute_cnlcp(s):
    """Consecutive repeats seen by adjacent suffixes, grouped into runs.

    For every lexicographically adjacent pair of suffixes at p < q with gap
    d = q - p, the pair counts when s[p:q] == s[q:q+d]. Pairs of one pattern
    that share an occurrence form a run (union-find); a run is shadowed when a
    run of equal pattern length starts earlier and reaches at least as far.
    """
    s = list(s)
    n = len(s)
    sa = naive_suffix_array(s)
    pairs = set()
    for a, b in zip(sa, sa[1:]):
        p, q = min(a, b), max(a, b)
        d = q - p
        if q + d <= n and s[p:q] == s[q:q + d]:
            pairs.add((p, d))
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, d in pairs:
        key = tuple(s[p:p + d])
        for node in ((key, p), (key, p + d)):
            parent.setdefault(node, node)
        parent[find((key, p))] = find((key, p + d))
    groups = {}
    for node in parent:
        groups.setdefault(find(node), []).append(node[1])
    runs = []
    for root, starts in groups.items():
        runs.append((root[0], tuple(sorted(starts))))
    kept = set()
    for pat, st in runs:
        end = st[-1] + len(pat)
        if not any(len(p2) == len(pat) and s2[0] < st[0] and s2[-1] + len(p2) >= end for p2, s2 in runs):
            kept.add((pat, st))
    return kept


def brute_embeds(c: Structure, s: Structure) -> bool:
    """Exhaustive search for a surjection f: U -> U' that keeps task tags and
    satisfies the truth-value condition on every tuple of every predicate.

    Nodes are assigned one at a time; a partial map is abandoned as soon as a
    tuple whose nodes are all assigned violates the condition. This prunes but
    never skips a candidate that could succeed.
    """
    U = [n.name for n in c.nodes]
    V = [n.name for n in s.nodes]
    if len(V) > len(U):
        return False
    tag_c = {n.name: n.tag for n in c.nodes}
    tag_s = {n.name: n.tag for n in s.nodes}
    preds = sorted({(t, p, len(a)) for (t, p, a) in c.interp} | {(t, p, len(a)) for (t, p, a) in s.interp},
                   key=lambda x: (x[2], x[0].value, x[1]))

    def val(st, t, p, args):
        return st.interp.get((t, p, tuple(args)), Truth.ZERO)

    f = {}

    def consistent(k):
        # every tuple over U[:k+1] that mentions U[k]
        placed = U[:k + 1]
        for t, p, arity in preds:
            for tup in itertools.product(placed, repeat=arity):
                if U[k] not in tup:
                    continue
                sv = val(s, t, p, [f[u] for u in tup])
                if sv is not Truth.HALF and sv is not val(c, t, p, tup):
                    return False
        return True

    def rec(k):
        if k == len(U):
            return set(f.values()) == set(V)
        if len(set(f.values())) + (len(U) - k) < len(V):
            return False
        for v in V:
            if tag_s[v] != tag_c[U[k]]:
                continue
            f[U[k]] = v
            if consistent(k) and rec(k + 1):
                return True
            del f[U[k]]
        return False

    # zero-arity predicates are checked once up front
    for t, p, arity in preds:
        if arity == 0:
            sv = val(s, t, p, ())
            if sv is not Truth.HALF and sv is not val(c, t, p, ()):
                return False
    return rec(0)


def brute_features(keys, action, task):
    out = []
    for k in keys:
        shares_action = False
        shares_task = False
        for x in k.atom.args:
            for y in action.args:
                if x == y:
                    shares_action = True
            for y in task.args:
                if x == y:
                    shares_task = True
        if shares_action and shares_task:
            out.append(k)
    return out
