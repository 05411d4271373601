"""Consecutive-repeat detection over plan token sequences and loop rolling.

A token sequence is any sequence of strings (a plain ``str`` works for
single-character tokens). Repeats are found with a suffix array, a
non-overlapping LCP array and the consecutive-occurrence filter; the rolled
plan replaces each run of repeats by a loop block.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .model import EnrichedOperator, Loop, PlanElement


def suffix_array(s: Sequence[str]) -> list[int]:
    """Suffix array by prefix doubling, O(n log^2 n)."""
    n = len(s)
    if n == 0:
        return []
    alphabet = {t: r for r, t in enumerate(sorted(set(s)))}
    rank = [alphabet[t] for t in s]
    sa = list(range(n))
    k = 1
    while True:
        key = lambda i: (rank[i], rank[i + k] if i + k < n else -1)  # noqa: E731
        sa.sort(key=key)
        new = [0] * n
        for a, b in zip(sa, sa[1:]):
            new[b] = new[a] + (key(a) != key(b))
        rank = new
        if rank[sa[-1]] == n - 1 or k >= n:
            return sa
        k *= 2


def nlcp_pair(a: Sequence[str], b: Sequence[str]) -> int:
    """Common prefix length, capped so the two occurrences cannot overlap."""
    cap = min(len(a), len(b), abs(len(a) - len(b)))
    for i in range(cap):
        if a[i] != b[i]:
            return i
    return cap


def lcp_array(s: Sequence[str], sa: Sequence[int]) -> list[int]:
    """Kasai et al. LCP between lexicographically adjacent suffixes; lcp[0] = 0."""
    n = len(s)
    rank = [0] * n
    for i, p in enumerate(sa):
        rank[p] = i
    lcp = [0] * n
    h = 0
    for p in range(n):
        r = rank[p]
        if r == 0:
            h = 0
            continue
        q = sa[r - 1]
        while p + h < n and q + h < n and s[p + h] == s[q + h]:
            h += 1
        lcp[r] = h
        if h:
            h -= 1
    return lcp


def nlcp_array(s: Sequence[str], sa: Optional[Sequence[int]] = None) -> list[int]:
    # the overlap cap for suffixes starting at p and q is exactly |p - q|
    sa = suffix_array(s) if sa is None else sa
    if not sa:
        return []
    lcp = lcp_array(s, sa)
    return [0] + [min(lcp[i], abs(sa[i] - sa[i - 1])) for i in range(1, len(sa))]


@dataclass(frozen=True)
class CnlcpEntry:
    pattern: tuple[str, ...]
    starts: tuple[int, ...]

    def __post_init__(self):
        L = len(self.pattern)
        if any(b - a != L for a, b in zip(self.starts, self.starts[1:])):
            raise ValueError(f"starts {self.starts} are not spaced by {L}")

    @property
    def span(self) -> tuple[int, int]:
        return self.starts[0], self.starts[-1] + len(self.pattern)

    def label(self) -> str:
        return "".join(self.pattern) if all(len(t) == 1 for t in self.pattern) else " ".join(self.pattern)


def admitted_pairs(s: Sequence[str], sa=None, nlcp=None) -> list[tuple[int, int]]:
    """(p, length) for every index where NLCP equals the SA gap, p the smaller start."""
    sa = suffix_array(s) if sa is None else sa
    nlcp = nlcp_array(s, sa) if nlcp is None else nlcp
    out = []
    for i in range(1, len(sa)):
        L = nlcp[i]
        if L and abs(sa[i] - sa[i - 1]) == L:
            out.append((min(sa[i], sa[i - 1]), L))
    return out


def runs_from_pairs(s: Sequence[str], pairs) -> list[CnlcpEntry]:
    """Chain adjacent-occurrence pairs into runs, then drop rotated shadows.

    A pair (p, L) says s[p:p+L] == s[p+L:p+2L]. Pairs with the same pattern
    that share an occurrence chain into one run whose starts list every
    occurrence. A run is dropped when another run of the same pattern length
    starts earlier and covers it (``ca`` inside ``acacac``).
    """
    edges: dict[tuple, set[int]] = {}
    for p, L in pairs:
        edges.setdefault((tuple(s[p:p + L]), L), set()).add(p)
    runs = []
    for (pattern, L), ps in edges.items():
        for p in sorted(ps):
            if p - L in ps:
                continue  # not the head of a chain
            starts = [p]
            while starts[-1] in ps:
                starts.append(starts[-1] + L)
            runs.append(CnlcpEntry(pattern, tuple(starts)))
    kept = []
    for r in runs:
        a, b = r.span
        shadowed = any(o is not r and len(o.pattern) == len(r.pattern)
                       and o.starts[0] < a and o.span[1] >= b for o in runs)
        if not shadowed:
            kept.append(r)
    kept.sort(key=lambda r: (r.starts[0], len(r.pattern)))
    return kept


def cnlcp(s: Sequence[str]) -> list[CnlcpEntry]:
    return runs_from_pairs(s, admitted_pairs(s))


def cnlcp_table(s: Sequence[str]) -> dict[str, list[int]]:
    return {e.label(): list(e.starts) for e in cnlcp(s)}


# ---------------------------------------------------------------- rolling

@dataclass(frozen=True)
class Segment:
    start: int
    body: int  # body length in tokens
    iterations: int = 1  # 1 means a single element

    @property
    def end(self) -> int:
        return self.start + self.body * self.iterations

    @property
    def is_loop(self) -> bool:
        return self.iterations > 1


def segment(tokens: Sequence[str]) -> list[Segment]:
    """Split `tokens` into singles and loop runs.

    Longest pattern first, ties to the leftmost run, repeated until no run of
    plain tokens remains. Rolled runs become opaque tokens, so loops never nest.
    """
    items = [Segment(i, 1) for i in range(len(tokens))]
    current = [str(t) for t in tokens]
    n_loops = 0
    while True:
        best = None
        for e in cnlcp(current):
            if any(t.startswith("\x00loop") for t in e.pattern):
                continue
            if best is None or (-len(e.pattern), e.starts[0]) < (-len(best.pattern), best.starts[0]):
                best = e
        if best is None:
            return items
        a, b = best.span
        first = items[a]
        rolled = Segment(first.start, items[a + len(best.pattern) - 1].end - first.start, len(best.starts))
        n_loops += 1
        items[a:b] = [rolled]
        current[a:b] = [f"\x00loop{n_loops}"]


def rolled_string(tokens: Sequence[str]) -> str:
    """Render e.g. ``ab(ac)*de(df)*gh``."""
    out = []
    for seg in segment(tokens):
        body = "".join(str(t) for t in tokens[seg.start:seg.start + seg.body])
        out.append(f"({body})*" if seg.is_loop else body)
    return "".join(out)


def _merge_iterations(iters: list[list[EnrichedOperator]], fresh,
                      role_var: Optional[dict] = None) -> list[EnrichedOperator]:
    """Unify positional roles across iterations and intersect features.

    `role_var` collects column-of-terms -> loop variable.
    """
    L = len(iters[0])
    role_var = {} if role_var is None else role_var
    subs = [dict() for _ in iters]
    for j in range(L):
        for a in range(iters[0][j].head.arity):
            column = tuple(it[j].head.args[a] for it in iters)
            if len(set(column)) == 1:
                continue
            if column not in role_var:
                role_var[column] = fresh()
            for k, term in enumerate(column):
                subs[k].setdefault(term, role_var[column])
    body = []
    for j in range(L):
        renamed = [it[j].rename(subs[k]) for k, it in enumerate(iters)]
        common = set(renamed[0].features)
        for r in renamed[1:]:
            common &= set(r.features)
        body.append(EnrichedOperator(renamed[0].head,
                                     tuple(f for f in renamed[0].features if f in common)))
    return body


def default_tokens(ops: Sequence[EnrichedOperator]) -> list[str]:
    return [f"{op.head.predicate}/{op.head.arity}" for op in ops]


def detect_and_roll(ops: Sequence[EnrichedOperator],
                    tokens: Optional[Sequence[str]] = None,
                    bindings: Optional[dict] = None) -> list[PlanElement]:
    """Roll consecutive repeats of `ops` into loop blocks.

    `tokens` decides which operators count as "the same step"; by default an
    operator's name and arity. If `bindings` is given it receives, for every
    loop variable, the tuple of original terms it stands for (one per iteration).
    """
    ops = list(ops)
    tokens = default_tokens(ops) if tokens is None else list(tokens)
    if len(tokens) != len(ops):
        raise ValueError("one token per operator expected")
    used = {v for op in ops for v in op.head.variables()}
    used |= {v for op in ops for f in op.features for v in f.atom.variables()}
    counter = [0]

    def fresh() -> str:
        while True:
            counter[0] += 1
            name = f"?l{counter[0]}"
            if name not in used:
                used.add(name)
                return name

    out: list[PlanElement] = []
    for seg in segment(tokens):
        if not seg.is_loop:
            out.append(ops[seg.start])
            continue
        iters = [ops[seg.start + k * seg.body: seg.start + (k + 1) * seg.body]
                 for k in range(seg.iterations)]
        columns: dict = {}
        body = _merge_iterations(iters, fresh, columns)
        if bindings is not None:
            bindings.update({v: col for col, v in columns.items()})
        out.append(Loop(tuple(body), seg.iterations, tuple(tokens[seg.start:seg.start + seg.body])))
    return out


def unroll_tokens(elements: Sequence[PlanElement], tokens_of=None) -> list[str]:
    """Token sequence of a rolled plan with every loop expanded."""
    out = []
    for el in elements:
        if isinstance(el, Loop):
            out.extend(list(el.tokens) * el.iterations)
        else:
            out.extend(tokens_of([el]) if tokens_of else default_tokens([el]))
    return out


def format_tables(s: Sequence[str]) -> str:
    """SA/NLCP table followed by the CNLCP table, as plain text."""
    sa = suffix_array(s)
    nl = nlcp_array(s, sa)
    sep = "" if all(len(t) == 1 for t in s) else " "
    lines = [f"{'i':>3}  {'SA[i]':>5}  {'NLCP[i]':>7}  suffix"]
    for i, (p, v) in enumerate(zip(sa, nl)):
        lines.append(f"{i:>3}  {p:>5}  {v:>7}  {sep.join(s[p:])}")
    lines.append("")
    lines.append(f"{'pattern':<12} starts")
    for e in cnlcp(s):
        lines.append(f"{e.label():<12} [{', '.join(map(str, e.starts))}]")
    return "\n".join(lines) + "\n"
