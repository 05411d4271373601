"""Logical structures, canonical abstraction and the embedding test.

A structure is a universe of named nodes plus a sparse interpretation mapping
``(temporal, predicate, node-tuple)`` to a truth value; absent entries are 0.
Two-valued structures come from key-property sets, three-valued ones from
canonical abstraction and are what an activity schema keeps as its scope.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from math import prod
from typing import Iterable, Mapping, Optional, Sequence

from .model import AbstractionHierarchy, KeyProperty, Temporal, TaskProblem


class Truth(Enum):
    ZERO = 0
    HALF = 0.5
    ONE = 1

    def __str__(self) -> str:
        return {0: "0", 0.5: "1/2", 1: "1"}[self.value]


def kleene_join(a: Truth, b: Truth) -> Truth:
    return a if a is b else Truth.HALF


CanonicalName = frozenset  # of (Temporal, predicate) pairs
Key = tuple  # (Temporal, predicate, tuple of node names)


@dataclass(frozen=True, order=True)
class Node:
    name: str
    summary: bool = False
    tag: Optional[int] = None  # task-argument position for protected nodes
    canonical_name: CanonicalName = field(default=frozenset(), compare=False)


@dataclass(frozen=True)
class Structure:
    valence: int
    nodes: tuple[Node, ...]
    interp: Mapping[Key, Truth]

    def __post_init__(self):
        interp = {k: v for k, v in self.interp.items() if v is not Truth.ZERO}
        names = {n.name for n in self.nodes}
        for (_, _, args), v in interp.items():
            missing = set(args) - names
            if missing:
                raise ValueError(f"interpretation mentions unknown nodes {sorted(missing)}")
            if self.valence == 2 and v is Truth.HALF:
                raise ValueError("two-valued structure with an indefinite entry")
        if self.valence == 2 and any(n.summary for n in self.nodes):
            raise ValueError("two-valued structure with a summary node")
        canon = defaultdict(set)
        for (t, p, args), v in interp.items():
            if len(args) == 1 and v is Truth.ONE:
                canon[args[0]].add((t, p))
        nodes = tuple(sorted(
            Node(n.name, n.summary, n.tag, frozenset(canon[n.name])) for n in self.nodes))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "interp", interp)

    @property
    def universe(self) -> list[str]:
        return [n.name for n in self.nodes]

    def node(self, name: str) -> Node:
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)

    def value(self, temporal, predicate: str, args: Sequence[str]) -> Truth:
        return self.interp.get((Temporal(temporal), predicate, tuple(args)), Truth.ZERO)

    def summaries(self) -> list[Node]:
        return [n for n in self.nodes if n.summary]

    def predicates(self) -> set[tuple[Temporal, str, int]]:
        return {(t, p, len(a)) for (t, p, a) in self.interp}


def struct_of_keyprops(keys: Iterable[KeyProperty], protected: Sequence[str] = ()) -> Structure:
    """Two-valued structure whose universe is every term mentioned in `keys`."""
    interp = {}
    terms: dict[str, None] = {}
    for k in keys:
        interp[(k.temporal, k.atom.predicate, k.atom.args)] = Truth.ONE
        for t in k.atom.args:
            terms[t] = None
    tags = {}
    for i, t in enumerate(protected, start=1):
        tags.setdefault(t, i)
    nodes = tuple(Node(t, tag=tags.get(t)) for t in terms)
    return Structure(2, nodes, interp)


def canonical_name(u: str, s: Structure) -> CanonicalName:
    return s.node(u).canonical_name


def node_key(n: Node) -> tuple:
    return (n.canonical_name, n.tag)


def _derived_name(canon: CanonicalName) -> str:
    parts = sorted(p if t is Temporal.STATIC else f"{t.value}.{p}" for t, p in canon)
    return "?" + ("-".join(parts) if parts else "object")


def canonical_abstraction(c: Structure) -> Structure:
    """Merge nodes sharing a canonical name; protected nodes stay singletons."""
    return abstraction_with_map(c)[0]


def abstraction_with_map(c: Structure) -> tuple[Structure, dict[str, str]]:
    """Canonical abstraction plus the concrete-to-abstract node map."""
    if c.valence != 2:
        raise ValueError("canonical abstraction expects a two-valued structure")
    groups: dict[tuple, list[str]] = {}
    for n in c.nodes:
        groups.setdefault(node_key(n), []).append(n.name)

    names: dict[tuple, str] = {}
    used: set[str] = set()
    # protected nodes keep their own names; claim them first
    for key, members in groups.items():
        if key[1] is not None:
            names[key] = members[0]
            used.add(members[0])
    for key in sorted((k for k in groups if k[1] is None), key=lambda k: _derived_name(k[0])):
        base = name = _derived_name(key[0])
        i = 2
        while name in used:
            name, i = f"{base}-{i}", i + 1
        names[key] = name
        used.add(name)

    to_abs = {}
    for key, members in groups.items():
        for m in members:
            to_abs[m] = names[key]
    size = {names[k]: len(v) for k, v in groups.items()}

    ones: dict[Key, int] = defaultdict(int)
    for (t, p, args), v in c.interp.items():
        if v is Truth.ONE:
            ones[(t, p, tuple(to_abs[a] for a in args))] += 1
    interp = {}
    for key, count in ones.items():
        total = prod(size[a] for a in key[2])
        interp[key] = Truth.ONE if count == total else Truth.HALF
    nodes = tuple(Node(names[k], len(v) >= 2, k[1]) for k, v in groups.items())
    return Structure(3, nodes, interp), to_abs


@dataclass(frozen=True)
class Embedding:
    holds: bool
    mapping: Optional[dict] = None
    violation: Optional[str] = None

    def __bool__(self) -> bool:
        return self.holds


def embeds(c: Structure, s: Structure) -> Embedding:
    """Decide whether `c` is embedded in `s` using the canonical-name map.

    `s` is assumed to be in the image of canonical abstraction, so the only
    candidate map sends each concrete node to the abstract node with the same
    canonical name (and task tag).
    """
    target: dict[tuple, str] = {}
    for n in s.nodes:
        if node_key(n) in target:
            raise ValueError(f"abstract structure has two nodes named {sorted(map(str, n.canonical_name))}")
        target[node_key(n)] = n.name
    f = {}
    for n in c.nodes:
        image = target.get(node_key(n))
        if image is None:
            return Embedding(False, violation=f"no abstract node for {n.name} "
                                              f"{sorted(f'{t}({p})' for t, p in n.canonical_name)}")
        f[n.name] = image
    hit = set(f.values())
    for n in s.nodes:
        if n.name not in hit:
            return Embedding(False, violation=f"abstract node {n.name} has no preimage")

    pre_size = defaultdict(int)
    for img in f.values():
        pre_size[img] += 1
    ones: dict[Key, int] = defaultdict(int)
    for (t, p, args), v in c.interp.items():
        if v is not Truth.ONE:
            continue
        key = (t, p, tuple(map(f.__getitem__, args)))
        sv = s.interp.get(key, Truth.ZERO)
        if sv is Truth.ZERO:
            return Embedding(False, violation=f"({t} ({p} {' '.join(args)})) is 1 but "
                                              f"abstract value is 0")
        ones[key] += 1
    for key, sv in s.interp.items():
        if sv is not Truth.ONE:
            continue
        need = prod(pre_size[a] for a in key[2])
        if ones.get(key, 0) != need:
            t, p, args = key
            return Embedding(False, violation=f"({t} ({p} {' '.join(args)})) is definitely 1 "
                                              f"in the scope but not for every concrete tuple")
    return Embedding(True, mapping=f)


def abstract_problem_keys(problem: TaskProblem, hierarchy: AbstractionHierarchy) -> list[KeyProperty]:
    keys = {}
    for k in problem.key_properties():
        parent = hierarchy.parent_predicate(k.atom)
        if parent is not None:
            keys[KeyProperty(k.temporal, parent)] = None
    return list(keys)


def problem_to_struct(problem: TaskProblem, hierarchy: AbstractionHierarchy) -> Structure:
    return struct_of_keyprops(abstract_problem_keys(problem, hierarchy), problem.task.args)


def structure_key(s: Structure) -> tuple:
    """Isomorphism-invariant fingerprint; node identity is (canonical name, tag)."""
    ident = {n.name: (tuple(sorted((t.value, p) for t, p in n.canonical_name)), n.tag or 0)
             for n in s.nodes}
    nodes = tuple(sorted((ident[n.name], n.summary) for n in s.nodes))
    entries = tuple(sorted((t.value, p, tuple(ident[a] for a in args), v.value)
                           for (t, p, args), v in s.interp.items()))
    return (s.valence, nodes, entries)


def scope_graph(s: Structure) -> dict:
    """Node and edge records for rendering a structure (JSON-friendly)."""
    return {
        "valence": s.valence,
        "nodes": [{"name": n.name, "summary": n.summary, "tag": n.tag,
                   "canonical_name": sorted(f"{t.value}({p})" for t, p in n.canonical_name)}
                  for n in s.nodes],
        "edges": [{"temporal": t.value, "predicate": p, "args": list(args), "value": str(v)}
                  for (t, p, args), v in sorted(s.interp.items(), key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2]))],
    }


def to_json(s: Structure) -> str:
    return json.dumps(scope_graph(s), indent=2)


def to_dot(s: Structure) -> str:
    """Graphviz rendering: summary nodes double-circled, 1/2 edges dashed."""
    lines = ["digraph scope {"]
    for n in s.nodes:
        label = n.name + "\\n" + ",".join(sorted(f"{t.value}({p})" for t, p in n.canonical_name))
        shape = "doublecircle" if n.summary else "circle"
        lines.append(f'  "{n.name}" [shape={shape}, label="{label}"];')
    for (t, p, args), v in sorted(s.interp.items(), key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2])):
        if len(args) < 2:
            continue
        style = "dashed" if v is Truth.HALF else "solid"
        for a, b in zip(args, args[1:]):
            lines.append(f'  "{a}" -> "{b}" [label="{t.value}({p})", style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
