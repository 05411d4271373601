"""Bundled domains and the stacking-blocks problem/experience generators.

Problem classes (all share the goal "blue blocks at the bottom, red on top"
on ``pile1``):

1. every block on the table;
2. one pile ``pile0``: reds at the bottom, blues on top;
3. one pile, alternating colours, blue at the bottom;
4. one pile, alternating colours, red at the bottom.
"""
from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .model import AbstractionHierarchy, Atom, Experience, KeyProperty, PlanningDomain, TaskProblem, Temporal
from .parser import load
from .scope import canonical_abstraction, problem_to_struct, structure_key
from .sim import simulate

CLASSES = (1, 2, 3, 4)


def data_dir() -> Path:
    return Path(str(resources.files("ebpd") / "data"))


@dataclass(frozen=True)
class Bundle:
    concrete: PlanningDomain
    abstract: PlanningDomain
    hierarchy: AbstractionHierarchy


@lru_cache(maxsize=None)
def bundled(name: str = "stacking-blocks") -> Bundle:
    d = data_dir() / name
    return Bundle(load(d / "concrete.ebpd"), load(d / "abstract.ebpd"), load(d / "hierarchy.ebpd"))


def A(*parts: str) -> Atom:
    return Atom(parts[0], tuple(parts[1:]))


@dataclass
class _World:
    """Bookkeeping while a class script runs."""

    static: list
    init: list
    piles: dict  # pile -> list of things bottom-to-top (pallet first)
    table: list
    hoist_at: str
    plan: list


def _layout(cls: int, n: int, seed: Optional[int]):
    if cls not in CLASSES:
        raise ValueError(f"problem class must be one of {CLASSES}, got {cls}")
    if n < 1:
        raise ValueError("need at least one blue and one red block")
    names = [f"block{i}" for i in range(1, 2 * n + 1)]
    blues, reds = names[:n], names[n:]
    if seed is not None:
        rng = random.Random(seed)
        rng.shuffle(names)
        blues, reds = names[:n], names[n:]
        rng.shuffle(blues)
        rng.shuffle(reds)
    return blues, reds


def _setup(cls: int, blues: list, reds: list) -> _World:
    piles = ["pile1"] if cls == 1 else ["pile0", "pile1"]
    pallets = {p: p.replace("pile", "pallet") for p in piles}
    static = [A("table", "table1")] + [A("pile", p) for p in piles] + [A("pallet", x) for x in pallets.values()]
    for b in blues + reds:
        static.append(A("block", b))
        static.append(A("blue" if b in blues else "red", b))
    static += [A("location", "loc1"), A("hoist", "hoist1"), A("belong", "hoist1", "loc1"),
               A("attached", "table1", "loc1")] + [A("attached", p, "loc1") for p in piles]
    stacks = {p: [pallets[p]] for p in piles}
    table = []
    if cls == 1:
        table = list(blues + reds)
    else:
        if cls == 2:
            order = reds + blues
        else:
            first, second = (blues, reds) if cls == 3 else (reds, blues)
            order = [x for pair in zip(first, second) for x in pair]
        stacks["pile0"] += order
    init = [A("at", "hoist1", "table1" if cls == 1 else "pile0"), A("empty", "hoist1")]
    init += [A("ontable", b, "table1") for b in table]
    for p, things in stacks.items():
        init += [A("on", x, y) for y, x in zip(things, things[1:])]
        init.append(A("top", things[-1], p))
    return _World(static, init, stacks, table, init[0].args[1], [])


def _script(w: _World, blues: set) -> None:
    """Move every block to pile1, blues first, using the table as buffer."""

    def goto(place):
        if w.hoist_at != place:
            w.plan.append(A("move", "hoist1", w.hoist_at, place, "loc1"))
            w.hoist_at = place

    def put_on_target(b):
        goto("pile1")
        under = w.piles["pile1"][-1]
        w.plan.append(A("stack", "hoist1", b, under, "pile1", "loc1"))
        w.piles["pile1"].append(b)

    src = w.piles.get("pile0")
    buffered = []
    while src and len(src) > 1:
        goto("pile0")
        b, under = src[-1], src[-2]
        w.plan.append(A("unstack", "hoist1", b, under, "pile0", "loc1"))
        src.pop()
        blues_left = any(x in blues for x in src[1:])
        if b in blues or not blues_left:
            put_on_target(b)
        else:
            goto("table1")
            w.plan.append(A("putdown", "hoist1", b, "table1", "loc1"))
            w.table.append(b)
            buffered.append(b)
    if not src:
        ordered = [b for b in w.table if b in blues] + [b for b in w.table if b not in blues]
    else:
        ordered = list(buffered)
    for b in ordered:
        goto("table1")
        w.plan.append(A("pickup", "hoist1", b, "table1", "loc1"))
        w.table.remove(b)
        put_on_target(b)


def _run(cls: int, blues: list, reds: list):
    w = _setup(cls, blues, reds)
    static, init = list(w.static), list(w.init)
    _script(w, set(blues))
    domain = bundled().concrete
    final, idx, reason = simulate(domain, static, init, w.plan)
    if idx is not None:  # pragma: no cover - would be a script bug
        raise RuntimeError(f"class {cls} script failed at step {idx}: {reason}")
    return static, init, w.plan, final


def _objects(cls: int, blues, reds) -> tuple[str, ...]:
    piles = ("pile1",) if cls == 1 else ("pile0", "pile1")
    pallets = tuple(p.replace("pile", "pallet") for p in piles)
    blocks = sorted(blues + reds, key=lambda b: int(b[5:]))
    return ("table1",) + piles + pallets + tuple(blocks) + ("hoist1", "loc1")


def _goal(final: Iterable[Atom], static: Iterable[Atom], hierarchy: AbstractionHierarchy) -> tuple[Atom, ...]:
    static = set(static)
    return tuple(sorted(a for a in final if a not in static and hierarchy.parent_predicate(a) is not None))


def gen_stack(cls: int, blues: int, reds: Optional[int] = None, seed: Optional[int] = 0) -> TaskProblem:
    """A class-`cls` problem with `blues` blue and `reds` red blocks.

    The goal is the abstract-level part of the state the class script ends in:
    blues at the bottom of pile1, reds above, any source pile emptied down to
    its pallet.
    """
    reds = blues if reds is None else reds
    if blues != reds:
        raise ValueError("blue and red counts must be equal")
    b, r = _layout(cls, blues, seed)
    static, init, _, final = _run(cls, b, r)
    return TaskProblem(f"stack-c{cls}-n{blues}-s{seed}", bundled().concrete.name,
                       A("stack", "table1", "pile1"), _objects(cls, b, r),
                       tuple(static), tuple(init), _goal(final, static, bundled().hierarchy))


def gen_experience(cls: int, blues: int, reds: Optional[int] = None, seed: Optional[int] = None) -> Experience:
    """A solved class-`cls` problem: scripted plan plus static/init/end keys."""
    reds = blues if reds is None else reds
    if blues != reds:
        raise ValueError("blue and red counts must be equal")
    b, r = _layout(cls, blues, seed)
    static, init, plan, final = _run(cls, b, r)
    keys = ([KeyProperty(Temporal.STATIC, a) for a in static]
            + [KeyProperty(Temporal.INIT, a) for a in init]
            + [KeyProperty(Temporal.END, a) for a in sorted(final)])
    return Experience(f"stack-c{cls}-n{blues}", bundled().concrete.name, A("stack", "table1", "pile1"),
                      tuple(keys), tuple(plan), _objects(cls, b, r))


def experience_problem(e: Experience, hierarchy: Optional[AbstractionHierarchy] = None) -> TaskProblem:
    """Turn an experience back into the problem it solved."""
    hierarchy = hierarchy or bundled().hierarchy
    by = defaultdict(list)
    for k in e.key_properties:
        by[k.temporal].append(k.atom)
    return TaskProblem(e.name, e.domain, e.task, e.objects, tuple(by[Temporal.STATIC]),
                       tuple(by[Temporal.INIT]), _goal(by[Temporal.END], by[Temporal.STATIC], hierarchy))


def classify_problems(problems: Sequence[TaskProblem], hierarchy: AbstractionHierarchy) -> list[list[TaskProblem]]:
    """Group problems whose abstracted structures converge to the same scope."""
    cells: dict[tuple, list] = {}
    for p in problems:
        key = structure_key(canonical_abstraction(problem_to_struct(p, hierarchy)))
        cells.setdefault(key, []).append(p)
    return list(cells.values())


def rename_objects(p: TaskProblem, mapping: dict[str, str]) -> TaskProblem:
    sub = lambda atoms: tuple(a.substitute(mapping) for a in atoms)  # noqa: E731
    return TaskProblem(p.name, p.domain, p.task.substitute(mapping),
                       tuple(mapping.get(o, o) for o in p.objects),
                       sub(p.static), sub(p.init), sub(p.goal))
