"""State-transition semantics shared by the planners and the generators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from .model import Atom, Operator, PlanningDomain, TaskProblem

State = frozenset  # of ground Atom


def applicable(op: Operator, static: frozenset, state: frozenset) -> bool:
    """`op` must already be ground."""
    if any(a not in static for a in op.static_pre):
        return False
    for lit in op.pre:
        if (lit.atom in state) != lit.positive:
            return False
    return True


def apply(op: Operator, state: frozenset) -> frozenset:
    dels = {l.atom for l in op.eff if not l.positive}
    adds = {l.atom for l in op.eff if l.positive}
    return frozenset((state - dels) | adds)


def ground_action(domain: PlanningDomain, action: Atom) -> Operator:
    op = domain.operator(action.predicate)
    if op.head.arity != action.arity:
        raise ValueError(f"{action} does not match {op.head}")
    return op.ground(action.args)


@dataclass(frozen=True)
class Validation:
    ok: bool
    index: Optional[int] = None  # failing step; len(plan) means the goal check failed
    reason: str = ""
    final_state: Optional[frozenset] = None

    def __bool__(self) -> bool:
        return self.ok


def simulate(domain: PlanningDomain, static: Iterable[Atom], init: Iterable[Atom],
             plan: Sequence[Atom]) -> tuple[frozenset, Optional[int], str]:
    """Run `plan`; returns (state, failing index or None, reason)."""
    static = frozenset(static)
    state = frozenset(init)
    for i, a in enumerate(plan):
        try:
            op = ground_action(domain, a)
        except (KeyError, ValueError) as exc:
            return state, i, f"unknown action {a}: {exc}"
        missing = [s for s in op.static_pre if s not in static]
        if missing:
            return state, i, f"{a}: static precondition {missing[0]} does not hold"
        for lit in op.pre:
            if (lit.atom in state) != lit.positive:
                return state, i, f"{a}: precondition {lit} does not hold"
        state = apply(op, state)
    return state, None, ""


def validate_plan(problem: TaskProblem, plan: Sequence[Atom], domain: PlanningDomain) -> Validation:
    state, idx, reason = simulate(domain, problem.static, problem.init, plan)
    if idx is not None:
        return Validation(False, idx, reason, state)
    missing = [g for g in problem.goal if g not in state]
    if missing:
        return Validation(False, len(plan), f"goal {missing[0]} not reached", state)
    return Validation(True, None, "", state)


def objects_by_type(static: Iterable[Atom]) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for a in static:
        if a.arity == 1:
            out.setdefault(a.predicate, []).append(a.args[0])
    return out


def groundings(op: Operator, objects: Sequence[str], static: frozenset,
               state: frozenset, fixed: Optional[dict] = None) -> Iterator[tuple[str, ...]]:
    """Argument tuples under which `op` is applicable, in lexicographic order.

    Parameters are bound one at a time and static unary/binary facts prune early,
    which keeps grounding cheap on the domains shipped here.
    """
    params = op.head.args
    fixed = dict(fixed or {})
    checks = list(op.static_pre) + [l.atom for l in op.pre if l.positive]
    by_param = {p: [a for a in checks if p in a.args] for p in params}
    objs = sorted(objects)

    def consistent(b: dict, p: str) -> bool:
        for a in by_param[p]:
            if all(x in b or x not in params for x in a.args):
                g = a.substitute(b)
                if g not in static and g not in state:
                    return False
        return True

    def rec(i: int, b: dict):
        if i == len(params):
            g = op.ground(tuple(b[p] for p in params))
            if applicable(g, static, state):
                yield tuple(b[p] for p in params)
            return
        p = params[i]
        if p in b:
            if consistent(b, p):
                yield from rec(i + 1, b)
            return
        for o in objs:
            b[p] = o
            if consistent(b, p):
                yield from rec(i + 1, b)
            del b[p]

    yield from rec(0, fixed)
