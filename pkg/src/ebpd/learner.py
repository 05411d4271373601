"""Learning an activity schema from a single solved experience.

generalize -> abstract -> features -> loop rolling -> scope.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from .loops import default_tokens, detect_and_roll
from .model import (AbstractionHierarchy, ActivitySchema, Atom, EnrichedOperator, Experience,
                    KeyProperty, Temporal, is_var)
from .scope import abstraction_with_map, struct_of_keyprops

log = logging.getLogger(__name__)


def generalization_map(e: Experience) -> dict[str, str]:
    """Constant -> ``?vN`` in first-occurrence order: plan, then task, keys, objects."""
    sub: dict[str, str] = {}

    def visit(terms):
        for t in terms:
            if not is_var(t) and t not in sub:
                sub[t] = f"?v{len(sub) + 1}"

    for a in e.plan:
        visit(a.args)
    visit(e.task.args)
    for k in e.key_properties:
        visit(k.atom.args)
    visit(e.objects)
    return sub


def generalize(e: Experience) -> Experience:
    sub = generalization_map(e)
    return Experience(
        e.name, e.domain, e.task.substitute(sub),
        tuple(k.substitute(sub) for k in e.key_properties),
        tuple(a.substitute(sub) for a in e.plan),
        tuple(sub.get(o, o) for o in e.objects),
    )


def abstract_experience(e: Experience, hierarchy: AbstractionHierarchy) -> Experience:
    """Map keys and actions through the hierarchy; nil entries vanish, keys dedupe."""
    keys: dict[KeyProperty, None] = {}
    for k in e.key_properties:
        parent = hierarchy.parent_predicate(k.atom)
        if parent is not None:
            keys[KeyProperty(k.temporal, parent)] = None
    plan = []
    for a in e.plan:
        parent = hierarchy.parent_operator(a)
        if parent is not None:
            plan.append(parent)
    return Experience(e.name, e.domain, e.task, tuple(keys), tuple(plan), e.objects)


def is_feature(key: KeyProperty, action: Atom, task: Atom) -> bool:
    vs = set(key.atom.args)
    return bool(vs & set(action.args)) and bool(vs & set(task.args))


def extract_features(e_abs: Experience) -> list[EnrichedOperator]:
    return [EnrichedOperator(a, tuple(k for k in e_abs.key_properties if is_feature(k, a, e_abs.task)))
            for a in e_abs.plan]


def _unary_names(keys: Sequence[KeyProperty]) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for k in keys:
        if k.atom.arity == 1 and k.temporal is Temporal.STATIC:
            out.setdefault(k.atom.args[0], []).append(k.atom.predicate)
    return {t: sorted(set(v)) for t, v in out.items()}


def role_tokens(ops: Sequence[EnrichedOperator], task: Atom,
                keys: Sequence[KeyProperty]) -> list[str]:
    """One token per operator: name/arity, the static types of its arguments,
    and the shape of the features that mention its first argument, with
    variables replaced by their role (``#i`` head position, ``$i`` task
    position, ``_`` anything else)."""
    types = _unary_names(keys)
    out = []
    for op in ops:
        args = op.head.args

        def role(v):
            if v in args:
                return f"#{args.index(v) + 1}"
            if v in task.args:
                return f"${task.args.index(v) + 1}"
            return "_"

        kinds = ",".join("+".join(types.get(a, [])) for a in args)
        shape = sorted({f"{f.temporal.value}.{f.atom.predicate}(" + " ".join(map(role, f.atom.args)) + ")"
                        for f in op.features if args and args[0] in f.atom.args})
        out.append(f"{op.head.predicate}/{op.head.arity}[{kinds}]{{{';'.join(shape)}}}")
    return out


@dataclass
class LearnConfig:
    # "roles": argument types + feature shape; "name": operator name/arity only
    tokens: str = "roles"
    name: Optional[str] = None


def learn_schema(e: Experience, hierarchy: AbstractionHierarchy,
                 config: Optional[LearnConfig] = None) -> ActivitySchema:
    config = config or LearnConfig()
    g = generalize(e)
    a = abstract_experience(g, hierarchy)
    ops = extract_features(a)
    if config.tokens == "roles":
        toks = role_tokens(ops, a.task, a.key_properties)
    elif config.tokens == "name":
        toks = default_tokens(ops)
    else:
        raise ValueError(f"unknown token mode {config.tokens!r}")
    bindings: dict[str, tuple] = {}
    plan = detect_and_roll(ops, toks, bindings)
    scope, to_abs = abstraction_with_map(struct_of_keyprops(a.key_properties, a.task.args))

    roles: dict[str, str] = {}
    for op in ops:
        for v in op.head.args:
            if v in to_abs:
                roles.setdefault(v, to_abs[v])
    for lv, column in bindings.items():
        nodes = {to_abs.get(t) for t in column}
        if len(nodes) == 1 and None not in nodes:
            roles[lv] = nodes.pop()
    used = {v for op in (el for el in _ops(plan)) for v in op.head.args}
    roles = {v: n for v, n in roles.items() if v in used}
    log.debug("learned %s: %d elements, %d loops", e.name, len(plan),
              sum(1 for el in plan if not isinstance(el, EnrichedOperator)))
    return ActivitySchema(config.name or e.name, e.domain, a.task,
                          scope, tuple(plan), roles)


def _ops(plan):
    for el in plan:
        if isinstance(el, EnrichedOperator):
            yield el
        else:
            yield from el.body
