"""Hypothesis strategies producing well-formed values of every file kind."""
from __future__ import annotations

import dataclasses
import itertools

from hypothesis import strategies as st

from ebpd.model import (AbstractionHierarchy, ActivitySchema, Atom, EnrichedOperator, Experience,
                        KeyProperty, Literal, Loop, MapEntry, Operator, PlanningDomain, TaskProblem,
                        Temporal)
from ebpd.model import atom
from ebpd.scope import Node, Structure, Truth

RESERVED = {"and", "not", "nil", "define", "maybe", "summary", "object", "static", "init", "end"}

names = st.from_regex(r"[a-z][a-z0-9\-]{0,6}", fullmatch=True).filter(lambda s: s not in RESERVED)
variables = names.map(lambda s: "?" + s)
temporals = st.sampled_from(list(Temporal))


@st.composite
def predicate_table(draw, min_size=1, max_size=5):
    preds = draw(st.lists(names, min_size=min_size, max_size=max_size, unique=True))
    return {p: draw(st.integers(0, 3)) for p in preds}


@st.composite
def atoms_over(draw, table, terms):
    p = draw(st.sampled_from(sorted(table)))
    return Atom(p, tuple(draw(st.sampled_from(terms)) for _ in range(table[p])))


@st.composite
def operators(draw, table, name):
    params = tuple(draw(st.lists(variables, min_size=1, max_size=4, unique=True)))
    atom = atoms_over(table, list(params))
    static = tuple(draw(st.lists(atom, max_size=2)))
    lit = st.builds(Literal, atom, st.booleans())
    pre = tuple(draw(st.lists(lit, max_size=3)))
    eff = tuple(draw(st.lists(lit, max_size=3)))
    return Operator(Atom(name, params), static, pre, eff)


@st.composite
def domains(draw):
    table = draw(predicate_table())
    preds = tuple(Atom(p, tuple(f"?a{i}" for i in range(k))) for p, k in table.items())
    op_names = draw(st.lists(names, max_size=4, unique=True))
    ops = tuple(draw(operators(table, n)) for n in op_names)
    return PlanningDomain(draw(names), draw(st.sampled_from(["concrete", "abstract"])), preds, ops)


@st.composite
def map_entries(draw, name):
    src = tuple(draw(st.lists(variables, max_size=4, unique=True)))
    if draw(st.booleans()):
        return MapEntry(Atom(name, src), None)
    keep = tuple(v for v in src if draw(st.booleans()))
    return MapEntry(Atom(name, src), Atom(draw(names), keep))


@st.composite
def hierarchies(draw):
    preds = draw(st.lists(names, max_size=4, unique=True))
    ops = draw(st.lists(names, max_size=4, unique=True))
    return AbstractionHierarchy(draw(names), tuple(draw(map_entries(p)) for p in preds),
                                tuple(draw(map_entries(o)) for o in ops))


@st.composite
def experiences(draw):
    table = draw(predicate_table())
    ground = draw(st.booleans())
    pool = draw(st.lists(variables if not ground else names, min_size=1, max_size=5, unique=True))
    atom = atoms_over(table, pool)
    keys = draw(st.lists(st.builds(KeyProperty, temporals, atom), max_size=6, unique=True))
    plan = draw(st.lists(atom, max_size=6))
    objects = tuple(pool) if ground or draw(st.booleans()) else ()
    return Experience(draw(names), draw(st.sampled_from(["", "d"])), draw(atom), tuple(keys),
                      tuple(plan), objects)


@st.composite
def problems(draw):
    table = draw(predicate_table())
    objs = draw(st.lists(names, min_size=1, max_size=5, unique=True))
    atom = atoms_over(table, objs)
    parts = [tuple(draw(st.lists(atom, max_size=5, unique=True))) for _ in range(3)]
    return TaskProblem(draw(names), draw(st.sampled_from(["", "d"])), draw(atom), tuple(objs), *parts)


@st.composite
def abstract_structures(draw, task_args=(), max_nodes=5):
    """A three-valued structure laid out the way schema scopes are written."""
    extra = draw(st.lists(variables, max_size=max_nodes, unique=True))
    node_names = list(dict.fromkeys(list(task_args) + extra))
    if not node_names:
        return Structure(3, (), {})
    table = draw(predicate_table(max_size=4))
    interp = {}
    for _ in range(draw(st.integers(0, 8))):
        a = draw(atoms_over(table, node_names))
        interp[(draw(temporals), a.predicate, a.args)] = draw(st.sampled_from([Truth.ONE, Truth.HALF]))
    tags = {}
    for i, t in enumerate(task_args, start=1):
        tags.setdefault(t, i)
    nodes = tuple(Node(n, draw(st.booleans()), tags.get(n)) for n in node_names)
    return Structure(3, nodes, interp)


@st.composite
def schemata(draw):
    table = draw(predicate_table())
    task_args = tuple(draw(st.lists(variables, max_size=3)))
    task = Atom(draw(names), task_args)
    pool = list(task_args) + draw(st.lists(variables, min_size=1, max_size=4))
    atom = atoms_over(table, pool)
    eop = st.builds(EnrichedOperator, atom,
                    st.lists(st.builds(KeyProperty, temporals, atom), max_size=3, unique=True).map(tuple))
    element = st.one_of(eop, st.lists(eop, min_size=1, max_size=3).map(lambda b: Loop(tuple(b))))
    plan = tuple(draw(st.lists(element, max_size=5)))
    scope = draw(abstract_structures(task_args))
    roles = {}
    if scope.nodes:
        for v in draw(st.lists(st.sampled_from(pool), max_size=3, unique=True)):
            roles[v] = draw(st.sampled_from(scope.universe))
    return ActivitySchema(draw(names), draw(st.sampled_from(["", "d"])), task, scope, plan, roles)


BY_KIND = {
    "domain": domains(),
    "hierarchy": hierarchies(),
    "experience": experiences(),
    "problem": problems(),
    "activity-schema": schemata(),
}


# ---------------------------------------------------------------- seeded generators
# Plain `random.Random` generators for the fixed-count acceptance runs.

def random_keys(rng, max_objects=8, max_preds=5):
    """A random key-property set plus the task arguments to protect."""
    objs = [f"o{i}" for i in range(rng.randint(1, max_objects))]
    preds = {f"p{i}": rng.choice((1, 1, 2, 2, 3)) for i in range(rng.randint(1, max_preds))}
    keys = set()
    for _ in range(rng.randint(0, 3 * len(objs))):
        p = rng.choice(sorted(preds))
        keys.add(KeyProperty(rng.choice(list(Temporal)),
                             Atom(p, tuple(rng.choice(objs) for _ in range(preds[p])))))
    mentioned = sorted({a for k in keys for a in k.atom.args})
    task = tuple(rng.sample(mentioned, min(len(mentioned), rng.randint(0, 2))))
    return sorted(keys), task


def concretize(s: Structure, rng, max_objects=6):
    """A two-valued structure drawn from the problems `s` is meant to cover:
    one object per plain node, two per summary node, definite entries copied
    and indefinite entries decided at random."""
    members = {}
    budget = max_objects
    for n in s.nodes:
        k = 2 if n.summary else 1
        members[n.name] = [f"{n.name}#{i}" for i in range(k)]
        budget -= k
    if budget < 0:
        return None
    interp = {}
    for (t, p, args), v in s.interp.items():
        for tup in itertools.product(*(members[a] for a in args)):
            if v is Truth.ONE or rng.random() < 0.5:
                interp[(t, p, tup)] = Truth.ONE
    nodes = tuple(Node(m, False, n.tag) for n in s.nodes for m in members[n.name])
    return Structure(2, nodes, interp)


def perturb(c: Structure, rng):
    """Flip one entry (possibly a unary one) or add an object with one fact."""
    interp = dict(c.interp)
    names = [n.name for n in c.nodes]
    preds = sorted({(t, p, len(a)) for (t, p, a) in interp}, key=lambda x: (x[0].value, x[1], x[2]))
    nodes = list(c.nodes)
    if not preds or not names:
        return c
    t, p, k = rng.choice(preds)
    if len(names) < 6 and rng.random() < 0.25:
        new = "extra"
        nodes.append(Node(new))
        names.append(new)
        interp[(t, p, tuple(rng.choice(names) if i else new for i in range(k)))] = Truth.ONE
    else:
        key = (t, p, tuple(rng.choice(names) for _ in range(k)))
        if key in interp:
            del interp[key]
        else:
            interp[key] = Truth.ONE
    return Structure(2, tuple(nodes), interp)


def contradictory(p: TaskProblem) -> TaskProblem:
    """Same structure, but every blue block must sit directly on the target pallet."""
    blues = sorted(a.args[0] for a in p.static if a.predicate == "blue")
    return dataclasses.replace(p, goal=p.goal + tuple(atom(f"on {b} pallet1") for b in blues))
