"""Reading and writing `.ebpd` files.

Every file is a single ``(define (<kind> <name>) ...)`` form; the kind is one
of ``domain``, ``hierarchy``, ``experience``, ``problem`` or
``activity-schema``. See ``data/grammar.md`` for the token set.
"""
from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional, Union

from .model import (AbstractionHierarchy, ActivitySchema, Atom, EnrichedOperator, Experience,
                    KeyProperty, Literal, Loop, MapEntry, Operator, PlanningDomain, TaskProblem,
                    Temporal, is_var, projection_error)
from .scope import Node, Structure, Truth
from .sexpr import ParseError, SList, Sym, read_one

KINDS = ("domain", "hierarchy", "experience", "problem", "activity-schema")


# ---------------------------------------------------------------- helpers

def _fail(msg: str, node=None):
    raise ParseError(msg, getattr(node, "span", None))


def _sym(node, what: str) -> str:
    if not isinstance(node, Sym):
        _fail(f"expected {what}", node)
    return str(node)


def _list(node, what: str) -> SList:
    if not isinstance(node, SList):
        _fail(f"expected {what}", node)
    return node


def _atom(node, what: str = "atom") -> Atom:
    lst = _list(node, what)
    if not lst:
        _fail(f"empty {what}", node)
    parts = [_sym(x, "symbol") for x in lst]
    if is_var(parts[0]) or parts[0].startswith(":"):
        _fail(f"bad predicate name {parts[0]!r}", lst[0])
    return Atom(parts[0], tuple(parts[1:]))


def _literal(node) -> Literal:
    lst = _list(node, "literal")
    if lst and lst[0] == "not":
        if len(lst) != 2:
            _fail("(not ...) takes exactly one atom", node)
        return Literal(_atom(lst[1]), False)
    return Literal(_atom(lst))


def _conj(node) -> list:
    """A conjunction: (), (and a b ...), a single atom, or a list of atoms."""
    lst = _list(node, "list of atoms")
    if not lst:
        return []
    if isinstance(lst[0], Sym):
        if lst[0] == "and":
            return list(lst[1:])
        return [lst]
    return list(lst)


def _header(form: SList, kind: str) -> tuple[str, list]:
    if len(form) < 2 or form[0] != "define":
        _fail("expected (define (<kind> <name>) ...)", form)
    head = _list(form[1], "(<kind> <name>)")
    if len(head) != 2 or _sym(head[0], "kind") != kind:
        _fail(f"expected a {kind} definition", head)
    return _sym(head[1], "name"), list(form[2:])


def _sections(body: list, allowed: tuple[str, ...]) -> dict[str, SList]:
    out = {}
    for sec in body:
        lst = _list(sec, "section")
        if not lst or not isinstance(lst[0], Sym):
            _fail("expected a (:section ...)", sec)
        key = str(lst[0])
        if key not in allowed:
            _fail(f"unknown section {key}", lst[0])
        if key in out:
            _fail(f"duplicate section {key}", lst[0])
        out[key] = lst
    return out


def _one(sec: Optional[SList], what: str):
    if sec is None:
        return None
    if len(sec) != 2:
        _fail(f"{what} takes exactly one value", sec)
    return sec[1]


def _keyprop(node) -> KeyProperty:
    lst = _list(node, "key-property")
    if len(lst) != 2 or not isinstance(lst[0], Sym):
        _fail("key-property must look like (<static|init|end> (<atom>))", node)
    try:
        temporal = Temporal(str(lst[0]))
    except ValueError:
        _fail(f"unknown temporal symbol {lst[0]!r}", lst[0])
    return KeyProperty(temporal, _atom(lst[1]))


def detect_kind(text: str) -> str:
    form = read_one(text)
    if len(form) >= 2 and isinstance(form[1], SList) and form[1]:
        kind = str(form[1][0])
        if kind in KINDS:
            return kind
    _fail("cannot tell what kind of file this is", form)


# ---------------------------------------------------------------- domains

def parse_domain(text: str, file: Optional[str] = None) -> PlanningDomain:
    name, body = _header(read_one(text, file), "domain")
    level = "concrete"
    predicates: list[Atom] = []
    operators: list[Operator] = []
    arities: dict[str, int] = {}
    seen_ops = set()
    for sec in body:
        lst = _list(sec, "section")
        key = _sym(lst[0], "section name") if lst else _fail("empty section", sec)
        if key == ":level":
            level = _sym(_one(lst, ":level"), "level")
            if level not in ("concrete", "abstract"):
                _fail("level must be concrete or abstract", lst[1])
        elif key == ":predicates":
            for p in lst[1:]:
                a = _atom(p, "predicate declaration")
                if a.predicate in arities:
                    _fail(f"predicate {a.predicate} declared twice", p)
                arities[a.predicate] = a.arity
                predicates.append(a)
        elif key == ":action":
            op = _action(lst)
            if op.head.signature in seen_ops:
                _fail(f"duplicate operator {op.name}", lst)
            seen_ops.add(op.head.signature)
            operators.append(op)
        else:
            _fail(f"unknown section {key}", lst[0])
    for sec, op in zip([s for s in body if s and s[0] == ":action"], operators):
        for a in op.body_atoms():
            if a.predicate not in arities:
                _fail(f"operator {op.name} uses undeclared predicate {a.predicate}", sec)
            if arities[a.predicate] != a.arity:
                _fail(f"{a} conflicts with declared arity {arities[a.predicate]}", sec)
    return PlanningDomain(name, level, tuple(predicates), tuple(operators))


def _action(lst: SList) -> Operator:
    if len(lst) < 2:
        _fail("action needs a name", lst)
    name = _sym(lst[1], "action name")
    fields = {}
    rest = list(lst[2:])
    if len(rest) % 2:
        _fail("action fields come in :key value pairs", lst)
    for k, v in zip(rest[::2], rest[1::2]):
        key = _sym(k, "field name")
        if key not in (":parameters", ":static", ":precondition", ":effect"):
            _fail(f"unknown action field {key}", k)
        if key in fields:
            _fail(f"duplicate action field {key}", k)
        fields[key] = v
    params = tuple(_sym(p, "parameter") for p in _list(fields.get(":parameters", SList()), "parameters"))
    for p, node in zip(params, fields.get(":parameters", [])):
        if not is_var(p):
            _fail(f"parameter {p} must be a variable", node)
    static = tuple(_atom(a) for a in _conj(fields.get(":static", SList())))
    pre = tuple(_literal(a) for a in _conj(fields.get(":precondition", SList())))
    eff = tuple(_literal(a) for a in _conj(fields.get(":effect", SList())))
    op = Operator(Atom(name, params), static, pre, eff)
    for a in op.body_atoms():
        free = a.variables() - set(params)
        if free:
            _fail(f"operator {name} mentions {sorted(free)[0]} outside its parameters", lst)
    return op


def serialize_domain(d: PlanningDomain) -> str:
    out = [f"(define (domain {d.name})", f"  (:level {d.level})", "  (:predicates"]
    out += [f"    {p}" for p in d.predicates]
    out[-1] += ")"
    for op in d.operators:
        out.append(f"  (:action {op.name}")
        out.append(f"    :parameters ({' '.join(op.head.args)})")
        out.append(f"    :static ({' '.join(map(str, op.static_pre))})")
        out.append(f"    :precondition ({' '.join(map(str, op.pre))})")
        out.append(f"    :effect ({' '.join(map(str, op.eff))}))")
    out[-1] += ")"
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- hierarchies

def parse_hierarchy(text: str, file: Optional[str] = None) -> AbstractionHierarchy:
    name, body = _header(read_one(text, file), "hierarchy")
    secs = _sections(body, (":predicates", ":operators"))
    maps = {}
    for key in (":predicates", ":operators"):
        entries, seen = [], set()
        for m in list(secs.get(key, [None]))[1:]:
            lst = _list(m, "(:map ...)")
            if len(lst) != 4 or lst[0] != ":map" or lst[2] != "->":
                _fail("expected (:map (<concrete>) -> (<abstract>)) or -> nil", m)
            src = _atom(lst[1])
            if src.signature in seen:
                _fail(f"duplicate entry for {src.predicate}", lst[1])
            seen.add(src.signature)
            if isinstance(lst[3], Sym):
                if lst[3] != "nil":
                    _fail("target must be an atom or nil", lst[3])
                tgt = None
            else:
                tgt = _atom(lst[3])
                if len(set(src.args)) != src.arity:
                    _fail("source arguments must be distinct variables", lst[1])
                problem = projection_error(src, tgt)
                if problem:
                    _fail(problem, lst[3])
            entries.append(MapEntry(src, tgt))
        maps[key] = tuple(entries)
    return AbstractionHierarchy(name, maps[":predicates"], maps[":operators"])


def serialize_hierarchy(h: AbstractionHierarchy) -> str:
    out = [f"(define (hierarchy {h.name})"]
    for key, entries in ((":predicates", h.predicate_map), (":operators", h.operator_map)):
        out.append(f"  ({key}")
        out += [f"    (:map {e.source} -> {e.target if e.target else 'nil'})" for e in entries]
        out[-1] += ")"
    out[-1] += ")"
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- experiences

def parse_experience(text: str, file: Optional[str] = None) -> Experience:
    name, body = _header(read_one(text, file), "experience")
    secs = _sections(body, (":domain", ":task", ":key-properties", ":plan", ":objects"))
    if ":task" not in secs:
        _fail("experience needs a :task", body[0] if body else None)
    domain = _sym(_one(secs.get(":domain"), ":domain"), "domain name") if ":domain" in secs else ""
    task = _atom(_one(secs[":task"], ":task"))
    keys = tuple(dict.fromkeys(_keyprop(k) for k in secs.get(":key-properties", [None])[1:]))
    plan = tuple(_atom(a, "action") for a in secs.get(":plan", [None])[1:])
    objects = tuple(_sym(o, "object") for o in secs.get(":objects", [None])[1:])
    exp = Experience(name, domain, task, keys, plan, objects)
    if objects and not any(is_var(o) for o in objects):
        _check_ground(exp.task, objects, secs[":task"])
        for node, k in zip(secs.get(":key-properties", [None])[1:], keys):
            _check_ground(k.atom, objects, node)
        for node, a in zip(secs.get(":plan", [None])[1:], plan):
            _check_ground(a, objects, node)
    return exp


def _check_ground(a: Atom, objects, node):
    for t in a.args:
        if is_var(t):
            _fail(f"{a} is not ground", node)
        if t not in objects:
            _fail(f"{t} in {a} is not a declared object", node)


def serialize_experience(e: Experience) -> str:
    out = [f"(define (experience {e.name})"]
    if e.domain:
        out.append(f"  (:domain {e.domain})")
    out.append(f"  (:task {e.task})")
    out.append("  (:key-properties")
    out += [f"    {k}" for k in e.key_properties]
    out[-1] += ")"
    out.append("  (:plan")
    out += [f"    {a}" for a in e.plan]
    out[-1] += ")"
    out.append(f"  (:objects {' '.join(e.objects)}))".replace(" )", ")"))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- problems

def parse_problem(text: str, file: Optional[str] = None) -> TaskProblem:
    name, body = _header(read_one(text, file), "problem")
    secs = _sections(body, (":domain", ":task", ":objects", ":static", ":init", ":goal"))
    if ":task" not in secs:
        _fail("problem needs a :task", body[0] if body else None)
    domain = _sym(_one(secs.get(":domain"), ":domain"), "domain name") if ":domain" in secs else ""
    objects = tuple(_sym(o, "object") for o in secs.get(":objects", [None])[1:])
    task = _atom(_one(secs[":task"], ":task"))
    _check_ground(task, objects, secs[":task"])
    parts = {}
    for key in (":static", ":init", ":goal"):
        nodes = list(secs.get(key, [None]))[1:]
        if len(nodes) == 1 and isinstance(nodes[0], SList) and nodes[0] and nodes[0][0] == "and":
            nodes = list(nodes[0][1:])
        atoms = []
        for n in nodes:
            a = _atom(n)
            _check_ground(a, objects, n)
            atoms.append(a)
        parts[key] = tuple(dict.fromkeys(atoms))
    return TaskProblem(name, domain, task, objects, parts[":static"], parts[":init"], parts[":goal"])


def serialize_problem(p: TaskProblem) -> str:
    out = [f"(define (problem {p.name})"]
    if p.domain:
        out.append(f"  (:domain {p.domain})")
    out.append(f"  (:task {p.task})")
    out.append(f"  (:objects {' '.join(p.objects)})".replace(" )", ")"))
    for key, atoms in ((":static", p.static), (":init", p.init), (":goal", p.goal)):
        out.append(f"  ({key}")
        out += [f"    {a}" for a in atoms]
        out[-1] += ")"
    out[-1] += ")"
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- schemas

def serialize_scope_entries(s: Structure) -> list[str]:
    out = [f"(summary {n.name})" for n in s.nodes if n.summary]
    mentioned = {a for (_, _, args) in s.interp for a in args}
    out += [f"(object {n.name})" for n in s.nodes if not n.summary and n.name not in mentioned]
    for (t, p, args), v in sorted(s.interp.items(), key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2])):
        kp = f"({t.value} ({' '.join((p, *args))}))"
        out.append(kp if v is Truth.ONE else f"(maybe {kp})")
    return out


def parse_scope(entries, task_args=()) -> Structure:
    summaries, names, interp = set(), {}, {}
    for node in entries:
        lst = _list(node, "scope entry")
        if lst and lst[0] in ("summary", "object"):
            if len(lst) != 2:
                _fail(f"({lst[0]} ?c) takes one name", node)
            nm = _sym(lst[1], "node name")
            names[nm] = None
            if lst[0] == "summary":
                summaries.add(nm)
            continue
        value = Truth.ONE
        if lst and lst[0] == "maybe":
            if len(lst) != 2:
                _fail("(maybe ...) wraps exactly one key-property", node)
            lst, value = lst[1], Truth.HALF
        k = _keyprop(lst)
        for a in k.atom.args:
            names[a] = None
        interp[(k.temporal, k.atom.predicate, k.atom.args)] = value
    tags = {}
    for i, a in enumerate(task_args, start=1):
        tags.setdefault(a, i)
    nodes = tuple(Node(n, n in summaries, tags.get(n)) for n in names)
    return Structure(3, nodes, interp)


def _features(node) -> tuple[KeyProperty, ...]:
    return tuple(_keyprop(k) for k in _list(node, "feature list"))


def _plan_op(node) -> EnrichedOperator:
    lst = _list(node, "(:op ...)")
    if len(lst) not in (2, 4) or lst[0] != ":op":
        _fail("expected (:op (<head>) :features (...))", node)
    feats = ()
    if len(lst) == 4:
        if lst[2] != ":features":
            _fail("expected :features", lst[2])
        feats = _features(lst[3])
    return EnrichedOperator(_atom(lst[1], "operator head"), feats)


def parse_schema(text: str, file: Optional[str] = None) -> ActivitySchema:
    name, body = _header(read_one(text, file), "activity-schema")
    secs = _sections(body, (":domain", ":task", ":roles", ":scope", ":plan"))
    if ":task" not in secs:
        _fail("activity schema needs a :task", body[0] if body else None)
    domain = _sym(_one(secs.get(":domain"), ":domain"), "domain name") if ":domain" in secs else ""
    task = _atom(_one(secs[":task"], ":task"))
    roles = {}
    for r in secs.get(":roles", [None])[1:]:
        lst = _list(r, "(?var ?node)")
        if len(lst) != 2:
            _fail("role entries look like (?var ?node)", r)
        roles[_sym(lst[0], "variable")] = _sym(lst[1], "node")
    scope = parse_scope(secs.get(":scope", [None])[1:], task.args)
    plan = []
    for el in secs.get(":plan", [None])[1:]:
        lst = _list(el, "plan element")
        if lst and lst[0] == ":loop":
            if len(lst) < 2:
                _fail("empty loop", el)
            plan.append(Loop(tuple(_plan_op(x) for x in lst[1:])))
        else:
            plan.append(_plan_op(el))
    return ActivitySchema(name, domain, task, scope, tuple(plan), roles)


def _op_text(op: EnrichedOperator, indent: str) -> str:
    feats = " ".join(map(str, op.features))
    return f"{indent}(:op {op.head} :features ({feats}))"


def serialize_schema(m: ActivitySchema) -> str:
    out = [f"(define (activity-schema {m.name})"]
    if m.domain:
        out.append(f"  (:domain {m.domain})")
    out.append(f"  (:task {m.task})")
    out.append("  (:roles")
    out += [f"    ({v} {n})" for v, n in m.roles.items()]
    out[-1] += ")"
    out.append("  (:scope")
    out += [f"    {e}" for e in serialize_scope_entries(m.scope)]
    out[-1] += ")"
    out.append("  (:plan")
    for el in m.plan:
        if isinstance(el, Loop):
            out.append("    (:loop")
            out += [_op_text(op, "      ") for op in el.body]
            out[-1] += ")"
        else:
            out.append(_op_text(el, "    "))
    out[-1] += ")"
    out[-1] += ")"
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- dispatch

PARSERS: dict[str, Callable] = {
    "domain": parse_domain,
    "hierarchy": parse_hierarchy,
    "experience": parse_experience,
    "problem": parse_problem,
    "activity-schema": parse_schema,
}

Parsed = Union[PlanningDomain, AbstractionHierarchy, Experience, TaskProblem, ActivitySchema]


def parse(text: str, file: Optional[str] = None) -> Parsed:
    return PARSERS[detect_kind(text)](text, file)


def serialize(obj: Parsed) -> str:
    for cls, fn in ((PlanningDomain, serialize_domain), (AbstractionHierarchy, serialize_hierarchy),
                    (Experience, serialize_experience), (TaskProblem, serialize_problem),
                    (ActivitySchema, serialize_schema)):
        if isinstance(obj, cls):
            return fn(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def load(path: Union[str, Path]) -> Parsed:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), str(path))


def save(obj: Parsed, path: Union[str, Path], header: str = "") -> None:
    text = serialize(obj)
    if header:
        text = "".join(f"; {line}\n".replace("; \n", ";\n") for line in header.splitlines()) + text
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
