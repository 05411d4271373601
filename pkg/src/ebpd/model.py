"""Domain types shared by every part of the toolkit.

Terms are plain strings; a leading ``?`` marks a variable. Everything here is
an immutable value once constructed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Union

from .sexpr import SourceSpan


def is_var(term: str) -> bool:
    return term.startswith("?")


class Temporal(str, Enum):
    STATIC = "static"
    INIT = "init"
    END = "end"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> tuple[str, int]:
        return (self.predicate, len(self.args))

    def variables(self) -> set[str]:
        return {a for a in self.args if is_var(a)}

    def is_ground(self) -> bool:
        return not any(is_var(a) for a in self.args)

    def substitute(self, sub: Mapping[str, str]) -> "Atom":
        return Atom(self.predicate, tuple(sub.get(a, a) for a in self.args))

    def __str__(self) -> str:
        return "(" + " ".join((self.predicate, *self.args)) + ")"


def atom(text: str) -> Atom:
    """Shorthand: ``atom("on ?x ?y")`` or ``atom("(on ?x ?y)")``."""
    parts = text.strip().strip("()").split()
    return Atom(parts[0], tuple(parts[1:]))


@dataclass(frozen=True, order=True)
class Literal:
    atom: Atom
    positive: bool = True

    def substitute(self, sub: Mapping[str, str]) -> "Literal":
        return Literal(self.atom.substitute(sub), self.positive)

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"(not {self.atom})"


@dataclass(frozen=True, order=True)
class KeyProperty:
    temporal: Temporal
    atom: Atom

    def substitute(self, sub: Mapping[str, str]) -> "KeyProperty":
        return KeyProperty(self.temporal, self.atom.substitute(sub))

    def __str__(self) -> str:
        return f"({self.temporal.value} {self.atom})"


def keyprop(temporal: str, text: str) -> KeyProperty:
    return KeyProperty(Temporal(temporal), atom(text))


def _dedup(items: Iterable) -> tuple:
    return tuple(dict.fromkeys(items))


@dataclass(frozen=True)
class Operator:
    head: Atom
    static_pre: tuple[Atom, ...] = ()
    pre: tuple[Literal, ...] = ()
    eff: tuple[Literal, ...] = ()

    @property
    def name(self) -> str:
        return self.head.predicate

    def body_atoms(self) -> Iterable[Atom]:
        yield from self.static_pre
        for lit in self.pre + self.eff:
            yield lit.atom

    def ground(self, args: tuple[str, ...]) -> "Operator":
        sub = dict(zip(self.head.args, args))
        return Operator(
            self.head.substitute(sub),
            tuple(a.substitute(sub) for a in self.static_pre),
            tuple(l.substitute(sub) for l in self.pre),
            tuple(l.substitute(sub) for l in self.eff),
        )


@dataclass(frozen=True)
class PlanningDomain:
    name: str
    level: str = "concrete"  # "concrete" | "abstract"
    predicates: tuple[Atom, ...] = ()
    operators: tuple[Operator, ...] = ()

    def operator(self, name: str) -> Operator:
        for op in self.operators:
            if op.name == name:
                return op
        raise KeyError(name)

    def arities(self) -> dict[str, int]:
        return {p.predicate: p.arity for p in self.predicates}


class HierarchyError(KeyError):
    """A predicate or operator has no entry in the abstraction hierarchy."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing hierarchy entry"


@dataclass(frozen=True)
class MapEntry:
    """One abstraction relation: ``source -> target`` or ``source -> nil``."""

    source: Atom
    target: Optional[Atom]

    @property
    def projection(self) -> Optional[tuple[int, ...]]:
        if self.target is None:
            return None
        return tuple(self.source.args.index(v) for v in self.target.args)


def projection_error(source: Atom, target: Atom) -> Optional[str]:
    """Reason why ``target`` is not a positional subsequence of ``source``."""
    if target.arity > source.arity:
        return f"{target} has more arguments than {source}"
    pos = -1
    for v in target.args:
        try:
            nxt = source.args.index(v, pos + 1)
        except ValueError:
            return f"{target} is not a subsequence of {source} (argument {v})"
        pos = nxt
    return None


@dataclass(frozen=True)
class AbstractionHierarchy:
    name: str
    predicate_map: tuple[MapEntry, ...] = ()
    operator_map: tuple[MapEntry, ...] = ()
    _pred: dict = field(init=False, repr=False, compare=False)
    _op: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_pred", {e.source.signature: e for e in self.predicate_map})
        object.__setattr__(self, "_op", {e.source.signature: e for e in self.operator_map})

    @classmethod
    def identity(cls, domain: PlanningDomain) -> "AbstractionHierarchy":
        return cls(
            f"{domain.name}-identity",
            tuple(MapEntry(p, p) for p in domain.predicates),
            tuple(MapEntry(o.head, o.head) for o in domain.operators),
        )

    @staticmethod
    def _apply(entry: Optional[MapEntry], a: Atom, kind: str) -> Optional[Atom]:
        if entry is None:
            raise HierarchyError(f"no {kind} abstraction entry for {a.predicate}/{a.arity}")
        if entry.target is None:
            return None
        return Atom(entry.target.predicate, tuple(a.args[i] for i in entry.projection))

    def parent_predicate(self, a: Atom) -> Optional[Atom]:
        return self._apply(self._pred.get(a.signature), a, "predicate")

    def parent_operator(self, a: Atom) -> Optional[Atom]:
        return self._apply(self._op.get(a.signature), a, "operator")

    def operator_entry(self, sig: tuple[str, int]) -> Optional[MapEntry]:
        return self._op.get(sig)

    def refinements(self, abstract_name: str, arity: int) -> list[MapEntry]:
        """Concrete operators whose parent is the given abstract operator."""
        return [e for e in self.operator_map
                if e.target is not None and e.target.signature == (abstract_name, arity)]

    def nil_operators(self) -> list[str]:
        return [e.source.predicate for e in self.operator_map if e.target is None]


@dataclass(frozen=True)
class Experience:
    name: str
    domain: str
    task: Atom
    key_properties: tuple[KeyProperty, ...] = ()
    plan: tuple[Atom, ...] = ()
    objects: tuple[str, ...] = ()

    def constants(self) -> set[str]:
        terms = set(self.task.args)
        for k in self.key_properties:
            terms.update(k.atom.args)
        for a in self.plan:
            terms.update(a.args)
        return {t for t in terms if not is_var(t)}


@dataclass(frozen=True)
class EnrichedOperator:
    head: Atom
    features: tuple[KeyProperty, ...] = ()

    def rename(self, sub: Mapping[str, str]) -> "EnrichedOperator":
        return EnrichedOperator(self.head.substitute(sub),
                                tuple(f.substitute(sub) for f in self.features))


@dataclass(frozen=True)
class Loop:
    """A rolled loop; `iterations` is bookkeeping only and never serialized."""

    body: tuple[EnrichedOperator, ...]
    iterations: int = field(default=0, compare=False)
    tokens: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not self.body:
            raise ValueError("loop body must be non-empty")


PlanElement = Union[EnrichedOperator, Loop]


@dataclass(frozen=True)
class ActivitySchema:
    name: str
    domain: str
    task: Atom
    scope: "object"  # scope.Structure; kept loose to avoid an import cycle
    plan: tuple[PlanElement, ...] = ()
    roles: Mapping[str, str] = field(default_factory=dict)

    def loops(self) -> list[Loop]:
        return [e for e in self.plan if isinstance(e, Loop)]

    def operators(self) -> Iterable[EnrichedOperator]:
        for e in self.plan:
            if isinstance(e, Loop):
                yield from e.body
            else:
                yield e


@dataclass(frozen=True)
class TaskProblem:
    name: str
    domain: str
    task: Atom
    objects: tuple[str, ...] = ()
    static: tuple[Atom, ...] = ()
    init: tuple[Atom, ...] = ()
    goal: tuple[Atom, ...] = ()

    def key_properties(self) -> tuple[KeyProperty, ...]:
        return (tuple(KeyProperty(Temporal.STATIC, a) for a in self.static)
                + tuple(KeyProperty(Temporal.INIT, a) for a in self.init)
                + tuple(KeyProperty(Temporal.END, a) for a in self.goal))


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.severity}: {self.message}"


def validate_domain(domain: PlanningDomain, hierarchy: AbstractionHierarchy,
                    abstract_domain: PlanningDomain) -> list[Diagnostic]:
    """Cross-check a concrete domain, its hierarchy and the abstract domain."""
    diags: list[Diagnostic] = []

    def err(msg):
        diags.append(Diagnostic("error", msg))

    for dom in (domain, abstract_domain):
        arities = dom.arities()
        for op in dom.operators:
            for a in op.body_atoms():
                if a.predicate not in arities:
                    err(f"{dom.name}: operator {op.name} uses undeclared predicate {a.predicate}")
                elif arities[a.predicate] != a.arity:
                    err(f"{dom.name}: {a} has arity {a.arity}, declared {arities[a.predicate]}")
                free = a.variables() - set(op.head.args)
                if free:
                    err(f"{dom.name}: operator {op.name} is not closed ({', '.join(sorted(free))})")
        seen = set()
        for op in dom.operators:
            if op.head.signature in seen:
                err(f"{dom.name}: duplicate operator {op.name}/{op.head.arity}")
            seen.add(op.head.signature)

    abs_preds = {p.signature for p in abstract_domain.predicates}
    abs_ops = {o.head.signature for o in abstract_domain.operators}
    checks = (
        ("predicate", domain.predicates, hierarchy.predicate_map, abs_preds),
        ("operator", [o.head for o in domain.operators], hierarchy.operator_map, abs_ops),
    )
    for kind, sources, entries, targets in checks:
        by_sig = {e.source.signature: e for e in entries}
        for src in sources:
            entry = by_sig.get(src.signature)
            if entry is None:
                err(f"hierarchy has no {kind} entry for {src.predicate}")
                continue
            if entry.target is None:
                continue
            problem = projection_error(entry.source, entry.target)
            if problem:
                err(f"{kind} map {entry.source} -> {entry.target}: {problem}")
            elif entry.target.signature not in targets:
                err(f"{kind} map target {entry.target.predicate}/{entry.target.arity} "
                    f"is not in abstract domain {abstract_domain.name}")
    return diags
