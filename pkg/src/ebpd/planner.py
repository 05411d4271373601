"""Schema retrieval, abstract instantiation (ASBP), refinement (SBP) and a
baseline forward-search planner used as a reference."""
from __future__ import annotations

import heapq
import itertools
import logging
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import (AbstractionHierarchy, ActivitySchema, Atom, EnrichedOperator, KeyProperty, Loop,
                    Operator, PlanningDomain, TaskProblem, is_var)
from .scope import Embedding, embeds, problem_to_struct
from .sim import apply, applicable, groundings, validate_plan

log = logging.getLogger(__name__)


class PlanningError(Exception):
    pass


class RefinementError(PlanningError):
    def __init__(self, message: str, index: int, partial: Sequence[Atom]):
        super().__init__(message)
        self.index = index
        self.partial = list(partial)


class SearchExhausted(PlanningError):
    pass


@dataclass
class PlanMetrics:
    retrieval_time: float = 0.0
    search_time: float = 0.0
    evaluated_states: int = 0
    plan_length: int = 0

    def __post_init__(self):
        if min(self.retrieval_time, self.search_time, self.evaluated_states, self.plan_length) < 0:
            raise ValueError("metrics must be non-negative")


@dataclass
class PlannerConfig:
    depth_bound: int = 8  # nil-action insertion bound for refinement
    goal_weight: float = 1.0  # weight of the unmet-goal count in the ASBP priority
    tie_break: str = "lex"  # "lex" | "reverse": order among equal-cost groundings
    max_nodes: int = 200_000
    baseline_budget: int = 2_000_000


# ---------------------------------------------------------------- retrieval

@dataclass
class Match:
    schema: ActivitySchema
    embedding: Embedding


def retrieve(problem: TaskProblem, library: Sequence[ActivitySchema],
             hierarchy: AbstractionHierarchy) -> list[Match]:
    """Every schema whose scope embeds the abstracted problem, in library order."""
    out = []
    c = None
    for m in library:
        if m.task.signature != problem.task.signature:
            continue
        if c is None:
            c = problem_to_struct(problem, hierarchy)
        e = embeds(c, m.scope)
        if e:
            out.append(Match(m, e))
    return out


# ---------------------------------------------------------------- abstract problems

def abstract_problem(problem: TaskProblem, hierarchy: AbstractionHierarchy) -> TaskProblem:
    def up(atoms):
        out = {}
        for a in atoms:
            p = hierarchy.parent_predicate(a)
            if p is not None:
                out[p] = None
        return tuple(out)

    return TaskProblem(problem.name, problem.domain, problem.task, problem.objects,
                       up(problem.static), up(problem.init), up(problem.goal))


class _KeyIndex:
    """Problem key-properties indexed for partial-match lookups."""

    def __init__(self, p_abs: TaskProblem):
        self.by = defaultdict(set)
        for k in p_abs.key_properties():
            self.by[(k.temporal, k.atom.predicate)].add(k.atom.args)

    def holds(self, f: KeyProperty, b: dict, allowed) -> bool:
        rows = self.by.get((f.temporal, f.atom.predicate), ())
        args = f.atom.args
        for row in rows:
            if len(row) != len(args):
                continue
            ok = True
            local = {}
            for x, v in zip(args, row):
                if not is_var(x):
                    ok = x == v
                elif x in b:
                    ok = b[x] == v
                elif x in local:
                    ok = local[x] == v
                else:
                    ok = allowed(x, v)
                    local[x] = v
                if not ok:
                    break
            if ok:
                return True
        return False


# ---------------------------------------------------------------- ASBP

@dataclass
class AbstractResult:
    plan: list[Atom]
    evaluated_states: int
    cost: float


def asbp(problem: TaskProblem, schema: ActivitySchema, hierarchy: AbstractionHierarchy,
         abstract_domain: PlanningDomain, embedding: Optional[Embedding] = None,
         config: Optional[PlannerConfig] = None) -> AbstractResult:
    """Best-first instantiation of the schema's plan on the abstracted problem.

    A node is (plan position, bindings, abstract state). A maximal run of
    single elements expands to its applicable groundings as one step; a loop
    expands to whole-iteration groundings plus its exit, and the exit grounds
    the run of singles after it straight away. An iteration that moves an
    object a later single needs pays one extra feature. Priority: accumulated
    unmet-feature count plus weighted unmet-goal count; iterations before
    exits; deeper first.
    """
    config = config or PlannerConfig()
    p_abs = abstract_problem(problem, hierarchy)
    static = frozenset(p_abs.static)
    goal = frozenset(p_abs.goal)
    keys = _KeyIndex(p_abs)
    if embedding is None:
        embedding = embeds(problem_to_struct(problem, hierarchy), schema.scope)
    fmap = embedding.mapping or {}
    objects = sorted({a for atom in p_abs.static + p_abs.init + p_abs.goal for a in atom.args}
                     | set(problem.task.args))

    def allowed(var: str, obj: str) -> bool:
        node = schema.roles.get(var)
        return node is None or fmap.get(obj) == node

    typed = {}

    def candidates(var: str) -> list[str]:
        if var not in typed:
            typed[var] = [o for o in objects if allowed(var, o)]
        return typed[var]

    ops = {o.head.signature: o for o in abstract_domain.operators}
    order = (lambda xs: xs) if config.tie_break == "lex" else (lambda xs: list(reversed(xs)))

    def expand_op(eop: EnrichedOperator, b: dict, state: frozenset):
        """(new bindings, action, new state, feature cost) for each applicable grounding."""
        op = ops.get(eop.head.signature)
        if op is None:
            raise PlanningError(f"abstract domain has no operator {eop.head.predicate}/{eop.head.arity}")
        head = eop.head
        free = [v for v in dict.fromkeys(head.args) if is_var(v) and v not in b]
        out = []
        for combo in itertools.product(*(candidates(v) for v in free)):
            nb = dict(b)
            nb.update(zip(free, combo))
            args = tuple(nb.get(a, a) for a in head.args)
            g = op.ground(args)
            if not applicable(g, static, state):
                continue
            cost = sum(1 for f in eop.features if not keys.holds(f, nb, allowed))
            out.append((nb, Atom(head.predicate, args), apply(g, state), cost))
        return order(out)

    def expand_body(body: Sequence[EnrichedOperator], b: dict, state: frozenset):
        frontier = [(b, [], state, 0)]
        for eop in body:
            nxt = []
            for fb, acts, st, c in frontier:
                for nb, act, ns, cost in expand_op(eop, fb, st):
                    nxt.append((nb, acts + [act], ns, c + cost))
            frontier = nxt
            if not frontier:
                break
        return frontier

    loop_vars, movers = {}, {}  # movers: loop variables an operator acts on
    for i, el in enumerate(schema.plan):
        if isinstance(el, Loop):
            outside = {v for j, e in enumerate(schema.plan) if j != i
                       for op in (e.body if isinstance(e, Loop) else (e,)) for v in op.head.args}
            outside |= set(schema.task.args)
            loop_vars[i] = {v for op in el.body for v in op.head.args if is_var(v)} - outside
            movers[i] = {op.head.args[0] for op in el.body if op.head.args} & loop_vars[i]

    # maximal runs of single operators are grounded as one step
    run_end = {}
    for i in range(len(schema.plan) - 1, -1, -1):
        if not isinstance(schema.plan[i], Loop):
            run_end[i] = run_end.get(i + 1, i + 1)

    # singles after each loop; their features can single out one object, which
    # an iteration should then leave alone
    later_singles = {i: [e for e in schema.plan[i + 1:] if not isinstance(e, Loop)]
                     for i, el in enumerate(schema.plan) if isinstance(el, Loop)}
    reserve_cache: dict = {}

    def reserved(pos: int, b: dict) -> set:
        key = (pos, frozenset(b.items()))
        if key not in reserve_cache:
            out = set()
            for eop in later_singles[pos]:
                for v in dict.fromkeys(eop.head.args):
                    feats = [f for f in eop.features if v in f.atom.args]
                    if not is_var(v) or not feats:
                        continue
                    if v in b:  # already chosen by an earlier step
                        out.add(b[v])
                        continue
                    fits = [o for o in candidates(v)
                            if all(keys.holds(f, {**b, v: o}, allowed) for f in feats)]
                    if len(fits) == 1:
                        out.add(fits[0])
            reserve_cache[key] = out
        return reserve_cache[key]

    start_b = dict(zip(schema.task.args, problem.task.args))
    init = frozenset(p_abs.init)
    tick = itertools.count()
    w = config.goal_weight

    def h(state):
        return len(goal - state)

    heap = [(w * h(init), 1, 0, next(tick), 0, 0, start_b, init, ())]
    seen = set()
    generated = 1
    n = len(schema.plan)
    while heap:
        _, _, negdepth, _, g, pos, b, state, plan = heapq.heappop(heap)
        sig = (pos, state, frozenset(b.items()))
        if sig in seen:
            continue
        seen.add(sig)
        if pos == n:
            if goal <= state:
                return AbstractResult(list(plan), generated, g)
            continue
        el = schema.plan[pos]
        children = []
        if isinstance(el, Loop):
            keep = reserved(pos, b)
            for nb, acts, ns, c in expand_body(el.body, b, state):
                # moving an object a later step is pinned to costs one feature
                c += len({nb[v] for v in movers[pos] if v in nb} & keep)
                for v in loop_vars[pos]:
                    nb.pop(v, None)
                if ns == state:
                    continue  # an iteration that changes nothing cannot help
                children.append((0, g + c, pos, nb, ns, plan + tuple(acts)))
            # leaving the loop expands the run of singles that follows it, so an
            # exit is scored on the same footing as another iteration
            nxt = pos + 1
            if nxt < n and not isinstance(schema.plan[nxt], Loop):
                end = run_end[nxt]
                for nb, acts, ns, c in expand_body(schema.plan[nxt:end], b, state):
                    children.append((1, g + c, end, nb, ns, plan + tuple(acts)))
            else:
                children.append((1, g, nxt, b, state, plan))
        else:
            end = run_end[pos]
            for nb, acts, ns, c in expand_body(schema.plan[pos:end], b, state):
                children.append((0, g + c, end, nb, ns, plan + tuple(acts)))
        for kind, ng, npos, nb, ns, nplan in children:
            generated += 1
            heapq.heappush(heap, (ng + w * h(ns), kind, -len(nplan), next(tick), ng, npos, nb, ns, nplan))
        if generated > config.max_nodes:
            raise SearchExhausted(f"abstract search budget of {config.max_nodes} nodes exceeded")
    raise SearchExhausted("no instantiation of the schema reaches the goal")


# ---------------------------------------------------------------- SBP

def _static_groundings(op: Operator, objects, static: frozenset, fixed=None):
    bare = Operator(op.head, op.static_pre)
    return groundings(bare, objects, static, frozenset(), fixed)


def sbp(problem: TaskProblem, abstract_plan: Sequence[Atom], hierarchy: AbstractionHierarchy,
        concrete: PlanningDomain, config: Optional[PlannerConfig] = None) -> list[Atom]:
    """Refine an abstract plan, inserting nil-class actions where needed."""
    config = config or PlannerConfig()
    static = frozenset(problem.static)
    objects = problem.objects
    state = frozenset(problem.init)
    ops = {o.head.signature: o for o in concrete.operators}
    nil_actions = []
    for e in hierarchy.operator_map:
        if e.target is None and e.source.signature in ops:
            op = ops[e.source.signature]
            for args in _static_groundings(op, objects, static):
                nil_actions.append((Atom(op.name, args), op.ground(args)))
    nil_actions.sort(key=lambda x: x[0])

    def direct(alpha: Atom, st: frozenset) -> Optional[tuple[Atom, Operator]]:
        for e in hierarchy.refinements(alpha.predicate, alpha.arity):
            op = ops.get(e.source.signature)
            if op is None:
                continue
            fixed = {}
            for pos, arg in zip(e.projection, alpha.args):
                fixed[op.head.args[pos]] = arg
            for args in groundings(op, objects, static, st, fixed):
                return Atom(op.name, args), op.ground(args)
        return None

    def bfs(st: frozenset, test):
        """Shortest nil-action prefix after which `test(state)` is truthy."""
        hit = test(st)
        if hit:
            return [], st, hit
        frontier = deque([(st, [])])
        seen = {st}
        while frontier:
            s, path = frontier.popleft()
            if len(path) >= config.depth_bound:
                continue
            for atom, g in nil_actions:
                if not applicable(g, static, s):
                    continue
                ns = apply(g, s)
                if ns in seen:
                    continue
                seen.add(ns)
                hit = test(ns)
                if hit:
                    return path + [atom], ns, hit
                frontier.append((ns, path + [atom]))
        return None

    plan: list[Atom] = []
    for i, alpha in enumerate(abstract_plan):
        found = bfs(state, lambda s: direct(alpha, s))
        if found is None:
            raise RefinementError(f"cannot refine {alpha} (step {i}) within {config.depth_bound} "
                                  f"inserted actions", i, plan)
        prefix, state, (act, g) = found
        plan += prefix
        plan.append(act)
        state = apply(g, state)
    goal = frozenset(problem.goal)
    found = bfs(state, lambda s: goal <= s)
    if found is None:
        raise RefinementError("refined plan does not reach the goal", len(abstract_plan), plan)
    plan += found[0]
    return plan


def project(plan: Sequence[Atom], hierarchy: AbstractionHierarchy) -> list[Atom]:
    """Drop nil-class actions and abstract the rest."""
    out = []
    for a in plan:
        p = hierarchy.parent_operator(a)
        if p is not None:
            out.append(p)
    return out


# ---------------------------------------------------------------- baseline

@dataclass
class _Ground:
    atom: Atom
    pos: frozenset
    neg: frozenset
    add: frozenset
    dele: frozenset


def baseline_plan(problem: TaskProblem, domain: PlanningDomain,
                  budget: int = 2_000_000) -> Optional[list[Atom]]:
    """Breadth-first (unit-cost uniform-cost) search with duplicate detection.

    Returns an optimal plan, None when the reachable space is exhausted, and
    raises SearchExhausted when more than `budget` states would be stored.
    """
    static = frozenset(problem.static)
    acts: list[_Ground] = []
    for op in domain.operators:
        for args in _static_groundings(op, problem.objects, static):
            g = op.ground(args)
            acts.append(_Ground(Atom(op.name, args),
                                frozenset(l.atom for l in g.pre if l.positive),
                                frozenset(l.atom for l in g.pre if not l.positive),
                                frozenset(l.atom for l in g.eff if l.positive),
                                frozenset(l.atom for l in g.eff if not l.positive)))
    acts.sort(key=lambda a: a.atom)
    trigger = defaultdict(list)
    always = []
    for a in acts:
        if a.pos:
            trigger[min(a.pos)].append(a)
        else:
            always.append(a)
    goal = frozenset(problem.goal)
    start = frozenset(problem.init)
    if goal <= start:
        return []
    parent = {start: None}
    frontier = deque([start])
    while frontier:
        s = frontier.popleft()
        cands = list(always)
        for atom in s:
            cands.extend(trigger.get(atom, ()))
        for a in cands:
            if not a.pos <= s or a.neg & s:
                continue
            ns = (s - a.dele) | a.add
            if ns in parent:
                continue
            parent[ns] = (s, a.atom)
            if goal <= ns:
                plan = []
                cur = ns
                while parent[cur] is not None:
                    cur, act = parent[cur]
                    plan.append(act)
                return plan[::-1]
            if len(parent) > budget:
                raise SearchExhausted(f"baseline search stored more than {budget} states")
            frontier.append(ns)
    return None


# ---------------------------------------------------------------- end to end

@dataclass
class PlanResult:
    status: str  # "ok" | "no-schema" | "unsolved"
    plan: list[Atom] = field(default_factory=list)
    abstract_plan: list[Atom] = field(default_factory=list)
    schema: Optional[str] = None
    metrics: PlanMetrics = field(default_factory=PlanMetrics)
    reason: str = ""


def solve(problem: TaskProblem, library: Sequence[ActivitySchema], hierarchy: AbstractionHierarchy,
          abstract_domain: PlanningDomain, concrete: PlanningDomain,
          config: Optional[PlannerConfig] = None) -> PlanResult:
    """retrieve -> asbp -> sbp -> validate, with timings kept apart."""
    config = config or PlannerConfig()
    t0 = time.perf_counter()
    matches = retrieve(problem, library, hierarchy)
    t1 = time.perf_counter()
    metrics = PlanMetrics(retrieval_time=t1 - t0)
    if not matches:
        return PlanResult("no-schema", metrics=metrics, reason="no applicable schema")
    errors = []
    for m in matches:
        t2 = time.perf_counter()
        try:
            ab = asbp(problem, m.schema, hierarchy, abstract_domain, m.embedding, config)
            plan = sbp(problem, ab.plan, hierarchy, concrete, config)
        except PlanningError as exc:
            metrics.search_time += time.perf_counter() - t2
            errors.append(f"{m.schema.name}: {exc}")
            log.info("schema %s failed on %s: %s", m.schema.name, problem.name, exc)
            continue
        metrics.search_time += time.perf_counter() - t2
        metrics.evaluated_states += ab.evaluated_states
        metrics.plan_length = len(plan)
        check = validate_plan(problem, plan, concrete)
        if not check:
            errors.append(f"{m.schema.name}: invalid plan at step {check.index}: {check.reason}")
            continue
        return PlanResult("ok", plan, ab.plan, m.schema.name, metrics)
    return PlanResult("unsolved", schema=matches[0].schema.name, metrics=metrics, reason="; ".join(errors))
