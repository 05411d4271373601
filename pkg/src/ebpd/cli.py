"""``ebpd`` command-line front end.

Exit codes: 0 success, 1 no applicable schema / unsolved, 2 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

from . import parser as ebpd_parser
from .learner import LearnConfig, learn_schema
from .loops import format_tables, rolled_string
from .model import (AbstractionHierarchy, ActivitySchema, Experience, HierarchyError, PlanningDomain,
                    TaskProblem, validate_domain)
from .planner import PlannerConfig, retrieve, solve
from .scope import to_dot, to_json
from .sexpr import ParseError
from .sim import validate_plan
from .stack import bundled, classify_problems, gen_experience, gen_stack

log = logging.getLogger("ebpd")

CSV_COLUMNS = ["problem_id", "class", "blocks", "status", "retrieval_time", "search_time",
               "evaluated_states", "plan_length", "schema", "reason"]


class InputError(Exception):
    pass


def _load(path, kind):
    try:
        obj = ebpd_parser.load(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    if not isinstance(obj, kind):
        raise InputError(f"{path}: expected a {kind.__name__}, found {type(obj).__name__}")
    return obj


@dataclass
class Library:
    schemas: list
    concrete: PlanningDomain
    abstract: PlanningDomain
    hierarchy: AbstractionHierarchy


def load_library(schema_dir: Optional[str], domain=None, abstract=None, hierarchy=None) -> Library:
    """Schemata from `schema_dir`; domains and hierarchy from flags, then from
    files in the directory, then the bundled stacking-blocks set."""
    b = bundled()
    found = {"concrete": None, "abstract": None, "hierarchy": None}
    schemas = []
    if schema_dir:
        d = Path(schema_dir)
        if not d.is_dir():
            raise InputError(f"{schema_dir}: not a directory")
        for f in sorted(d.glob("*.ebpd")):
            obj = ebpd_parser.load(f)
            if isinstance(obj, ActivitySchema):
                schemas.append(obj)
            elif isinstance(obj, AbstractionHierarchy):
                found["hierarchy"] = obj
            elif isinstance(obj, PlanningDomain):
                found["abstract" if obj.level == "abstract" else "concrete"] = obj
    return Library(
        schemas,
        _load(domain, PlanningDomain) if domain else found["concrete"] or b.concrete,
        _load(abstract, PlanningDomain) if abstract else found["abstract"] or b.abstract,
        _load(hierarchy, AbstractionHierarchy) if hierarchy else found["hierarchy"] or b.hierarchy,
    )


def _out(path) -> Path:
    """Output path with its directory created."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _config(args) -> PlannerConfig:
    return PlannerConfig(depth_bound=args.depth_bound, tie_break=args.tie_break)


def _format_record(rec: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rec)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerow(rec)
    return buf.getvalue().rstrip("\n")


def _record(pid, cls, blocks, result) -> dict:
    m = result.metrics
    return {"problem_id": pid, "class": cls, "blocks": blocks, "status": result.status,
            "retrieval_time": f"{m.retrieval_time:.6f}", "search_time": f"{m.search_time:.6f}",
            "evaluated_states": m.evaluated_states, "plan_length": m.plan_length,
            "schema": result.schema or "", "reason": result.reason}


# ---------------------------------------------------------------- commands

def cmd_learn(args) -> int:
    lib = load_library(None, args.domain, args.abstract, args.hierarchy)
    diags = validate_domain(lib.concrete, lib.hierarchy, lib.abstract)
    for d in diags:
        print(d, file=sys.stderr)
    if any(d.severity == "error" for d in diags):
        return 2
    exp = _load(args.experience, Experience)
    schema = learn_schema(exp, lib.hierarchy, LearnConfig(tokens=args.tokens, name=args.name))
    out = _out(args.out)
    ebpd_parser.save(schema, out, header=f"activity schema learned from {exp.name}")
    graph = _out(args.graph) if args.graph else out.with_suffix(".scope.json")
    graph.write_text(to_json(schema.scope), encoding="utf-8")
    if args.dot:
        _out(args.dot).write_text(to_dot(schema.scope), encoding="utf-8")
    loops, summaries = len(schema.loops()), len(schema.scope.summaries())
    print(f"wrote {out} ({loops} loop{'' if loops == 1 else 's'}, "
          f"{summaries} summary node{'' if summaries == 1 else 's'}) and {graph}")
    return 0


def cmd_retrieve(args) -> int:
    lib = load_library(args.schemas, args.domain, args.abstract, args.hierarchy)
    problem = _load(args.problem, TaskProblem)
    t0 = time.perf_counter()
    matches = retrieve(problem, lib.schemas, lib.hierarchy)
    ms = (time.perf_counter() - t0) * 1000
    if not matches:
        print(f"no applicable schema ({ms:.2f} ms)")
        return 1
    for rank, m in enumerate(matches, start=1):
        print(f"{rank} {m.schema.name}")
    print(f"; retrieval {ms:.2f} ms over {len(lib.schemas)} schemata")
    return 0


def cmd_plan(args) -> int:
    lib = load_library(args.schemas, args.domain, args.abstract, args.hierarchy)
    problem = _load(args.problem, TaskProblem)
    result = solve(problem, lib.schemas, lib.hierarchy, lib.abstract, lib.concrete, _config(args))
    rec = _record(problem.name, "", "", result)
    if result.status != "ok":
        print(f"{result.status}: {result.reason}", file=sys.stderr)
        print(_format_record(rec, args.format), file=sys.stderr)
        return 1
    m = result.metrics
    lines = [str(a) for a in result.plan]
    lines.append(f"; metrics retrieval_time={m.retrieval_time:.6f} search_time={m.search_time:.6f} "
                 f"evaluated_states={m.evaluated_states} plan_length={m.plan_length} schema={result.schema}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _out(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.metrics:
        _out(args.metrics).write_text(_format_record(rec, args.format) + "\n", encoding="utf-8")
    return 0


@lru_cache(maxsize=4)
def _worker_library(schema_dir):
    return load_library(schema_dir)


def _bench_one(entry: dict, schema_dir: str, base: str, config: PlannerConfig) -> dict:
    lib = _worker_library(schema_dir)
    cls, blocks = entry.get("class", ""), entry.get("blocks", "")
    try:
        if "file" in entry:
            problem = ebpd_parser.load(Path(base) / entry["file"])
        else:
            problem = gen_stack(int(cls), int(blocks), seed=entry.get("seed", 0))
        pid = entry.get("id", problem.name)
        result = solve(problem, lib.schemas, lib.hierarchy, lib.abstract, lib.concrete, config)
        if result.status == "ok" and not validate_plan(problem, result.plan, lib.concrete):
            result.status, result.reason = "invalid", "plan failed validation"
        return _record(pid, cls, blocks, result)
    except Exception as exc:  # one bad problem must not stop the suite
        return {"problem_id": entry.get("id", entry.get("file", "?")), "class": cls, "blocks": blocks,
                "status": "error", "retrieval_time": "0", "search_time": "0", "evaluated_states": 0,
                "plan_length": 0, "schema": "", "reason": f"{type(exc).__name__}: {exc}"}


def run_bench(manifest: dict, schema_dir: str, base: str = ".", jobs: int = 1,
              config: Optional[PlannerConfig] = None) -> list[dict]:
    config = config or PlannerConfig()
    entries = manifest.get("problems", [])
    if jobs > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(_bench_one, e, schema_dir, base, config) for e in entries]
            return [f.result() for f in futs]
    return [_bench_one(e, schema_dir, base, config) for e in entries]


def summarize(rows: list[dict]) -> dict:
    by = {}
    for r in rows:
        s = by.setdefault(str(r["class"]), {"n": 0, "ok": 0, "plan_length": 0.0, "evaluated_states": 0.0,
                                            "search_time": 0.0})
        s["n"] += 1
        if r["status"] == "ok":
            s["ok"] += 1
            s["plan_length"] += float(r["plan_length"])
            s["evaluated_states"] += float(r["evaluated_states"])
            s["search_time"] += float(r["search_time"])
    for s in by.values():
        for k in ("plan_length", "evaluated_states", "search_time"):
            s[k] = s[k] / s["ok"] if s["ok"] else 0.0
    return by


def cmd_bench(args) -> int:
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    schema_dir = args.schemas
    if schema_dir is None and "schemas" in manifest:
        schema_dir = str(path.parent / manifest["schemas"])
    rows = run_bench(manifest, schema_dir, str(path.parent), args.jobs, _config(args))
    out = open(_out(args.out), "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        if args.format == "json":
            json.dump(rows, out, indent=2)
            out.write("\n")
        else:
            w = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    failed = sum(r["status"] != "ok" for r in rows)
    for cls, s in sorted(summarize(rows).items()):
        print(f"class {cls}: {s['ok']}/{s['n']} solved, mean plan length {s['plan_length']:.1f}, "
              f"mean evaluated states {s['evaluated_states']:.1f}", file=sys.stderr)
    print(f"{len(rows) - failed} ok, {failed} failed", file=sys.stderr)
    return 0


def cmd_loops(args) -> int:
    tokens = args.tokens[0] if len(args.tokens) == 1 else list(args.tokens)
    sys.stdout.write(format_tables(tokens))
    print(f"\nrolled: {rolled_string(tokens)}")
    return 0


def cmd_gen_stack(args) -> int:
    if args.experience:
        obj = gen_experience(args.problem_class, args.blocks)
    else:
        obj = gen_stack(args.problem_class, args.blocks, seed=args.seed)
    text = ebpd_parser.serialize(obj)
    if args.out:
        _out(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_classify(args) -> int:
    lib = load_library(None, hierarchy=args.hierarchy)
    problems = [_load(p, TaskProblem) for p in args.problems]
    cells = classify_problems(problems, lib.hierarchy)
    for i, cell in enumerate(cells, start=1):
        print(f"cell {i}: {' '.join(p.name for p in cell)}")
    return 0


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ebpd", description="Learn and apply activity schemata.")
    sub = ap.add_subparsers(dest="command", required=True)

    def files(p):
        p.add_argument("--domain", help="concrete domain file (default: bundled stacking-blocks)")
        p.add_argument("--abstract", help="abstract domain file")
        p.add_argument("--hierarchy", help="abstraction hierarchy file")

    def planning(p):
        p.add_argument("--depth-bound", type=int, default=8, help="max nil actions inserted per step")
        p.add_argument("--tie-break", choices=("lex", "reverse"), default="lex")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("learn", help="learn a schema from an experience")
    files(p)
    p.add_argument("experience")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--graph", help="scope graph JSON (default: <out>.scope.json)")
    p.add_argument("--dot", help="also write the scope as Graphviz")
    p.add_argument("--tokens", choices=("roles", "name"), default="roles")
    p.add_argument("--name")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("retrieve", help="list schemata applicable to a problem")
    files(p)
    p.add_argument("problem")
    p.add_argument("schemas")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("plan", help="solve a problem with a schema library")
    files(p)
    planning(p)
    p.add_argument("problem")
    p.add_argument("schemas")
    p.add_argument("-o", "--out")
    p.add_argument("--metrics", help="write the metrics record here")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run a JSON problem manifest")
    planning(p)
    p.add_argument("manifest")
    p.add_argument("--schemas", help="schema directory (default: manifest 'schemas' key)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="unused by solving; kept for manifests")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("loops", help="print suffix-array / repeat tables for a token string")
    p.add_argument("tokens", nargs="+", help="one string of 1-char tokens, or several tokens")
    p.set_defaults(func=cmd_loops)

    p = sub.add_parser("gen-stack", help="generate a stacking-blocks problem")
    p.add_argument("--class", dest="problem_class", type=int, choices=(1, 2, 3, 4), required=True)
    p.add_argument("--blocks", type=int, required=True, help="blocks of each colour")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--experience", action="store_true", help="emit a solved experience instead")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_gen_stack)

    p = sub.add_parser("classify", help="group problems by their abstract structure")
    p.add_argument("--hierarchy")
    p.add_argument("problems", nargs="+")
    p.set_defaults(func=cmd_classify)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("EBPD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InputError, HierarchyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
