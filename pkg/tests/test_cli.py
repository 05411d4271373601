from __future__ import annotations

import csv
import io
import json
import shutil

import pytest

from ebpd import cli
from ebpd.parser import load, save
from ebpd.stack import data_dir, gen_stack

from strategies import contradictory

LIB = data_dir() / "stacking-blocks" / "library"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def problem_file(tmp_path):
    path = tmp_path / "p.ebpd"
    save(gen_stack(2, 3, seed=4), path)
    return path


def test_learn_writes_schema_and_graph(tmp_path, capsys):
    out = tmp_path / "s.ebpd"
    code, text, _ = run(capsys, "learn", data_dir() / "stacking-blocks" / "experience-class1.ebpd",
                        "-o", out, "--dot", tmp_path / "s.dot")
    assert code == 0 and "2 loops" in text and "2 summary nodes" in text
    schema = load(out)
    assert len(schema.loops()) == 2
    graph = json.loads((tmp_path / "s.scope.json").read_text())
    assert sum(n["summary"] for n in graph["nodes"]) == 2
    assert (tmp_path / "s.dot").read_text().startswith("digraph")


def test_outputs_create_missing_directories(tmp_path, capsys):
    out = tmp_path / "new" / "lib" / "s.ebpd"
    code, _, _ = run(capsys, "learn", data_dir() / "stacking-blocks" / "experience-class1.ebpd", "-o", out)
    assert code == 0 and out.exists() and out.with_suffix(".scope.json").exists()
    code, _, _ = run(capsys, "gen-stack", "--class", 2, "--blocks", 2, "-o", tmp_path / "p" / "x.ebpd")
    assert code == 0 and (tmp_path / "p" / "x.ebpd").exists()


def test_learn_identity_hierarchy(tmp_path, capsys):
    from ebpd.learner import generalize
    from ebpd.model import AbstractionHierarchy
    d = data_dir() / "stacking-blocks"
    ident = tmp_path / "ident.ebpd"
    save(AbstractionHierarchy.identity(load(d / "concrete.ebpd")), ident)
    out = tmp_path / "s.ebpd"
    code, _, _ = run(capsys, "learn", "--hierarchy", ident, "--abstract", d / "concrete.ebpd",
                     d / "experience-class1.ebpd", "-o", out, "--tokens", "name")
    assert code == 0
    plan = [op.head.predicate for op in load(out).operators()]
    assert set(plan) == {a.predicate for a in generalize(load(d / "experience-class1.ebpd")).plan}


def test_learn_missing_entry_exits_2(tmp_path, capsys):
    d = data_dir() / "stacking-blocks"
    text = (d / "hierarchy.ebpd").read_text()
    lines = [l for l in text.splitlines() if "(move " not in l]
    bad = tmp_path / "h.ebpd"
    bad.write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "learn", "--hierarchy", bad, d / "experience-class1.ebpd", "-o", tmp_path / "s")
    assert code == 2 and "move" in err


def test_retrieve(problem_file, tmp_path, capsys):
    code, out, _ = run(capsys, "retrieve", problem_file, LIB)
    assert code == 0
    ranked = [l for l in out.splitlines() if not l.startswith(";")]
    assert ranked == ["1 stack-c2-n4"]
    (tmp_path / "empty").mkdir()
    code, out, _ = run(capsys, "retrieve", problem_file, tmp_path / "empty")
    assert code == 1 and "no applicable schema" in out


def test_plan_writes_plan_and_metrics(problem_file, tmp_path, capsys):
    out, metrics = tmp_path / "plan.txt", tmp_path / "m.csv"
    code, _, _ = run(capsys, "plan", problem_file, LIB, "-o", out, "--metrics", metrics)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[-1].startswith("; metrics") and "plan_length=" in lines[-1]
    rows = list(csv.DictReader(io.StringIO(metrics.read_text())))
    assert rows[0]["plan_length"] == str(len(lines) - 1)
    code, _, _ = run(capsys, "plan", problem_file, LIB, "--format", "json", "--metrics", metrics)
    assert code == 0 and json.loads(metrics.read_text())["status"] == "ok"


def test_plan_without_schema_exits_1(problem_file, tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    code, _, err = run(capsys, "plan", problem_file, tmp_path / "empty")
    assert code == 1 and "no-schema" in err


def test_input_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ebpd"
    bad.write_text("(define (problem p) (:task (t a)")
    assert run(capsys, "plan", bad, LIB)[0] == 2
    assert run(capsys, "plan", tmp_path / "missing.ebpd", LIB)[0] == 2
    assert run(capsys, "retrieve", data_dir() / "stacking-blocks" / "concrete.ebpd", LIB)[0] == 2
    assert run(capsys, "gen-stack", "--class", "1", "--blocks", "0")[0] == 2
    assert run(capsys, "bench", tmp_path / "nope.json")[0] == 2


def test_gen_stack_and_classify(tmp_path, capsys):
    files = []
    for cls in (1, 3):
        for n in (2, 4):
            f = tmp_path / f"c{cls}n{n}.ebpd"
            assert run(capsys, "gen-stack", "--class", cls, "--blocks", n, "--seed", 1, "-o", f)[0] == 0
            files.append(f)
    code, out, _ = run(capsys, "classify", *files)
    assert code == 0 and len(out.splitlines()) == 2
    code, out, _ = run(capsys, "gen-stack", "--class", "1", "--blocks", "4", "--experience")
    assert code == 0 and out.startswith("(define (experience")


def test_loops_command(capsys):
    code, out, _ = run(capsys, "loops", "abacacacdedfdfgh")
    assert code == 0 and out.rstrip().endswith("rolled: ab(ac)*de(df)*gh")
    code, out, _ = run(capsys, "loops", "pick", "stack", "pick", "stack")
    assert code == 0 and "(pickstack)*" in out


def test_bench_header_only(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"problems": []}))
    out = tmp_path / "r.csv"
    code, _, _ = run(capsys, "bench", m, "--schemas", LIB, "-o", out)
    assert code == 0
    assert out.read_text().splitlines() == [",".join(cli.CSV_COLUMNS)]


def test_bench_records_one_failure(tmp_path, capsys):
    problems = [{"class": c, "blocks": 2 + i % 4, "seed": i, "id": f"c{c}-{i}"}
                for c in (1, 2, 3, 4) for i in range(15)]
    save(contradictory(gen_stack(1, 2, seed=0)), tmp_path / "bad.ebpd")
    problems[0] = {"file": "bad.ebpd", "class": 1, "blocks": 2}
    shutil.copytree(LIB, tmp_path / "lib")
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"schemas": "lib", "problems": problems}))
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "bench", m, "--jobs", 2, "--format", "json", "-o", out)
    assert code == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 60
    assert sum(r["status"] == "ok" for r in rows) == 59
    assert rows[0]["status"] == "unsolved" and rows[0]["reason"]
    assert "59 ok, 1 failed" in err


def test_summarize_means():
    rows = [{"class": 1, "status": "ok", "plan_length": 10, "evaluated_states": 4, "search_time": "0.5"},
            {"class": 1, "status": "ok", "plan_length": 20, "evaluated_states": 6, "search_time": "1.5"},
            {"class": 1, "status": "unsolved", "plan_length": 0, "evaluated_states": 0, "search_time": "0"}]
    s = cli.summarize(rows)["1"]
    assert (s["n"], s["ok"], s["plan_length"], s["evaluated_states"], s["search_time"]) == (3, 2, 15, 5, 1.0)
