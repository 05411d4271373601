"""Regenerate the bundled stack experiences and the learned schema library.

    python3 scripts/build_library.py [--blocks 4]
"""
from __future__ import annotations

import argparse
from pathlib import Path

from ebpd.learner import learn_schema
from ebpd.parser import save
from ebpd.scope import to_json
from ebpd.stack import bundled, data_dir, gen_experience

HEADER = ("Reconstruction: scripted class-{c} solution with {n} blue and {n} red blocks,\n"
          "keys are the static facts, the full initial state and the full final state.")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--blocks", type=int, default=4)
    ap.add_argument("--out", default=str(data_dir() / "stacking-blocks"))
    args = ap.parse_args()
    out = Path(args.out)
    lib = out / "library"
    lib.mkdir(parents=True, exist_ok=True)
    h = bundled().hierarchy
    for c in (1, 2, 3, 4):
        e = gen_experience(c, args.blocks)
        save(e, out / f"experience-class{c}.ebpd", HEADER.format(c=c, n=args.blocks))
        m = learn_schema(e, h)
        save(m, lib / f"stack-class{c}.ebpd", f"learned from experience-class{c}.ebpd")
        (lib / f"stack-class{c}.scope.json").write_text(to_json(m.scope), encoding="utf-8")
        print(f"class {c}: {len(e.plan)} actions, {len(m.loops())} loops")


if __name__ == "__main__":
    main()
