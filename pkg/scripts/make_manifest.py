"""Write the 60-problem stacking evaluation manifest for ``ebpd bench``.

    python3 scripts/make_manifest.py -o bench/manifest.json
    ebpd bench bench/manifest.json --schemas src/ebpd/data/stacking-blocks/library -o bench/results.csv
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

# same sizes and seeds as the acceptance suite
SIZES = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 18, 20]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("-o", "--out", default="manifest.json")
    ap.add_argument("--schemas", help="schema directory, relative to the manifest")
    args = ap.parse_args()
    problems = [{"id": f"c{c}-n{n}", "class": c, "blocks": n, "seed": 100 * c + i}
                for c in (1, 2, 3, 4) for i, n in enumerate(SIZES)]
    manifest = {"problems": problems}
    if args.schemas:
        manifest["schemas"] = args.schemas
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(problems)} problems to {out}")


if __name__ == "__main__":
    main()
