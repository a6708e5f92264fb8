#!/usr/bin/env python3
"""Write the a*2 / a<<1 e-graph before and after saturation as DOT, and
render to SVG when Graphviz is installed."""

import argparse
import shutil
import subprocess
from pathlib import Path

from egmba.egraph import EGraph, dump_dot
from egmba.expr import parse
from egmba.rewrite import default_ruleset, saturate


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="figures")
    p.add_argument("--width", type=int, default=64)
    args = p.parse_args(argv)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    g = EGraph(args.width)
    g.add_expr(parse("a*2", args.width))
    g.add_expr(parse("a<<1", args.width))
    (out / "initial.dot").write_text(dump_dot(g))
    saturate(g, default_ruleset(args.width))
    (out / "saturated.dot").write_text(dump_dot(g))

    dot = shutil.which("dot")
    for name in ("initial", "saturated"):
        if dot:
            subprocess.run([dot, "-Tsvg", str(out / f"{name}.dot"), "-o", str(out / f"{name}.svg")], check=True)
        print(out / f"{name}.dot")


if __name__ == "__main__":
    main()
