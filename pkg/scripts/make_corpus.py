#!/usr/bin/env python3
"""Regenerate the bundled corpus from the bundled seeds.

Equivalent to
    egmba gen src/egmba/data/seeds.txt --count 60 --seed 0xC0FFEE -o src/egmba/data/corpus.txt
"""

import argparse
import sys
from pathlib import Path

from egmba.cli import main

DATA = Path(__file__).resolve().parents[1] / "src" / "egmba" / "data"


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", default=str(DATA / "seeds.txt"))
    p.add_argument("--out", default=str(DATA / "corpus.txt"))
    p.add_argument("--count", type=int, default=60)
    p.add_argument("--seed", default="0xC0FFEE")
    p.add_argument("--check", action="store_true", help="compare with --out instead of overwriting it")
    return p.parse_args(argv)


if __name__ == "__main__":
    args = parse_args()
    argv = ["gen", args.seeds, "--count", str(args.count), "--seed", args.seed]
    if not args.check:
        sys.exit(main(argv + ["-o", args.out]))
    tmp = Path(args.out).with_suffix(".check")
    code = main(argv + ["-o", str(tmp)])
    same = code == 0 and tmp.read_bytes() == Path(args.out).read_bytes()
    tmp.unlink(missing_ok=True)
    print("corpus is up to date" if same else "corpus differs from a fresh generation")
    sys.exit(0 if same else 1)
