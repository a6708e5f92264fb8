#!/usr/bin/env python3
"""Benchmark summary table over one or more dataset files.

Prints the summary table per dataset, and optionally ablations over rule
groups (each group removed in turn) on the same data.
"""

import argparse
import logging
from dataclasses import replace
from pathlib import Path

from egmba.bench import BenchConfig, load_dataset, run_benchmark, summary_line, write_report
from egmba.rewrite import ALL_GROUPS, SaturationLimits

DATA = Path(__file__).resolve().parents[1] / "src" / "egmba" / "data"


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("datasets", nargs="*", default=[str(DATA / "corpus.txt")])
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--ablate", action="store_true", help="also run with each rule group removed")
    p.add_argument("--csv-dir", help="write per-entry CSV reports here")
    return p.parse_args(argv)


def run(path, config, jobs, label, csv_dir):
    entries = load_dataset(path, config.width)
    report = run_benchmark(entries, config, jobs=jobs, dataset=label)
    print(summary_line(report))
    if csv_dir:
        out = Path(csv_dir) / f"{label}.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(write_report(report, "csv"))
    return report


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    base = BenchConfig(width=args.width, samples=args.samples,
                       limits=SaturationLimits(max_iterations=args.iters))
    for path in args.datasets:
        stem = Path(path).stem
        report = run(path, base, args.jobs, stem, args.csv_dir)
        print(write_report(report, "text").decode(), end="")
        if args.ablate:
            for group in ALL_GROUPS:
                groups = tuple(g for g in ALL_GROUPS if g is not group)
                run(path, replace(base, groups=groups), args.jobs, f"{stem}-no-{group.value}", args.csv_dir)


if __name__ == "__main__":
    main()
