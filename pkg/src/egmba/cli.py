"""Command-line front end: simplify, batch, verify, dump, gen."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .bench import (
    BenchConfig, SKIPPED, generate_corpus, load_dataset, read_seeds, run_benchmark,
    summary_line, write_dataset, write_report,
)
from .egraph import EGraph, dump_dot
from .expr import ParseError, check_width, parse, preprocess, render
from .rewrite import (
    ALL_GROUPS, BackoffScheduler, Group, SaturationLimits, default_ruleset, parse_groups, saturate,
)
from .semantics import Equivalence, verify
from .simplify import simplify

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_EQUIVALENT = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for NotEquivalent here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class CliConfig:
    width: int = 64
    max_iterations: int = 30
    max_nodes: int = 50000
    max_millis: int = 5000
    groups: tuple = ALL_GROUPS
    const_fold: bool = True
    seed: int = 0
    samples: int = 10000
    output_format: str = "text"
    verify: bool = True
    timing: bool = True
    jobs: int = 1
    allow_equal: bool = False

    def __post_init__(self):
        check_width(self.width)
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def active_groups(self) -> tuple:
        if self.const_fold:
            return self.groups
        return tuple(g for g in self.groups if g is not Group.CONST_FOLD)

    def limits(self) -> SaturationLimits:
        return SaturationLimits(self.max_iterations, self.max_nodes, self.max_millis)

    def bench(self) -> BenchConfig:
        return BenchConfig(
            width=self.width, limits=self.limits(), groups=self.active_groups,
            scheduler=BackoffScheduler(), verify=self.verify, samples=self.samples,
            seed=self.seed, allow_equal=self.allow_equal, timing=self.timing,
        )

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "CliConfig":
        return cls(
            width=ns.width, max_iterations=ns.iters, max_nodes=ns.nodes, max_millis=ns.timeout_ms,
            groups=ns.groups, const_fold=not ns.no_const_fold, seed=ns.seed, samples=ns.samples,
            output_format=ns.output, verify=not ns.no_verify, timing=not ns.no_timing,
            jobs=ns.jobs, allow_equal=ns.allow_equal,
        )


def _groups(text: str) -> tuple:
    try:
        return parse_groups(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--width", type=int, default=64, help="bit width w, 1..64 (default: 64)")
    g.add_argument("--iters", type=int, default=30, help="saturation iteration limit (default: 30)")
    g.add_argument("--nodes", type=int, default=50000, help="e-node limit (default: 50000)")
    g.add_argument("--timeout-ms", type=int, default=5000, help="saturation time limit in ms (default: 5000)")
    g.add_argument("--groups", type=_groups, default=ALL_GROUPS,
                   help="comma-separated rule groups: structural,arithid,boolid,mbabridge,constfold or all")
    g.add_argument("--no-const-fold", action="store_true", help="drop the constant-folding rules")
    g.add_argument("--seed", type=lambda s: int(s, 0), default=0,
                   help="seed for random verification, or the corpus seed for gen (hex ok)")
    g.add_argument("--samples", type=int, default=10000, help="random verification samples (default: 10000)")
    g.add_argument("--output", choices=("text", "json", "csv"), default="text", help="output format")
    g.add_argument("--no-verify", action="store_true", help="skip verification of simplified output")
    g.add_argument("--no-timing", action="store_true", help="report all timings as 0")
    g.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="batch worker processes")
    g.add_argument("--allow-equal", action="store_true", help="count size-preserving results as successes")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="egmba", description="Equality-saturation simplifier for MBA expressions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simplify", parents=[common], help="simplify one expression")
    p.add_argument("expr")

    p = sub.add_parser("batch", parents=[common], help="benchmark a dataset file")
    p.add_argument("dataset")
    p.add_argument("--report", metavar="PATH", help="write the report here instead of standard output")
    p.add_argument("--name", help="dataset name for the summary (default: file stem)")

    p = sub.add_parser("verify", parents=[common], help="check two expressions for equivalence")
    p.add_argument("expr_a")
    p.add_argument("expr_b")

    p = sub.add_parser("dump", parents=[common], help="print the e-graph as Graphviz DOT")
    p.add_argument("expr")
    p.add_argument("--stage", choices=("before", "after"), default="after")

    p = sub.add_parser("gen", parents=[common], help="generate an obfuscated corpus from seed expressions")
    p.add_argument("seeds")
    p.add_argument("--count", type=int, default=60)
    p.add_argument("--min-rewrites", type=int, default=2)
    p.add_argument("--max-rewrites", type=int, default=5)
    p.add_argument("-o", "--out", metavar="PATH", help="output file (default: standard output)")
    return parser


def _err(msg: str) -> None:
    print(f"egmba: error: {msg}", file=sys.stderr)


def _parse(text: str, width: int):
    return preprocess(parse(text, width), width)


def cmd_simplify(expr_text: str, config: CliConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        source = parse(expr_text, config.width)
        result = simplify(source, config.width, default_ruleset(config.width, config.active_groups),
                          config.limits(), BackoffScheduler())
    except ParseError as err:
        _err(f"parse error: {err}")
        return EXIT_ERROR
    verified = SKIPPED
    if config.verify:
        verified = verify(result.output, result.input, config.width, config.samples, config.seed).status.value
    row = {
        "input": render(result.input, config.width, sugar=True),
        "output": render(result.output, config.width, sugar=True),
        "input_size": result.input_size,
        "output_size": result.output_size,
        "stop_reason": result.report.stop_reason.value,
        "millis": round(result.millis) if config.timing else 0,
        "verified": verified,
    }
    if config.output_format == "json":
        out.write(json.dumps(row, indent=2) + "\n")
    elif config.output_format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        w.writeheader()
        w.writerow(row)
        out.write(buf.getvalue())
    else:
        out.write(row["output"] + "\n")
    if verified == Equivalence.NOT_EQUIVALENT.value:
        _err(f"output is not equivalent to the input: {row['output']}")
        return EXIT_NOT_EQUIVALENT
    return EXIT_OK


def cmd_batch(dataset_path: str, config: CliConfig, report_path: str | None = None,
              name: str | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        entries = load_dataset(dataset_path, config.width)
    except (OSError, UnicodeDecodeError) as err:
        _err(f"cannot read dataset: {err}")
        return EXIT_ERROR
    except ParseError as err:
        _err(f"{dataset_path}: {err}")
        return EXIT_ERROR
    report = run_benchmark(entries, config.bench(), jobs=config.jobs,
                           dataset=name or Path(dataset_path).stem)
    payload = write_report(report, config.output_format)
    line = summary_line(report)
    if report_path is not None:
        try:
            Path(report_path).write_bytes(payload)
        except OSError as err:
            _err(f"cannot write report: {err}")
            return EXIT_ERROR
        out.write(line + "\n")
    elif config.output_format == "text":
        out.write(payload.decode() + line + "\n")
    else:
        # keep standard output machine-readable
        out.write(payload.decode())
        print(line, file=sys.stderr)
    return EXIT_OK


def cmd_verify(expr_a: str, expr_b: str, config: CliConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        a = _parse(expr_a, config.width)
        b = _parse(expr_b, config.width)
    except ParseError as err:
        _err(f"parse error: {err}")
        return EXIT_ERROR
    verdict = verify(a, b, config.width, config.samples, config.seed)
    out.write(verdict.describe() + "\n")
    return EXIT_OK if verdict.holds else EXIT_NOT_EQUIVALENT


def cmd_dump(expr_text: str, config: CliConfig, stage: str = "after", out=None) -> int:
    out = out or sys.stdout
    if stage not in ("before", "after"):
        _err(f"invalid stage {stage!r}; expected before or after")
        return EXIT_ERROR
    try:
        e = _parse(expr_text, config.width)
    except ParseError as err:
        _err(f"parse error: {err}")
        return EXIT_ERROR
    g = EGraph(config.width)
    g.add_expr(e)
    g.rebuild()
    if stage == "after":
        saturate(g, default_ruleset(config.width, config.active_groups), config.limits(), BackoffScheduler())
    out.write(dump_dot(g))
    return EXIT_OK


def cmd_gen(seeds_path: str, count: int, config: CliConfig, out_path: str | None = None,
            n_rewrites: tuple[int, int] = (2, 5), out=None) -> int:
    out = out or sys.stdout
    try:
        seeds = read_seeds(seeds_path, config.width)
    except (OSError, UnicodeDecodeError) as err:
        _err(f"cannot read seeds: {err}")
        return EXIT_ERROR
    except ParseError as err:
        _err(f"{seeds_path}: {err}")
        return EXIT_ERROR
    try:
        entries = generate_corpus(seeds, count, config.seed, n_rewrites, config.width)
    except ValueError as err:
        _err(str(err))
        return EXIT_ERROR
    header = (f"generated: {count} entries, rng seed {config.seed:#x}, "
              f"{n_rewrites[0]}-{n_rewrites[1]} rewrites, seeds {Path(seeds_path).name}\n"
              "obfuscated,ground_truth")
    text = write_dataset(entries, header=header)
    if out_path is None:
        out.write(text)
        return EXIT_OK
    try:
        Path(out_path).write_text(text, encoding="utf-8")
    except OSError as err:
        _err(f"cannot write corpus: {err}")
        return EXIT_ERROR
    return EXIT_OK


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        config = CliConfig.from_args(ns)
    except ValueError as err:
        _err(str(err))
        return EXIT_ERROR
    if ns.command == "simplify":
        return cmd_simplify(ns.expr, config)
    if ns.command == "batch":
        return cmd_batch(ns.dataset, config, ns.report, ns.name)
    if ns.command == "verify":
        return cmd_verify(ns.expr_a, ns.expr_b, config)
    if ns.command == "dump":
        return cmd_dump(ns.expr, config, ns.stage)
    if ns.command == "gen":
        return cmd_gen(ns.seeds, ns.count, config, ns.out, (ns.min_rewrites, ns.max_rewrites))
    raise AssertionError(ns.command)


if __name__ == "__main__":
    sys.exit(main())
