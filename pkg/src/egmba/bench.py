"""Dataset loading, the benchmark harness, reports and corpus generation."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

from .expr import Binary, Const, Expr, ParseError, ast_size, parse, preprocess, render
from .rewrite import (
    ALL_GROUPS, BackoffScheduler, Group, PConst, PVar, Pattern, Rule,
    SaturationLimits, default_ruleset, pattern_size, pattern_vars,
)
from .rng import XorShift64Star
from .semantics import Equivalence, equiv_random, verify
from .simplify import simplify

log = logging.getLogger(__name__)

SKIPPED = "Skipped"
CSV_HEADER = ["index", "input_size", "output_size", "verified", "success", "millis", "stop_reason", "output"]


@dataclass(frozen=True)
class DatasetEntry:
    index: int
    obfuscated: str
    ground_truth: str | None = None


def load_dataset(path: str | os.PathLike, width: int = 64, check_ground_truth: bool = True) -> list[DatasetEntry]:
    """Read ``obfuscated[,ground_truth]`` lines; ``#`` comments and blank
    lines are skipped. Ground truths that disagree with their expression
    are logged, not rejected."""
    text = Path(path).read_text(encoding="utf-8")
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        obf, _, gt = line.partition(",")
        obf, gt = obf.strip(), gt.strip() or None
        parsed = []
        for part in (obf, gt):
            if part is None:
                continue
            try:
                parsed.append(preprocess(parse(part, width), width))
            except ParseError as err:
                raise ParseError(err.position, err.message, line=lineno) from None
        entry = DatasetEntry(len(entries), obf, gt)
        if gt is not None and check_ground_truth:
            verdict = equiv_random(parsed[0], parsed[1], width, samples=256, seed=lineno)
            if not verdict.holds:
                log.warning("line %d: ground truth is not equivalent (counterexample %s)",
                            lineno, verdict.counterexample)
        entries.append(entry)
    return entries


def write_dataset(entries: Iterable[DatasetEntry], path: str | os.PathLike | None = None, header: str = "") -> str:
    lines = [f"# {ln}" if ln else "#" for ln in header.splitlines()]
    for e in entries:
        lines.append(e.obfuscated if e.ground_truth is None else f"{e.obfuscated},{e.ground_truth}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# --- harness ----------------------------------------------------------------

@dataclass(frozen=True)
class BenchConfig:
    width: int = 64
    limits: SaturationLimits = SaturationLimits()
    groups: tuple = ALL_GROUPS
    scheduler: BackoffScheduler | None = BackoffScheduler()
    verify: bool = True
    samples: int = 10000
    seed: int = 0
    allow_equal: bool = False
    timing: bool = True

    def ruleset(self) -> list[Rule]:
        return default_ruleset(self.width, self.groups)


@dataclass
class EntryResult:
    index: int
    input_size: int
    output_size: int
    output: str
    verified: str
    success: bool
    millis: int
    stop_reason: str
    matched_gt: bool | None = None


@dataclass
class BenchReport:
    total: int
    successes: int
    failures: int
    success_rate: float
    simplification_ratio: float
    total_seconds: float
    per_entry: list = field(default_factory=list)
    dataset: str = ""

    @classmethod
    def from_entries(cls, rows: Sequence[EntryResult], dataset: str = "") -> "BenchReport":
        rows = sorted(rows, key=lambda r: r.index)
        wins = [r for r in rows if r.success]
        total = len(rows)
        rate = round(100 * len(wins) / total, 2) if total else 0.0
        ratio = round(100 * sum(1 - r.output_size / r.input_size for r in wins) / len(wins), 2) if wins else 0.0
        seconds = round(sum(r.millis for r in rows) / 1000, 3)
        return cls(total, len(wins), total - len(wins), rate, ratio, seconds, list(rows), dataset)

    @classmethod
    def from_json(cls, text: str) -> "BenchReport":
        data = json.loads(text)
        data["per_entry"] = [EntryResult(**row) for row in data["per_entry"]]
        return cls(**data)


def _run_entry(args: tuple[DatasetEntry, BenchConfig]) -> EntryResult:
    entry, config = args
    width = config.width
    source = parse(entry.obfuscated, width)
    result = simplify(source, width, config.ruleset(), config.limits, config.scheduler)
    verified = SKIPPED
    if config.verify:
        verified = verify(result.output, result.input, width, config.samples, config.seed).status.value
    smaller = result.output_size <= result.input_size if config.allow_equal else result.output_size < result.input_size
    success = verified in (Equivalence.EQUIVALENT.value, Equivalence.PROBABLY_EQUIVALENT.value) and smaller
    matched = None
    if entry.ground_truth is not None:
        matched = result.output_size <= ast_size(preprocess(parse(entry.ground_truth, width), width))
    return EntryResult(
        index=entry.index,
        input_size=result.input_size,
        output_size=result.output_size,
        output=render(result.output, width, sugar=True),
        verified=verified,
        success=success,
        millis=round(result.millis) if config.timing else 0,
        stop_reason=result.report.stop_reason.value,
        matched_gt=matched,
    )


def run_benchmark(entries: Sequence[DatasetEntry], config: BenchConfig = BenchConfig(),
                  jobs: int = 1, dataset: str = "") -> BenchReport:
    """Simplify and verify every entry; only the simplify phase is timed.
    Rows are assembled in index order whatever ``jobs`` is."""
    work = [(e, config) for e in entries]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_entry, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        rows = [_run_entry(w) for w in work]
    return BenchReport.from_entries(rows, dataset)


# --- reports ----------------------------------------------------------------

def summary_line(r: BenchReport) -> str:
    return (f"{r.dataset or 'dataset'}: total {r.total}, success {r.successes}, failure {r.failures}, "
            f"success rate {r.success_rate:.2f}%, simplification ratio {r.simplification_ratio:.2f}%, "
            f"time {r.total_seconds:.2f}s")


def _text_table(r: BenchReport) -> str:
    head = ["Dataset", "# of Total expression", "# of Success", "# of Failure",
            "Success Rate", "Simplification Ratio", "Time (s)"]
    row = [r.dataset or "dataset", str(r.total), str(r.successes), str(r.failures),
           f"{r.success_rate:.2f}%", f"{r.simplification_ratio:.2f}%", f"{r.total_seconds:.2f}"]
    widths = [max(len(a), len(b)) for a, b in zip(head, row)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return fmt.format(*head).rstrip() + "\n" + fmt.format(*row).rstrip() + "\n"


def write_report(r: BenchReport, fmt: str = "text") -> bytes:
    if fmt == "json":
        data = {f.name: getattr(r, f.name) for f in fields(r)}
        data["per_entry"] = [asdict(row) for row in r.per_entry]
        return (json.dumps(data, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in r.per_entry:
            writer.writerow([row.index, row.input_size, row.output_size, row.verified,
                             "true" if row.success else "false", row.millis, row.stop_reason, row.output])
        return buf.getvalue().encode()
    if fmt == "text":
        return _text_table(r).encode()
    raise ValueError(f"unknown report format {fmt!r}")


# --- corpus generation ------------------------------------------------------

class GenerationFailed(RuntimeError):
    pass


def expansion_rules(width: int) -> list[Rule]:
    """Catalog entries of the MBA-bridge and arithmetic-identity groups, run
    backwards, keeping those that grow the term and bind all their
    variables. Order follows the catalog."""
    out, seen = [], set()
    for rule in default_ruleset(width, (Group.MBA_BRIDGE, Group.ARITH_ID)):
        if rule.dynamic:
            continue
        lhs, rhs = rule.rhs, rule.lhs
        if pattern_size(rhs) <= pattern_size(lhs):
            continue
        if not set(pattern_vars(rhs)) <= set(pattern_vars(lhs)):
            continue
        if (lhs, rhs) in seen:
            continue
        seen.add((lhs, rhs))
        # reversing a "-rev" entry gives back the forward rule
        name = rule.name[:-4] if rule.name.endswith("-rev") else rule.name + "^-1"
        out.append(Rule(name, lhs, rhs, False, rule.group))
    return out


def _match_tree(p: Pattern, e: Expr, binding: dict) -> bool:
    if isinstance(p, PVar):
        if p.name in binding:
            return binding[p.name] == e
        binding[p.name] = e
        return True
    if isinstance(p, PConst):
        return isinstance(e, Const) and e.value == p.value
    return isinstance(e, Binary) and e.op == p.op and _match_tree(p.left, e.left, binding) \
        and _match_tree(p.right, e.right, binding)


def _build_tree(p: Pattern, binding: dict) -> Expr:
    if isinstance(p, PVar):
        return binding[p.name]
    if isinstance(p, PConst):
        return Const(p.value)
    return Binary(p.op, _build_tree(p.left, binding), _build_tree(p.right, binding))


def _positions(e: Expr, path=()):
    """(path, subterm) pairs in pre-order; a path is a tuple of 0/1 steps."""
    yield path, e
    if isinstance(e, Binary):
        yield from _positions(e.left, path + (0,))
        yield from _positions(e.right, path + (1,))


def _replace(e: Expr, path: tuple, new: Expr) -> Expr:
    if not path:
        return new
    if path[0] == 0:
        return Binary(e.op, _replace(e.left, path[1:], new), e.right)
    return Binary(e.op, e.left, _replace(e.right, path[1:], new))


def expand_once(e: Expr, rules: Sequence[Rule], gen: XorShift64Star) -> Expr | None:
    """Pick a rule uniformly among those that match somewhere, then one of
    its match positions uniformly, and rewrite there.

    Padding rules (bare-variable lhs such as ``x -> x+0``) match everywhere
    and are only considered when no other rule matches.
    """
    structural = [r for r in rules if not isinstance(r.lhs, PVar)]
    padding = [r for r in rules if isinstance(r.lhs, PVar)]
    return _expand_with(e, structural, gen) or _expand_with(e, padding, gen)


def _expand_with(e: Expr, rules: Sequence[Rule], gen: XorShift64Star) -> Expr | None:
    sites = []
    for rule in rules:
        hits = []
        for path, sub in _positions(e):
            binding = {}
            if _match_tree(rule.lhs, sub, binding):
                hits.append((path, binding))
        if hits:
            sites.append((rule, hits))
    if not sites:
        return None
    rule, hits = gen.choice(sites)
    path, binding = gen.choice(hits)
    return _replace(e, path, _build_tree(rule.rhs, binding))


def generate_corpus(
    seed_exprs: Sequence[Expr],
    count: int,
    rng_seed: int = 0,
    n_rewrites: tuple[int, int] = (2, 5),
    width: int = 64,
    max_attempts: int = 16,
) -> list[DatasetEntry]:
    """Obfuscate random seeds with ``n_rewrites`` random expansions each.

    Entry i draws, from one generator seeded with ``rng_seed``: a seed index,
    a rewrite count in the inclusive range, then one (rule, site) choice per
    rewrite. Outputs are verified against their seed before emission.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not seed_exprs:
        raise ValueError("no seed expressions")
    lo, hi = n_rewrites
    if not 1 <= lo <= hi:
        raise ValueError(f"bad rewrite range {n_rewrites}")
    rules = expansion_rules(width)
    gen = XorShift64Star(rng_seed)
    seeds = [preprocess(s, width) for s in seed_exprs]
    entries = []
    for index in range(count):
        for _ in range(max_attempts):
            seed = gen.choice(seeds)
            steps = gen.between(lo, hi)
            e = seed
            for _ in range(steps):
                nxt = expand_once(e, rules, gen)
                if nxt is None:
                    break
                e = nxt
            if ast_size(e) > ast_size(seed):
                break
        else:
            raise GenerationFailed(f"entry {index}: no growing rewrite sequence in {max_attempts} attempts")
        verdict = verify(e, seed, width, samples=1000, seed=index)
        if not verdict.holds:
            raise GenerationFailed(f"entry {index}: expansion changed semantics ({verdict.describe()})")
        entries.append(DatasetEntry(index, render(e, width, sugar=True), render(seed, width, sugar=True)))
    return entries


def read_seeds(path: str | os.PathLike, width: int = 64) -> list[Expr]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse(line, width))
        except ParseError as err:
            raise ParseError(err.position, err.message, line=lineno) from None
    return out
