"""One-call simplification: preprocess, saturate, extract."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .egraph import EGraph
from .expr import Expr, ast_size, preprocess
from .extract import AST_SIZE, CostModel, extract_best
from .rewrite import BackoffScheduler, RuleSet, SaturationLimits, SaturationReport, default_ruleset, saturate


@dataclass
class Simplification:
    input: Expr  # preprocessed
    output: Expr
    input_size: int
    output_size: int
    report: SaturationReport
    millis: float
    egraph: EGraph
    root: int


def simplify(
    e: Expr,
    width: int = 64,
    rules: RuleSet | None = None,
    limits: SaturationLimits | None = None,
    scheduler: BackoffScheduler | None = BackoffScheduler(),
    cost: CostModel = AST_SIZE,
) -> Simplification:
    start = time.perf_counter()
    pre = preprocess(e, width)
    g = EGraph(width)
    root = g.add_expr(pre)
    report = saturate(g, default_ruleset(width) if rules is None else rules, limits, scheduler)
    best = extract_best(g, root, cost)
    millis = (time.perf_counter() - start) * 1000
    return Simplification(pre, best.expr, ast_size(pre), ast_size(best.expr), report, millis, g, g.find(root))
