"""Fixed-width bitvector evaluation and the equivalence oracle."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .expr import Const, Expr, Op, Unary, Var, check_width, free_vars, mask
from .rng import XorShift64Star

EXHAUSTIVE_BUDGET_BITS = 24
_CHUNK = 1 << 14


class UnboundVariable(KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(name)

    def __str__(self) -> str:
        return f"unbound variable {self.name!r}"


class BudgetExceeded(ValueError):
    pass


class Equivalence(enum.Enum):
    EQUIVALENT = "Equivalent"
    NOT_EQUIVALENT = "NotEquivalent"
    PROBABLY_EQUIVALENT = "ProbablyEquivalent"


@dataclass
class EquivVerdict:
    status: Equivalence
    counterexample: dict[str, int] | None = None
    assignments_checked: int = 0
    # (method, width, count) per phase, e.g. ("exhaustive", 8, 65536)
    phases: list[tuple[str, int, int]] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.status is not Equivalence.NOT_EQUIVALENT

    def describe(self) -> str:
        if self.status is Equivalence.NOT_EQUIVALENT:
            env = ", ".join(f"{k}={v}" for k, v in (self.counterexample or {}).items())
            return f"NotEquivalent (counterexample: {env or 'no variables'})"
        parts = []
        for method, width, count in self.phases:
            if method == "exhaustive":
                unit = "assignments"
            else:
                unit = "samples"
            parts.append(f"{method} at width {width}, {count} {unit}")
        if self.status is Equivalence.EQUIVALENT and len(self.phases) == 1:
            return f"Equivalent (exhaustive, {self.assignments_checked} assignments)"
        return f"{self.status.value} ({'; '.join(parts)})"


def evaluate(e: Expr, env: Mapping[str, int], width: int) -> int:
    """Value of ``e`` under ``env`` with all arithmetic modulo ``2**width``."""
    m = mask(width)

    def go(node: Expr) -> int:
        if isinstance(node, Const):
            return node.value & m
        if isinstance(node, Var):
            try:
                return env[node.name] & m
            except KeyError:
                raise UnboundVariable(node.name) from None
        if isinstance(node, Unary):
            v = go(node.child)
            return (-v) & m if node.op is Op.NEG else v ^ m
        a = go(node.left)
        if node.op is Op.SHL:
            # the amount is a count, not a ring element: never reduce it
            b = node.right.value if isinstance(node.right, Const) else go(node.right)
            return (a << b) & m if b < width else 0
        b = go(node.right)
        op = node.op
        if op is Op.ADD:
            return (a + b) & m
        if op is Op.SUB:
            return (a - b) & m
        if op is Op.MUL:
            return (a * b) & m
        if op is Op.AND:
            return a & b
        if op is Op.OR:
            return a | b
        if op is Op.XOR:
            return a ^ b
        raise AssertionError(op)

    return go(e)


def evaluate_many(e: Expr, columns: Mapping[str, np.ndarray], width: int) -> np.ndarray:
    """Vectorised :func:`evaluate` over uint64 columns.

    Every operator commutes with reduction modulo ``2**width``, so the tree is
    computed in wrapping 64-bit arithmetic and masked once at the end.
    Repeated subterms are computed once per call.
    """
    check_width(width)
    n = len(next(iter(columns.values()))) if columns else 1
    seen: dict[Expr, np.ndarray] = {}

    def go(node: Expr) -> np.ndarray:
        hit = seen.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = np.full(n, node.value, dtype=np.uint64)
        elif isinstance(node, Var):
            try:
                out = columns[node.name]
            except KeyError:
                raise UnboundVariable(node.name) from None
        elif isinstance(node, Unary):
            v = go(node.child)
            out = np.negative(v) if node.op is Op.NEG else np.invert(v)
        elif node.op is Op.SHL:
            a = go(node.left)
            if isinstance(node.right, Const):
                c = node.right.value
                out = a << np.uint64(c) if c < width else np.zeros(n, dtype=np.uint64)
            else:
                b = go(node.right) & np.uint64(mask(width))
                big = b >= np.uint64(width)
                out = np.where(big, np.uint64(0), a << np.where(big, np.uint64(0), b))
        else:
            a, b = go(node.left), go(node.right)
            op = node.op
            if op is Op.ADD:
                out = a + b
            elif op is Op.SUB:
                out = a - b
            elif op is Op.MUL:
                out = a * b
            elif op is Op.AND:
                out = a & b
            elif op is Op.OR:
                out = a | b
            else:
                out = a ^ b
        seen[node] = out
        return out

    with np.errstate(over="ignore"):
        return go(e) & np.uint64(mask(width))


def _joint_vars(a: Expr, b: Expr) -> list[str]:
    names = free_vars(a)
    names += [v for v in free_vars(b) if v not in names]
    return names


def equiv_exhaustive(a: Expr, b: Expr, width: int) -> EquivVerdict:
    """Compare on every assignment. The first listed variable is the most
    significant digit of the enumeration order."""
    names = _joint_vars(a, b)
    total_bits = len(names) * width
    if total_bits > EXHAUSTIVE_BUDGET_BITS:
        raise BudgetExceeded(
            f"{len(names)} variables x {width} bits exceeds the {EXHAUSTIVE_BUDGET_BITS}-bit budget"
        )
    total = 1 << total_bits
    m = np.uint64(mask(width))
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.uint64)
        columns = {}
        for k, name in enumerate(names):
            shift = np.uint64((len(names) - 1 - k) * width)
            columns[name] = (idx >> shift) & m
        diff = np.flatnonzero(evaluate_many(a, columns, width) != evaluate_many(b, columns, width))
        if diff.size:
            i = int(diff[0])
            cex = {name: int(col[i]) for name, col in columns.items()}
            return EquivVerdict(Equivalence.NOT_EQUIVALENT, cex, start + i + 1,
                                [("exhaustive", width, start + i + 1)])
    return EquivVerdict(Equivalence.EQUIVALENT, None, total, [("exhaustive", width, total)])


def random_columns(names: list[str], width: int, samples: int, seed: int) -> dict[str, np.ndarray]:
    """Sample-major draw: sample i takes the next len(names) outputs in
    variable order, each masked to ``width`` bits."""
    gen = XorShift64Star(seed)
    m = mask(width)
    raw = [gen.next_u64() & m for _ in range(samples * len(names))]
    arr = np.array(raw, dtype=np.uint64).reshape(samples, max(len(names), 1)) if names else None
    return {name: np.ascontiguousarray(arr[:, k]) for k, name in enumerate(names)}


def equiv_random(a: Expr, b: Expr, width: int, samples: int = 10000, seed: int = 0) -> EquivVerdict:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    names = _joint_vars(a, b)
    if not names:
        # a variable-free pair has one input; sampling it once decides it
        same = evaluate(a, {}, width) == evaluate(b, {}, width)
        status = Equivalence.PROBABLY_EQUIVALENT if same else Equivalence.NOT_EQUIVALENT
        return EquivVerdict(status, None if same else {}, samples, [("random", width, samples)])
    columns = random_columns(names, width, samples, seed)
    diff = np.flatnonzero(evaluate_many(a, columns, width) != evaluate_many(b, columns, width))
    if diff.size:
        i = int(diff[0])
        cex = {name: int(col[i]) for name, col in columns.items()}
        return EquivVerdict(Equivalence.NOT_EQUIVALENT, cex, i + 1, [("random", width, i + 1)])
    return EquivVerdict(Equivalence.PROBABLY_EQUIVALENT, None, samples, [("random", width, samples)])


def verify(a: Expr, b: Expr, width: int, samples: int = 10000, seed: int = 0) -> EquivVerdict:
    """Combined policy: exhaustive at the widest width the budget allows, plus
    random sampling at full width when the exhaustive pass was narrower.

    Narrowing is sound for refutation: every operator commutes with reduction
    modulo a smaller power of two, so a counterexample at the reduced width is
    also one at full width.
    """
    n = len(_joint_vars(a, b))
    reduced = width if n == 0 else min(width, EXHAUSTIVE_BUDGET_BITS // n)
    if reduced < 1:
        verdict = equiv_random(a, b, width, samples, seed)
        return verdict
    first = equiv_exhaustive(a, b, reduced)
    if not first.holds or reduced == width:
        return first
    second = equiv_random(a, b, width, samples, seed)
    phases = first.phases + second.phases
    checked = first.assignments_checked + second.assignments_checked
    return EquivVerdict(second.status, second.counterexample, checked, phases)
