"""Patterns, e-matching, the MBA rule catalog and equality saturation."""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from .egraph import CONST, EClassId, EGraph, fold
from .expr import Binary, Const, Expr, Op, Var, mask, parse, preprocess


# --- patterns ---------------------------------------------------------------

@dataclass(frozen=True)
class PVar:
    name: str
    # only binds classes whose constant analysis is known
    const: bool = False


@dataclass(frozen=True)
class PConst:
    value: int


@dataclass(frozen=True)
class PNode:
    op: Op
    left: "Pattern"
    right: "Pattern"


Pattern = Union[PVar, PConst, PNode]
Subst = dict  # pattern variable name -> EClassId


def pattern(text: str, width: int, consts: Iterable[str] = ()) -> Pattern:
    """Pattern from expression syntax: variables become pattern variables and
    those named in ``consts`` only match constant classes."""
    consts = set(consts)

    def go(e: Expr) -> Pattern:
        if isinstance(e, Const):
            return PConst(e.value)
        if isinstance(e, Var):
            return PVar(e.name, e.name in consts)
        return PNode(e.op, go(e.left), go(e.right))

    return go(preprocess(parse(text, width), width))


def pattern_vars(p: Pattern) -> list[str]:
    if isinstance(p, PVar):
        return [p.name]
    if isinstance(p, PConst):
        return []
    out = pattern_vars(p.left)
    out += [v for v in pattern_vars(p.right) if v not in out]
    return out


def const_vars(p: Pattern) -> list[str]:
    if isinstance(p, PVar):
        return [p.name] if p.const else []
    if isinstance(p, PConst):
        return []
    out = const_vars(p.left)
    out += [v for v in const_vars(p.right) if v not in out]
    return out


def pattern_to_expr(p: Pattern, binding: dict[str, Expr] | None = None) -> Expr:
    if isinstance(p, PVar):
        return binding[p.name] if binding and p.name in binding else Var(p.name)
    if isinstance(p, PConst):
        return Const(p.value)
    return Binary(p.op, pattern_to_expr(p.left, binding), pattern_to_expr(p.right, binding))


def pattern_size(p: Pattern) -> int:
    if isinstance(p, PNode):
        return 1 + pattern_size(p.left) + pattern_size(p.right)
    return 1


# --- rules ------------------------------------------------------------------

class Group(enum.Enum):
    STRUCTURAL = "structural"
    ARITH_ID = "arithid"
    BOOL_ID = "boolid"
    MBA_BRIDGE = "mbabridge"
    CONST_FOLD = "constfold"


ALL_GROUPS = tuple(Group)

DynamicRhs = Callable[[dict], Optional[Pattern]]


class DynamicRhsError(RuntimeError):
    pass


@dataclass(frozen=True)
class Rule:
    name: str
    lhs: Pattern
    rhs: Union[Pattern, DynamicRhs]
    bidirectional: bool
    group: Group

    @property
    def dynamic(self) -> bool:
        return callable(self.rhs)

    def __post_init__(self):
        if not self.dynamic:
            missing = set(pattern_vars(self.rhs)) - set(pattern_vars(self.lhs))
            if missing:
                raise ValueError(f"rule {self.name}: rhs variables {sorted(missing)} not bound by lhs")


RuleSet = list  # list[Rule]; one entry per direction


def parse_groups(text: str) -> tuple[Group, ...]:
    """``"structural,boolid"`` -> groups; ``"all"`` selects every group."""
    if text.strip().lower() == "all":
        return ALL_GROUPS
    lookup = {g.value: g for g in Group}
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        if part not in lookup:
            raise ValueError(f"unknown rule group {part!r}; expected one of {', '.join(lookup)}")
        out.append(lookup[part])
    return tuple(out)


def default_ruleset(width: int = 64, groups: Iterable[Group] | None = None) -> RuleSet:
    """The rule catalog with the all-ones mask of ``width`` baked in.

    Bidirectional entries appear twice, the reverse named ``<name>-rev``.
    Commutativity is its own reverse and appears once.
    """
    m = mask(width)
    rules: list[Rule] = []

    def rw(name, lhs, rhs, group, both=False, consts=()):
        lp = pattern(lhs, width, consts)
        rp = pattern(rhs, width, consts)
        rules.append(Rule(name, lp, rp, both, group))
        if both:
            rules.append(Rule(name + "-rev", rp, lp, True, group))

    s, a, b, mb = Group.STRUCTURAL, Group.ARITH_ID, Group.BOOL_ID, Group.MBA_BRIDGE

    for op in "add", "mul", "and", "or", "xor":
        sym = {"add": "+", "mul": "*", "and": "&", "or": "|", "xor": "^"}[op]
        rw(f"comm-{op}", f"x{sym}y", f"y{sym}x", s)
    for op in "add", "mul", "and", "or", "xor":
        sym = {"add": "+", "mul": "*", "and": "&", "or": "|", "xor": "^"}[op]
        rw(f"assoc-{op}", f"(x{sym}y){sym}z", f"x{sym}(y{sym}z)", s, both=True)

    rw("add-0", "x+0", "x", a)
    rw("mul-0", "x*0", "0", a)
    rw("mul-1", "x*1", "x", a)
    rw("sub-0", "x-0", "x", a)
    rw("sub-self", "x-x", "0", a)
    rw("add-same", "x+x", "2*x", a)
    rw("neg-def", "0-y", f"(y^{m})+1", a, both=True)
    rw("sub-via-neg", "x-y", "x+(0-y)", a, both=True)
    rw("add-sub-cancel", "(x+y)-y", "x", a)
    rw("sub-add-cancel", "(x-y)+y", "x", a)
    rw("add-neg-cancel", "x+(0-x)", "0", a)
    rw("distribute", "x*(y+z)", "x*y+x*z", a, both=True)

    def shl_to_mul(c):
        return PNode(Op.MUL, PVar("x"), PConst((1 << c["k"]) & m if c["k"] < width else 0))

    def mul_to_shl(c):
        k = c["k"]
        if k == 0 or k & (k - 1):
            return None
        return PNode(Op.SHL, PVar("x"), PConst(k.bit_length() - 1))

    k = PVar("k", const=True)
    rules.append(Rule("shl-to-mul", PNode(Op.SHL, PVar("x"), k), shl_to_mul, True, a))
    rules.append(Rule("shl-to-mul-rev", PNode(Op.MUL, PVar("x"), k), mul_to_shl, True, a))

    rw("and-self", "x&x", "x", b)
    rw("or-self", "x|x", "x", b)
    rw("xor-self", "x^x", "0", b)
    rw("and-0", "x&0", "0", b)
    rw("and-mask", f"x&{m}", "x", b)
    rw("or-0", "x|0", "x", b)
    rw("or-mask", f"x|{m}", f"{m}", b)
    rw("xor-0", "x^0", "x", b)
    rw("absorb-and", "x&(x|y)", "x", b)
    rw("absorb-or", "x|(x&y)", "x", b)
    rw("and-or-distrib", "x&(y|z)", "(x&y)|(x&z)", b, both=True)
    rw("or-and-distrib", "x|(y&z)", "(x|y)&(x|z)", b, both=True)
    rw("demorgan-and", f"(x&y)^{m}", f"(x^{m})|(y^{m})", b, both=True)
    rw("demorgan-or", f"(x|y)^{m}", f"(x^{m})&(y^{m})", b, both=True)
    rw("not-not", f"(x^{m})^{m}", "x", b)

    rw("mba-add1", "x+y", "(x|y)+(x&y)", mb, both=True)
    rw("mba-add2", "x+y", "(x^y)+2*(x&y)", mb, both=True)
    rw("mba-or", "x|y", f"x+((x^{m})&y)", mb, both=True)
    rw("mba-xor", "x^y", "(x|y)-(x&y)", mb, both=True)
    rw("mba-and", "x&y", "(x|y)-(x^y)", mb, both=True)
    rw("mba-sub", "x-y", f"(x&(y^{m}))-((x^{m})&y)", mb, both=True)

    for op in (Op.ADD, Op.SUB, Op.MUL, Op.AND, Op.OR, Op.XOR, Op.SHL):
        rules.append(_fold_rule(op, width))

    if groups is not None:
        wanted = set(groups)
        rules = [r for r in rules if r.group in wanted]
    return rules


def _fold_rule(op: Op, width: int) -> Rule:
    def rhs(c):
        return PConst(fold(int(op), c["a"], c["b"], width))

    lhs = PNode(op, PVar("a", True), PVar("b", True))
    return Rule(f"fold-{op.name.lower()}", lhs, rhs, False, Group.CONST_FOLD)


def rule_instances(rule: Rule, const_values: Iterable[int]) -> Iterator[tuple[Expr, Expr]]:
    """(lhs, rhs) expression pairs for checking a rule.

    Ordinary variables stay free. For a dynamic rule every assignment of its
    constant variables drawn from ``const_values`` is instantiated; assignments
    the rule declines (rhs ``None``) are skipped.
    """
    if not rule.dynamic:
        yield pattern_to_expr(rule.lhs), pattern_to_expr(rule.rhs)
        return
    names = const_vars(rule.lhs)
    values = list(const_values)
    for combo in itertools.product(values, repeat=len(names)):
        consts = dict(zip(names, combo))
        rhs = rule.rhs(consts)
        if rhs is None:
            continue
        binding = {n: Const(v) for n, v in consts.items()}
        yield pattern_to_expr(rule.lhs, binding), pattern_to_expr(rhs, binding)


def without_groups(rules: Sequence[Rule], groups: Iterable[Group]) -> RuleSet:
    drop = set(groups)
    return [r for r in rules if r.group not in drop]


# --- e-matching -------------------------------------------------------------

class Snapshot:
    """Read-only matching view of a clean e-graph.

    ``children[cid][op]`` lists the (left, right) child ids of the class's
    binary nodes with that operator. A class that already holds a constant
    leaf is exposed as that leaf only: its other nodes stay in the graph (and
    stay extractable) but are not matched through, which keeps folded
    constants from multiplying matches.
    """

    def __init__(self, g: EGraph):
        self.g = g
        self.children: dict[EClassId, dict[int, list]] = {}
        self.consts: dict[EClassId, int] = {}
        self.const_class: dict[int, EClassId] = {}
        self.by_op: dict[int, list[EClassId]] = {}
        for cid in sorted(g.classes):
            cls = g.classes[cid]
            if cls.const is not None:
                self.consts[cid] = cls.const
            groups: dict[int, list] = {}
            folded = False
            for node in cls.nodes:
                if node[0] == CONST:
                    self.const_class[node[1]] = cid
                    folded = True
                elif len(node) == 3:
                    groups.setdefault(node[0], []).append((node[1], node[2]))
            if folded:
                groups = {}
            self.children[cid] = groups
            for op in groups:
                self.by_op.setdefault(op, []).append(cid)


def _compile(p: Pattern, slots: dict[str, int]):
    """Matcher ``m(snapshot, cid, subst) -> list of substs``; a subst is a
    tuple indexed by ``slots`` with None for unbound variables."""
    if isinstance(p, PVar):
        idx, const = slots[p.name], p.const

        def match_var(snap, cid, s):
            bound = s[idx]
            if bound is None:
                if const and cid not in snap.consts:
                    return ()
                return (s[:idx] + (cid,) + s[idx + 1:],)
            return (s,) if bound == cid else ()
        return match_var

    if isinstance(p, PConst):
        value = p.value

        def match_const(snap, cid, s):
            return (s,) if snap.const_class.get(value) == cid else ()
        return match_const

    op = int(p.op)
    left, right = _compile(p.left, slots), _compile(p.right, slots)

    def match_node(snap, cid, s):
        pairs = snap.children[cid].get(op)
        if not pairs:
            return ()
        out = []
        for a, b in pairs:
            for s1 in left(snap, a, s):
                out.extend(right(snap, b, s1))
        return out
    return match_node


_COMPILED: dict = {}


def _matcher(p: Pattern):
    hit = _COMPILED.get(p)
    if hit is None:
        names = sorted(pattern_vars(p))
        slots = {n: i for i, n in enumerate(names)}
        hit = (names, _compile(p, slots))
        _COMPILED[p] = hit
    return hit


def ematch(g: EGraph, p: Pattern, snapshot: Snapshot | None = None) -> list[tuple[EClassId, Subst]]:
    """All (class, substitution) pairs where ``p`` is represented.

    Ordered by class id, then by the substitution's values in sorted
    variable-name order; nonlinear variables must bind one class.
    """
    if not g.clean:
        raise RuntimeError("ematch requires a rebuilt e-graph")
    snap = snapshot or Snapshot(g)
    names, m = _matcher(p)
    empty = (None,) * len(names)
    if isinstance(p, PNode):
        roots = snap.by_op.get(int(p.op), ())
    elif isinstance(p, PConst):
        cid = snap.const_class.get(p.value)
        roots = () if cid is None else (cid,)
    else:
        roots = sorted(g.classes)
    out = []
    for cid in roots:
        found = m(snap, cid, empty)
        if not found:
            continue
        for key in sorted(set(found)):
            out.append((cid, dict(zip(names, key))))
    return out


def instantiate(g: EGraph, p: Pattern, subst: Subst) -> EClassId:
    if isinstance(p, PVar):
        return subst[p.name]
    if isinstance(p, PConst):
        return g.add((CONST, p.value))
    return g.add((int(p.op), instantiate(g, p.left, subst), instantiate(g, p.right, subst)))


def resolve_rhs(g: EGraph, rule: Rule, subst: Subst) -> Pattern | None:
    if not rule.dynamic:
        return rule.rhs
    consts = {}
    for name in const_vars(rule.lhs):
        value = g.const_of(subst[name])
        if value is None:
            raise DynamicRhsError(f"rule {rule.name}: variable {name} is not constant")
        consts[name] = value
    return rule.rhs(consts)


def expands(rule: Rule) -> bool:
    return not rule.dynamic and pattern_size(rule.rhs) > pattern_size(rule.lhs)


def _present(g: EGraph, p: Pattern, subst: Subst) -> EClassId | None:
    if isinstance(p, PVar):
        return subst[p.name]
    if isinstance(p, PConst):
        return g.lookup((CONST, p.value))
    left = _present(g, p.left, subst)
    if left is None:
        return None
    right = _present(g, p.right, subst)
    if right is None:
        return None
    return g.lookup((int(p.op), left, right))


def grounded(g: EGraph, rule: Rule, subst: Subst) -> bool:
    """True when every subterm of the rhs below its root already exists."""
    rhs = rule.rhs
    if not isinstance(rhs, PNode):
        return True
    return _present(g, rhs.left, subst) is not None and _present(g, rhs.right, subst) is not None


def apply_matches(g: EGraph, rule: Rule, matches: Sequence[tuple[EClassId, Subst]]) -> int:
    """Add each instantiated rhs and union it with the matched class; returns
    the number of unions that merged two distinct classes."""
    merged = 0
    for cid, subst in matches:
        rhs = resolve_rhs(g, rule, subst)
        if rhs is None:
            continue
        new = instantiate(g, rhs, subst)
        if g.union(cid, new)[1]:
            merged += 1
    return merged


# --- saturation ---------------------------------------------------------------

class StopReason(enum.Enum):
    SATURATED = "Saturated"
    ITERATION_LIMIT = "IterationLimit"
    NODE_LIMIT = "NodeLimit"
    TIME_LIMIT = "TimeLimit"


@dataclass(frozen=True)
class SaturationLimits:
    max_iterations: int = 30
    max_nodes: int = 50000
    max_millis: int = 5000

    def __post_init__(self):
        if self.max_iterations < 0 or self.max_nodes < 1 or self.max_millis < 1:
            raise ValueError("saturation limits must be positive")


@dataclass(frozen=True)
class BackoffScheduler:
    """Decides which matches are applied each iteration.

    A rule producing more than ``match_limit << bans`` matches in one
    iteration is skipped for ``ban_length << bans`` iterations. With
    ``guard_expansions``, a rule whose rhs is larger than its lhs only fires
    where every operator subterm of the instantiated rhs below its root is
    already in the graph, so expansions connect existing terms instead of
    inventing new ones. Everything is count-based, so runs are reproducible.
    """
    match_limit: int = 50
    ban_length: int = 5
    guard_expansions: bool = True


@dataclass
class SaturationReport:
    stop_reason: StopReason
    iterations: int
    nodes_start: int
    nodes_end: int
    millis: int
    trajectory: list = field(default_factory=list)  # node count after each iteration
    applied: dict = field(default_factory=dict)  # rule name -> merges


def saturate(
    g: EGraph,
    rules: Sequence[Rule],
    limits: SaturationLimits | None = None,
    scheduler: BackoffScheduler | None = BackoffScheduler(),
) -> SaturationReport:
    """Run match/apply/rebuild rounds until nothing changes or a limit trips.

    Every rule is matched against the same rebuilt graph before any
    application, so rule order never changes the result. Iteration and node
    limits are checked between iterations; the time limit (process CPU time,
    so parallel runs do not perturb it) is also checked between rule
    searches. ``scheduler=None`` applies every match every round.
    """
    limits = limits or SaturationLimits()
    if not g.clean:
        g.rebuild()
    start = time.perf_counter()
    cpu_start = time.process_time()
    nodes_start = g.node_count
    banned_until = {r.name: 0 for r in rules}
    times_banned = {r.name: 0 for r in rules}
    applied = {r.name: 0 for r in rules}
    trajectory = []
    iteration = 0

    def out_of_time():
        return (time.process_time() - cpu_start) * 1000 > limits.max_millis

    def report(reason):
        millis = int((time.perf_counter() - start) * 1000)
        return SaturationReport(reason, iteration, nodes_start, g.node_count, millis, trajectory, applied)

    while True:
        if iteration >= limits.max_iterations:
            return report(StopReason.ITERATION_LIMIT)
        if g.node_count > limits.max_nodes:
            return report(StopReason.NODE_LIMIT)
        if out_of_time():
            return report(StopReason.TIME_LIMIT)

        snap = Snapshot(g)
        scheduled = []
        any_banned = False
        for rule in rules:
            if iteration < banned_until[rule.name]:
                any_banned = True
                continue
            matches = ematch(g, rule.lhs, snap)
            if scheduler is not None and scheduler.guard_expansions and expands(rule):
                matches = [(cid, sub) for cid, sub in matches if grounded(g, rule, sub)]
            if scheduler is not None:
                threshold = scheduler.match_limit << times_banned[rule.name]
                if len(matches) > threshold:
                    banned_until[rule.name] = iteration + (scheduler.ban_length << times_banned[rule.name])
                    times_banned[rule.name] += 1
                    any_banned = True
                    continue
            scheduled.append((rule, matches))
            if out_of_time():
                # abandon the round before touching the graph
                return report(StopReason.TIME_LIMIT)

        changed = 0
        for rule, matches in scheduled:
            merged = apply_matches(g, rule, matches)
            applied[rule.name] += merged
            changed += merged
        changed += g.rebuild()
        iteration += 1
        trajectory.append(g.node_count)

        if changed == 0:
            if not any_banned:
                return report(StopReason.SATURATED)
            # only banned rules could still change something: unban the earliest now
            waiting = [banned_until[r.name] for r in rules if banned_until[r.name] > iteration]
            if waiting:
                delta = min(waiting) - iteration
                for name in banned_until:
                    banned_until[name] = max(0, banned_until[name] - delta)
