"""Hashconsed e-graph with deferred congruence repair.

E-nodes are plain tuples so they hash fast: ``(CONST, value)``,
``(VAR, name)`` or ``(op, left_id, right_id)`` with ``op`` an int from
:class:`~egmba.expr.Op`. E-class ids are ints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Tuple, Union

from .expr import MAX_WIDTH, Const, Expr, Op, SYMBOL, Unary, Var, mask

CONST, VAR = int(Op.CONST), int(Op.VAR)
ADD, SUB, MUL = int(Op.ADD), int(Op.SUB), int(Op.MUL)
AND, OR, XOR, SHL = int(Op.AND), int(Op.OR), int(Op.XOR), int(Op.SHL)

ENode = Tuple[Union[int, str], ...]
EClassId = int


class AnalysisConflict(RuntimeError):
    """Two different constants were merged: some rule is unsound."""


def fold(op: int, a: int, b: int, width: int) -> int:
    """Value of a binary operator on two constants."""
    m = (1 << width) - 1
    if op == ADD:
        return (a + b) & m
    if op == SUB:
        return (a - b) & m
    if op == MUL:
        return (a * b) & m
    if op == AND:
        return a & b
    if op == OR:
        return a | b
    if op == XOR:
        return a ^ b
    if op == SHL:
        return (a << b) & m if b < width else 0
    raise ValueError(f"not a binary operator: {op}")


@dataclass
class EClass:
    id: EClassId
    nodes: list = field(default_factory=list)
    # (parent e-node as stored in the hashcons, the class it belongs to)
    parents: list = field(default_factory=list)
    const: int | None = None


class EGraph:
    def __init__(self, width: int = MAX_WIDTH):
        self.width = width
        self.mask = mask(width)
        self.parent: list[int] = []
        self.hashcons: dict[ENode, EClassId] = {}
        self.classes: dict[EClassId, EClass] = {}
        self.pending: list[tuple[ENode, EClassId]] = []
        self.analysis_pending: list[tuple[ENode, EClassId]] = []

    # -- union-find ---------------------------------------------------------

    def find(self, a: EClassId) -> EClassId:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def canonicalize(self, node: ENode) -> ENode:
        if len(node) == 3:
            find = self.find
            return (node[0], find(node[1]), find(node[2]))
        return node

    # -- queries ------------------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self.hashcons)

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def __len__(self) -> int:
        return len(self.classes)

    def eclasses(self) -> Iterator[EClass]:
        for cid in sorted(self.classes):
            yield self.classes[cid]

    def lookup(self, node: ENode) -> EClassId | None:
        cid = self.hashcons.get(self.canonicalize(node))
        return None if cid is None else self.find(cid)

    def lookup_expr(self, e: Expr) -> EClassId | None:
        """Class representing ``e`` without adding anything, or None."""
        if isinstance(e, Const):
            return self.lookup((CONST, e.value & self.mask))
        if isinstance(e, Var):
            return self.lookup((VAR, e.name))
        if isinstance(e, Unary):
            raise ValueError("e-graph terms must be preprocessed (no unary operators)")
        left = self.lookup_expr(e.left)
        right = self.lookup_expr(e.right) if left is not None else None
        if right is None:
            return None
        return self.lookup((int(e.op), left, right))

    def equiv(self, a: EClassId, b: EClassId) -> bool:
        return self.find(a) == self.find(b)

    def const_of(self, cid: EClassId) -> int | None:
        return self.classes[self.find(cid)].const

    @property
    def clean(self) -> bool:
        return not self.pending and not self.analysis_pending

    # -- mutation -----------------------------------------------------------

    def _make(self, node: ENode) -> int | None:
        op = node[0]
        if op == CONST:
            return node[1]
        if op == VAR:
            return None
        a = self.classes[self.find(node[1])].const
        if a is None:
            return None
        b = self.classes[self.find(node[2])].const
        if b is None:
            return None
        return fold(op, a, b, self.width)

    def add(self, node: ENode) -> EClassId:
        node = self.canonicalize(node)
        cid = self.hashcons.get(node)
        if cid is not None:
            return self.find(cid)
        if node[0] == CONST and not 0 <= node[1] <= self.mask:
            raise ValueError(f"constant {node[1]} out of range for width {self.width}")
        cid = len(self.parent)
        self.parent.append(cid)
        cls = EClass(cid, [node], [], self._make(node))
        self.classes[cid] = cls
        if len(node) == 3:
            self.classes[node[1]].parents.append((node, cid))
            if node[2] != node[1]:
                self.classes[node[2]].parents.append((node, cid))
        self.hashcons[node] = cid
        return cid

    def union(self, a: EClassId, b: EClassId) -> tuple[EClassId, bool]:
        a, b = self.find(a), self.find(b)
        if a == b:
            return a, False
        ca, cb = self.classes[a], self.classes[b]
        # larger node set wins; ties go to the lower id
        if (len(ca.nodes), -a) < (len(cb.nodes), -b):
            a, b, ca, cb = b, a, cb, ca
        self.parent[b] = a
        del self.classes[b]
        self.pending.extend(cb.parents)
        ca.nodes.extend(cb.nodes)
        ca.parents.extend(cb.parents)
        if ca.const is None and cb.const is not None:
            ca.const = cb.const
            self.analysis_pending.extend(ca.parents)
        elif cb.const is None and ca.const is not None:
            self.analysis_pending.extend(cb.parents)
        elif ca.const != cb.const:
            raise AnalysisConflict(f"classes {a} and {b} hold constants {ca.const} and {cb.const}")
        return a, True

    def rebuild(self) -> int:
        """Restore hashcons uniqueness and congruence; returns the number of
        merges the repair performed."""
        merges = 0
        while self.pending or self.analysis_pending:
            while self.pending:
                node, cid = self.pending.pop()
                self.hashcons.pop(node, None)
                node = self.canonicalize(node)
                other = self.hashcons.get(node)
                if other is None:
                    self.hashcons[node] = cid
                else:
                    self.hashcons[node] = cid
                    if self.union(other, cid)[1]:
                        merges += 1
            while self.analysis_pending:
                node, cid = self.analysis_pending.pop()
                cid = self.find(cid)
                value = self._make(self.canonicalize(node))
                if value is None:
                    continue
                cls = self.classes[cid]
                if cls.const is None:
                    cls.const = value
                    self.analysis_pending.extend(cls.parents)
                elif cls.const != value:
                    raise AnalysisConflict(f"class {cid} holds {cls.const}, node folds to {value}")
        self._repair_classes()
        return merges

    def _repair_classes(self) -> None:
        find = self.find
        hashcons = {}
        for cid, cls in self.classes.items():
            nodes = {self.canonicalize(n) for n in cls.nodes}
            cls.nodes = sorted(nodes, key=_node_key)
            for n in cls.nodes:
                hashcons[n] = cid
            seen = set()
            parents = []
            for pnode, pcid in cls.parents:
                pnode = self.canonicalize(pnode)
                if pnode not in seen:
                    seen.add(pnode)
                    parents.append((pnode, find(pcid)))
            cls.parents = parents
        self.hashcons = hashcons

    # -- terms --------------------------------------------------------------

    def add_expr(self, e: Expr) -> EClassId:
        """Insert a preprocessed expression bottom-up; returns its root class."""
        if isinstance(e, Const):
            return self.add((CONST, e.value & self.mask))
        if isinstance(e, Var):
            return self.add((VAR, e.name))
        if isinstance(e, Unary):
            raise ValueError("e-graph terms must be preprocessed (no unary operators)")
        left = self.add_expr(e.left)
        right = self.add_expr(e.right)
        return self.add((int(e.op), left, right))

    def union_all(self, pairs: Iterable[tuple[EClassId, EClassId]]) -> int:
        return sum(self.union(a, b)[1] for a, b in pairs)

    # -- debugging ----------------------------------------------------------

    def check_invariants(self) -> None:
        """Full scan of the clean-state invariants. Raises AssertionError."""
        assert self.clean, "graph has pending repairs"
        seen: dict[ENode, EClassId] = {}
        for cid, cls in self.classes.items():
            assert self.find(cid) == cid
            for n in cls.nodes:
                assert self.canonicalize(n) == n, f"non-canonical node {n} in {cid}"
                assert n not in seen, f"congruent nodes in classes {seen[n]} and {cid}"
                seen[n] = cid
                assert self.hashcons.get(n) == cid
        assert len(seen) == len(self.hashcons)

    def dump_dot(self) -> str:
        return dump_dot(self)


def _node_key(node: ENode) -> tuple:
    if len(node) == 3:
        return (node[0], node[1], node[2])
    return (node[0], 0, 0, str(node[1]))


def node_label(node: ENode) -> str:
    op = node[0]
    if op == CONST or op == VAR:
        return str(node[1])
    return SYMBOL[Op(op)]


def dump_dot(g: EGraph) -> str:
    """Graphviz text: one dotted cluster per e-class, edges from an e-node to
    the cluster of each child class."""
    lines = [
        "digraph egraph {",
        "  compound=true;",
        "  clusterrank=local;",
        '  node [shape=circle, fontname="monospace"];',
    ]
    anchors = {}
    for cls in g.eclasses():
        cid = cls.id
        anchors[cid] = f"e{cid}_0"
        lines.append(f"  subgraph cluster_{cid} {{")
        lines.append("    style=dotted;")
        lines.append(f'    label="e{cid}";')
        for k, node in enumerate(sorted(cls.nodes, key=_node_key)):
            label = node_label(node).replace("\\", "\\\\").replace('"', '\\"')
            lines.append(f'    e{cid}_{k} [label="{label}"];')
        lines.append("  }")
    for cls in g.eclasses():
        for k, node in enumerate(sorted(cls.nodes, key=_node_key)):
            if len(node) != 3:
                continue
            for port, child in enumerate(node[1:]):
                child = g.find(child)
                lines.append(f"  e{cls.id}_{k} -> {anchors[child]} [lhead=cluster_{child}, label={port}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
