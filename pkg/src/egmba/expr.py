"""MBA expression trees: syntax, preprocessing, size and classification."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Union

MAX_WIDTH = 64


class ParseError(Exception):
    """Malformed expression text.

    ``position`` is a 0-based character offset into the input (``None`` when
    the error is structural rather than lexical); ``line`` is set by the
    dataset loader.
    """

    def __init__(self, position: int | None, message: str, line: int | None = None):
        self.position = position
        self.message = message
        self.line = line
        super().__init__(str(self))

    def __str__(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.position is not None:
            where.append(f"column {self.position + 1}")
        prefix = ", ".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message


class Op(enum.IntEnum):
    # Order is the extraction tie-break order; do not reshuffle.
    CONST = 0
    VAR = 1
    ADD = 2
    SUB = 3
    MUL = 4
    AND = 5
    OR = 6
    XOR = 7
    SHL = 8
    NEG = 9
    NOT = 10


BINARY_OPS = (Op.ADD, Op.SUB, Op.MUL, Op.AND, Op.OR, Op.XOR, Op.SHL)
BITWISE_OPS = (Op.AND, Op.OR, Op.XOR, Op.NOT)

SYMBOL = {
    Op.ADD: "+", Op.SUB: "-", Op.MUL: "*", Op.AND: "&", Op.OR: "|",
    Op.XOR: "^", Op.SHL: "<<", Op.NEG: "-", Op.NOT: "~",
}

# Binding power; higher binds tighter. Unary operators sit above all of these.
PRECEDENCE = {
    Op.OR: 1, Op.XOR: 2, Op.AND: 3, Op.SHL: 4,
    Op.ADD: 5, Op.SUB: 5, Op.MUL: 6,
}
UNARY_PRECEDENCE = 7
_BINARY_BY_SYMBOL = {SYMBOL[op]: op for op in BINARY_OPS}


def check_width(bits: int) -> int:
    if not isinstance(bits, int) or not 1 <= bits <= MAX_WIDTH:
        raise ValueError(f"width must be an integer in [1, {MAX_WIDTH}], got {bits!r}")
    return bits


def mask(bits: int) -> int:
    """All-ones value of the given width."""
    return (1 << check_width(bits)) - 1


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: Op
    child: "Expr"


@dataclass(frozen=True)
class Binary:
    op: Op
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Unary, Binary]


def op_of(e: Expr) -> Op:
    if isinstance(e, Const):
        return Op.CONST
    if isinstance(e, Var):
        return Op.VAR
    return e.op


# --- parsing ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<hex>0[xX][0-9A-Fa-f]+)|(?P<dec>[0-9]+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><<|[-+*&|^~()]))"
)


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(bad, f"unexpected character {text[bad]!r}")
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        raw = m.group(kind)
        if kind == "hex":
            tokens.append(("num", int(raw, 16), start))
        elif kind == "dec":
            tokens.append(("num", int(raw), start))
        elif kind == "ident":
            tokens.append(("ident", raw, start))
        else:
            tokens.append(("op", raw, start))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, bits: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.mask = mask(bits)

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expression(self, min_prec: int) -> Expr:
        left = self.unary()
        while True:
            kind, value, _ = self.peek()
            op = _BINARY_BY_SYMBOL.get(value) if kind == "op" else None
            if op is None or PRECEDENCE[op] < min_prec:
                return left
            self.advance()
            right = self.expression(PRECEDENCE[op] + 1)
            left = Binary(op, left, right)

    def unary(self) -> Expr:
        kind, value, pos = self.advance()
        if kind == "op" and value == "~":
            return Unary(Op.NOT, self.unary())
        if kind == "op" and value == "-":
            return Unary(Op.NEG, self.unary())
        if kind == "op" and value == "(":
            inner = self.expression(0)
            kind2, value2, pos2 = self.advance()
            if (kind2, value2) != ("op", ")"):
                raise ParseError(pos2, "expected ')'" if kind2 != "end" else "unbalanced '('")
            return inner
        if kind == "num":
            return Const(value & self.mask)
        if kind == "ident":
            return Var(value)
        if kind == "end":
            raise ParseError(pos, "unexpected end of input")
        raise ParseError(pos, f"unexpected token {value!r}")


def parse(text: str, width: int = MAX_WIDTH) -> Expr:
    """Parse C-like MBA syntax.

    Precedence, loosest first: ``|``, ``^``, ``&``, ``<<``, ``+ -``, ``*``,
    then prefix ``~ -``. Binary operators associate left. Constants are
    decimal or ``0x`` hex and are reduced modulo ``2**width``.
    """
    p = _Parser(text, width)
    e = p.expression(0)
    kind, value, pos = p.peek()
    if kind != "end":
        msg = "unbalanced ')'" if value == ")" else f"trailing input {value!r}"
        raise ParseError(pos, msg)
    return e


# --- rendering -------------------------------------------------------------

def _const_text(v: int) -> str:
    return str(v) if v < 0x10000 else hex(v)


def render(e: Expr, width: int | None = None, sugar: bool = False) -> str:
    """Emit text that parses back to ``e`` with minimal parentheses.

    With ``sugar`` (requires ``width``), ``a ^ mask`` prints as ``~a`` and
    ``0 - a`` as ``-a``; the output then round-trips through
    :func:`preprocess` rather than structurally.
    """
    m = mask(width) if sugar else None

    def prec(node: Expr) -> int:
        if isinstance(node, Binary):
            if m is not None and _is_sugared(node, m):
                return UNARY_PRECEDENCE
            return PRECEDENCE[node.op]
        return UNARY_PRECEDENCE + 1 if isinstance(node, (Const, Var)) else UNARY_PRECEDENCE

    def go(node: Expr) -> str:
        if isinstance(node, Const):
            return _const_text(node.value)
        if isinstance(node, Var):
            return node.name
        if isinstance(node, Unary):
            return SYMBOL[node.op] + wrap(node.child, UNARY_PRECEDENCE)
        if m is not None and _is_sugared(node, m):
            if node.op is Op.XOR:
                return "~" + wrap(node.left, UNARY_PRECEDENCE)
            return "-" + wrap(node.right, UNARY_PRECEDENCE)
        p = PRECEDENCE[node.op]
        return wrap(node.left, p) + SYMBOL[node.op] + wrap(node.right, p + 1)

    def wrap(node: Expr, min_prec: int) -> str:
        text = go(node)
        return f"({text})" if prec(node) < min_prec else text

    return go(e)


def _is_sugared(node: Binary, m: int) -> bool:
    if node.op is Op.XOR:
        return node.right == Const(m)
    if node.op is Op.SUB:
        return node.left == Const(0)
    return False


# --- structural utilities -------------------------------------------------

def preprocess(e: Expr, width: int) -> Expr:
    """Eliminate unary operators: ``-a`` becomes ``0 - a`` and ``~a`` becomes
    ``a ^ mask``. Also rejects shifts by a non-constant amount."""
    m = mask(width)

    def go(node: Expr) -> Expr:
        if isinstance(node, (Const, Var)):
            return node
        if isinstance(node, Unary):
            child = go(node.child)
            if node.op is Op.NEG:
                return Binary(Op.SUB, Const(0), child)
            return Binary(Op.XOR, child, Const(m))
        left, right = go(node.left), go(node.right)
        if node.op is Op.SHL and not isinstance(right, Const):
            raise ParseError(None, "shift amount must be a constant")
        if left is node.left and right is node.right:
            return node
        return Binary(node.op, left, right)

    return go(e)


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order, left to right."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Unary):
            stack.append(node.child)
        elif isinstance(node, Binary):
            stack.append(node.right)
            stack.append(node.left)


def ast_size(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def depth(e: Expr) -> int:
    if isinstance(e, Unary):
        return 1 + depth(e.child)
    if isinstance(e, Binary):
        return 1 + max(depth(e.left), depth(e.right))
    return 1


def free_vars(e: Expr) -> list[str]:
    """Distinct variable names in first-occurrence order."""
    seen: dict[str, None] = {}
    for node in walk(e):
        if isinstance(node, Var):
            seen.setdefault(node.name)
    return list(seen)


# --- classification -------------------------------------------------------

class MbaClass(enum.Enum):
    LINEAR = "Linear"
    POLYNOMIAL = "Polynomial"
    NON_POLYNOMIAL = "NonPolynomial"
    NOT_MBA = "NotMba"


def classify(e: Expr) -> MbaClass:
    """Shape class of an expression.

    The degree of a subterm counts how many non-constant bitwise factors a
    product contributes: constants are degree 0, bitwise expressions over
    variables degree 1, ``+``/``-`` take the maximum and ``*`` the sum.
    Bitwise operators over arithmetic subterms make the whole expression
    non-polynomial. Variable-free expressions are not MBA.
    """
    degree = _degree(e)
    if degree is None:
        return MbaClass.NON_POLYNOMIAL
    if degree == 0:
        return MbaClass.NOT_MBA
    return MbaClass.LINEAR if degree == 1 else MbaClass.POLYNOMIAL


def _pure_bitwise(e: Expr) -> bool:
    for node in walk(e):
        if isinstance(node, (Unary, Binary)) and node.op not in BITWISE_OPS:
            if free_vars(node):
                return False
    return True


def _degree(e: Expr) -> int | None:
    if isinstance(e, Const) or not free_vars(e):
        return 0
    if isinstance(e, Var):
        return 1
    if e.op in BITWISE_OPS:
        return 1 if _pure_bitwise(e) else None
    if isinstance(e, Unary):
        return _degree(e.child)
    left, right = _degree(e.left), _degree(e.right)
    if left is None or right is None:
        return None
    if e.op in (Op.ADD, Op.SUB):
        return max(left, right)
    if e.op is Op.MUL:
        return left + right
    # shift by a constant scales like a coefficient
    return left if right == 0 else None
