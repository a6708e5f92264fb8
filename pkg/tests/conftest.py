from pathlib import Path

import hypothesis
import hypothesis.strategies as st
import pytest

from egmba.expr import BINARY_OPS, Binary, Const, Op, Unary, Var

hypothesis.settings.register_profile("ci", deadline=None, max_examples=100)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=20)
hypothesis.settings.load_profile("ci")

DATA = Path(__file__).resolve().parents[1] / "src" / "egmba" / "data"
GOLDEN = Path(__file__).resolve().parent / "golden"


def exprs(width=8, names=("x", "y", "z"), max_leaves=12, shifts=True, unary=True):
    """Random expression trees; shift amounts are always constants."""
    leaf = st.one_of(
        st.sampled_from(names).map(Var),
        st.integers(0, (1 << width) - 1).map(Const),
    )
    ops = [op for op in BINARY_OPS if op is not Op.SHL]

    def extend(children):
        parts = [st.builds(Binary, st.sampled_from(ops), children, children)]
        if unary:
            parts.append(st.builds(Unary, st.sampled_from([Op.NEG, Op.NOT]), children))
        if shifts:
            parts.append(st.builds(lambda a, c: Binary(Op.SHL, a, Const(c)), children, st.integers(0, width + 2)))
        return st.one_of(*parts)

    return st.recursive(leaf, extend, max_leaves=max_leaves)


@pytest.fixture(scope="session")
def corpus_path():
    return DATA / "corpus.txt"


# acceptance criteria report: one line per criterion, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def criterion():
    def record(number: int, title: str, ok: bool, detail: str = ""):
        ACCEPTANCE[number] = (bool(ok), title, detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
