import json

import pytest
from hypothesis import given, settings, strategies as st

from egmba.bench import (
    CSV_HEADER, BenchConfig, BenchReport, DatasetEntry, EntryResult, expand_once,
    expansion_rules, generate_corpus, load_dataset, read_seeds, run_benchmark, summary_line,
    write_dataset, write_report,
)
from egmba.expr import ParseError, ast_size, parse, preprocess, render
from egmba.rng import XorShift64Star
from egmba.semantics import equiv_exhaustive

FAST = BenchConfig(samples=200)


def write(tmp_path, text):
    path = tmp_path / "data.txt"
    path.write_text(text, encoding="utf-8")
    return path


def test_load_plain(tmp_path):
    assert load_dataset(write(tmp_path, "x+y\n")) == [DatasetEntry(0, "x+y", None)]


def test_load_with_ground_truth(tmp_path):
    entries = load_dataset(write(tmp_path, "(x|y)+y-(~x&y),x+y\n"))
    assert entries == [DatasetEntry(0, "(x|y)+y-(~x&y)", "x+y")]


def test_load_skips_comments(tmp_path):
    entries = load_dataset(write(tmp_path, "# comment\n\nx^x,0\n"))
    assert entries == [DatasetEntry(0, "x^x", "0")]


def test_load_reports_line(tmp_path):
    with pytest.raises(ParseError) as info:
        load_dataset(write(tmp_path, "x+y\n# c\nx+\n"))
    assert info.value.line == 3
    assert str(info.value).startswith("line 3, column 3")


def test_load_warns_on_wrong_ground_truth(tmp_path, caplog):
    entries = load_dataset(write(tmp_path, "x+y,x-y\n"))
    assert len(entries) == 1
    assert "not equivalent" in caplog.text


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_dataset(tmp_path / "nope.txt")


def test_dataset_round_trip(tmp_path):
    entries = [DatasetEntry(0, "x+y", None), DatasetEntry(1, "(x|y)+(x&y)", "x+y")]
    path = tmp_path / "out.txt"
    write_dataset(entries, path, header="made by a test")
    assert path.read_text().startswith("# made by a test\n")
    assert load_dataset(path) == entries


def test_identity_entry():
    report = run_benchmark([DatasetEntry(0, "(x|y)+y-(~x&y)", "x+y")], BenchConfig(width=8))
    row = report.per_entry[0]
    assert row.success and row.output_size == 3 and row.input_size == 11
    assert row.verified == "Equivalent"
    assert row.matched_gt is True
    assert report.simplification_ratio == round(100 * (1 - 3 / 11), 2)


def test_minimal_entry_fails_unless_allowed():
    report = run_benchmark([DatasetEntry(0, "x")], FAST)
    assert report.per_entry[0].output_size == report.per_entry[0].input_size == 1
    assert report.failures == 1 and report.success_rate == 0.0
    relaxed = run_benchmark([DatasetEntry(0, "x")], BenchConfig(samples=200, allow_equal=True))
    assert relaxed.successes == 1


def test_skipped_verification_is_not_success():
    report = run_benchmark([DatasetEntry(0, "x+0")], BenchConfig(verify=False))
    assert report.per_entry[0].verified == "Skipped"
    assert not report.per_entry[0].success


def _rows(total, wins):
    return [EntryResult(i, 10, 5 if i < wins else 10, "x", "Equivalent", i < wins, 1, "Saturated")
            for i in range(total)]


def test_table_arithmetic():
    report = BenchReport.from_entries(_rows(323, 267), dataset="synthetic")
    assert (report.total, report.successes, report.failures) == (323, 267, 56)
    assert report.success_rate == 82.66
    assert report.simplification_ratio == 50.0
    assert "82.66%" in summary_line(report)
    assert "82.66" in write_report(report, "text").decode()


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(1, 40), st.integers(1, 40), st.booleans()), max_size=30))
def test_report_aggregates_recompute(rows):
    entries = [EntryResult(i, a, min(a, b), "x", "Equivalent", ok and b < a, 0, "Saturated")
               for i, (a, b, ok) in enumerate(rows)]
    r = BenchReport.from_entries(entries)
    assert r.total == r.successes + r.failures == len(rows)
    wins = [e for e in entries if e.success]
    assert r.success_rate == (round(100 * len(wins) / len(rows), 2) if rows else 0.0)
    if wins:
        assert r.simplification_ratio == round(
            100 * sum(1 - e.output_size / e.input_size for e in wins) / len(wins), 2)


def test_csv_report():
    empty = BenchReport.from_entries([])
    assert write_report(empty, "csv") == (",".join(CSV_HEADER) + "\n").encode()
    r = BenchReport.from_entries(_rows(2, 1))
    lines = write_report(r, "csv").decode().splitlines()
    assert lines[0] == "index,input_size,output_size,verified,success,millis,stop_reason,output"
    assert lines[1] == "0,10,5,Equivalent,true,1,Saturated,x"
    assert write_report(r, "csv") == write_report(r, "csv")


def test_json_round_trip():
    r = BenchReport.from_entries(_rows(1, 1), dataset="one")
    back = BenchReport.from_json(write_report(r, "json").decode())
    assert back == r
    assert set(json.loads(write_report(r, "json"))) >= {"total", "successes", "failures", "success_rate",
                                                          "simplification_ratio", "total_seconds", "per_entry"}


def test_unknown_format():
    with pytest.raises(ValueError):
        write_report(BenchReport.from_entries([]), "xml")


def test_parallel_matches_serial():
    entries = [DatasetEntry(i, t) for i, t in enumerate(["x+0", "(x|y)+(x&y)", "x^x", "x-y+y", "2*3"])]
    config = BenchConfig(samples=100, timing=False)
    assert run_benchmark(entries, config, jobs=1) == run_benchmark(entries, config, jobs=3)


def test_expansion_example():
    rule = next(r for r in expansion_rules(64) if r.name == "mba-add2")
    out = expand_once(parse("x+y", 64), [rule], XorShift64Star(0))
    assert render(out, 64) == "(x^y)+2*(x&y)"


def test_expansion_rules_grow():
    from egmba.rewrite import pattern_size
    rules = expansion_rules(64)
    assert rules and all(pattern_size(r.rhs) > pattern_size(r.lhs) for r in rules)


def test_generate_single_variable_seed():
    entries = generate_corpus([parse("x", 64)], 5, rng_seed=1, n_rewrites=(2, 3))
    for e in entries:
        assert e.ground_truth == "x"
        assert ast_size(parse(e.obfuscated, 64)) > 1


def test_generate_is_deterministic_and_sound():
    seeds = [parse(t, 64) for t in ("x+y", "x^y", "x&y", "2*x+3*y", "x-y")]
    a = generate_corpus(seeds, 6, rng_seed=7)
    assert a == generate_corpus(seeds, 6, rng_seed=7)
    assert a != generate_corpus(seeds, 6, rng_seed=8)
    for e in a:
        obf = preprocess(parse(e.obfuscated, 4), 4)
        gt = preprocess(parse(e.ground_truth, 4), 4)
        assert equiv_exhaustive(obf, gt, 4).holds
        assert ast_size(obf) > ast_size(gt)


def test_generate_bad_arguments():
    with pytest.raises(ValueError):
        generate_corpus([parse("x", 64)], 0)
    with pytest.raises(ValueError):
        generate_corpus([], 3)
    with pytest.raises(ValueError):
        generate_corpus([parse("x", 64)], 3, n_rewrites=(3, 2))


def test_bundled_corpus_shape(corpus_path):
    entries = load_dataset(corpus_path)
    assert len(entries) == 60
    assert {e.ground_truth for e in entries} <= {"x+y", "x^y", "x&y", "2*x+3*y", "x-y"}


def test_read_seeds(tmp_path):
    path = write(tmp_path, "x+y  # sum\n\n# only a comment\nx^y\n")
    assert read_seeds(path) == [parse("x+y"), parse("x^y")]
