import json
import subprocess
import sys

import pytest

from egmba.cli import CliConfig, build_parser, main
from egmba.expr import ast_size, parse
from egmba.semantics import equiv_exhaustive

from conftest import GOLDEN


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simplify_identity(capsys):
    code, out, _ = run(capsys, "simplify", "(x|y)+y-(~x&y)", "--width", "8")
    assert code == 0
    result = parse(out.strip(), 8)
    assert ast_size(result) == 3
    assert equiv_exhaustive(result, parse("x+y", 8), 8).holds


def test_simplify_json(capsys):
    code, out, _ = run(capsys, "simplify", "(x|y)+y-(~x&y)", "--width", "8", "--output", "json", "--no-timing")
    assert code == 0
    assert json.loads(out) == {
        "input": "(x|y)+y-(~x&y)", "output": "x+y", "input_size": 11, "output_size": 3,
        "stop_reason": "Saturated", "millis": 0, "verified": "Equivalent",
    }


def test_simplify_csv_and_no_verify(capsys):
    code, out, _ = run(capsys, "simplify", "x+0", "--output", "csv", "--no-verify", "--no-timing")
    assert code == 0
    assert out.splitlines() == ["input,output,input_size,output_size,stop_reason,millis,verified",
                                "x+0,x,3,1,Saturated,0,Skipped"]


def test_simplify_parse_error(capsys):
    code, out, err = run(capsys, "simplify", "x+")
    assert code == 1 and out == ""
    assert "column 3" in err


def test_simplify_xor_self(capsys):
    assert run(capsys, "simplify", "x^x")[:2] == (0, "0\n")


def test_no_const_fold(capsys):
    code, out, _ = run(capsys, "simplify", "2*3", "--width", "8", "--no-const-fold")
    assert (code, out) == (0, "2*3\n")
    assert run(capsys, "simplify", "2*3", "--width", "8")[1] == "6\n"


def test_groups_flag(capsys):
    code, out, _ = run(capsys, "simplify", "(x|y)+(x&y)", "--groups", "structural,boolid")
    assert (code, out) == (0, "(x|y)+(x&y)\n")
    with pytest.raises(SystemExit) as info:
        main(["simplify", "x", "--groups", "nope"])
    assert info.value.code == 1
    assert "unknown rule group" in capsys.readouterr().err


def test_verify_equivalent(capsys):
    code, out, _ = run(capsys, "verify", "x+y", "(x|y)+(x&y)", "--width", "8")
    assert (code, out) == (0, "Equivalent (exhaustive, 65536 assignments)\n")


def test_verify_counterexample(capsys):
    code, out, _ = run(capsys, "verify", "x", "0")
    assert code == 2
    assert out.startswith("NotEquivalent (counterexample: x=")


def test_verify_parse_error(capsys):
    assert run(capsys, "verify", "x+", "x")[0] == 1


def test_dump_before(capsys):
    code, out, _ = run(capsys, "dump", "a*2", "--stage", "before")
    assert code == 0
    assert out.count("subgraph cluster_") == 3
    assert out == (GOLDEN / "dump_a2_before.dot").read_text()


def test_dump_after_golden(capsys):
    code, out, _ = run(capsys, "dump", "a*2", "--stage", "after")
    assert code == 0
    assert out == (GOLDEN / "dump_a2_after.dot").read_text()
    assert out.count("subgraph cluster_") == 4


def test_dump_bad_stage(capsys):
    with pytest.raises(SystemExit) as info:
        main(["dump", "a*2", "--stage", "middle"])
    assert info.value.code == 1


def test_usage_errors_exit_1(capsys):
    for argv in ([], ["frobnicate"], ["simplify"], ["simplify", "x", "--width", "abc"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 1
    assert run(capsys, "simplify", "x", "--width", "65")[0] == 1


def test_defaults():
    ns = build_parser().parse_args(["simplify", "x"])
    config = CliConfig.from_args(ns)
    assert (config.width, config.max_iterations, config.max_nodes, config.max_millis) == (64, 30, 50000, 5000)
    assert (config.seed, config.samples, config.output_format) == (0, 10000, "text")
    assert config.const_fold and config.verify and config.timing
    assert build_parser().parse_args(["simplify", "x", "--seed", "0xC0FFEE"]).seed == 0xC0FFEE


def test_batch(tmp_path, capsys):
    data = tmp_path / "tiny.txt"
    data.write_text("# tiny\n(x|y)+y-(~x&y),x+y\nx\n")
    report = tmp_path / "r.csv"
    code, out, _ = run(capsys, "batch", str(data), "--output", "csv", "--report", str(report),
                       "--no-timing", "--jobs", "1", "--samples", "100")
    assert code == 0
    assert out == ("tiny: total 2, success 1, failure 1, success rate 50.00%, "
                   "simplification ratio 72.73%, time 0.00s\n")
    assert report.read_text().splitlines() == [
        "index,input_size,output_size,verified,success,millis,stop_reason,output",
        "0,11,3,ProbablyEquivalent,true,0,Saturated,x+y",
        "1,1,1,ProbablyEquivalent,false,0,Saturated,x",
    ]


def test_batch_text_to_stdout(tmp_path, capsys):
    data = tmp_path / "tiny.txt"
    data.write_text("x+0\n")
    code, out, _ = run(capsys, "batch", str(data), "--jobs", "1", "--no-timing", "--name", "T")
    assert code == 0
    assert "Success Rate" in out and "100.00%" in out
    assert out.endswith("time 0.00s\n")


def test_batch_missing_file(tmp_path, capsys):
    code, out, err = run(capsys, "batch", str(tmp_path / "missing.txt"))
    assert code == 1 and out == "" and err


def test_batch_parse_error(tmp_path, capsys):
    data = tmp_path / "bad.txt"
    data.write_text("x+y\n(x\n")
    code, _, err = run(capsys, "batch", str(data))
    assert code == 1 and "line 2" in err


def test_gen_round_trip(tmp_path, capsys):
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("x+y\nx^y\nx&y\n2*x+3*y\nx-y\n")
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run(capsys, "gen", str(seeds), "--count", "6", "--seed", "5", "-o", str(a))[0] == 0
    assert run(capsys, "gen", str(seeds), "--count", "6", "--seed", "5", "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = [ln for ln in a.read_text().splitlines() if not ln.startswith("#")]
    assert len(rows) == 6
    code, out, err = run(capsys, "batch", str(a), "--jobs", "1", "--samples", "100", "--no-timing")
    assert code == 0 and "total 6" in out and "warning" not in err.lower()


def test_gen_unreadable_seeds(tmp_path, capsys):
    code, _, err = run(capsys, "gen", str(tmp_path / "none.txt"))
    assert code == 1 and "cannot read seeds" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "egmba", "simplify", "x^x"], capture_output=True, text=True)
    assert (proc.returncode, proc.stdout) == (0, "0\n")
    proc = subprocess.run([sys.executable, "-m", "egmba", "verify", "x", "0"], capture_output=True, text=True)
    assert proc.returncode == 2
