import json
import subprocess
import sys

import pytest

from markov_recurrence.cli import (
    EXIT_DISAGREE,
    EXIT_INCONCLUSIVE,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_VIOLATED,
    main,
)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exit_code_values():
    assert (EXIT_OK, EXIT_INPUT, EXIT_VIOLATED, EXIT_INCONCLUSIVE, EXIT_DISAGREE) == (0, 1, 2, 3, 4)


def test_classify_recurrent_example(capsys):
    code, out, _ = run(capsys, "classify", "--builtin", "sec3-ex1")
    assert code == 0 and "verdict: Recurrent" in out
    assert "q=7/10 p=3/10" in out


def test_classify_transient_example(capsys):
    code, out, _ = run(capsys, "classify", "--builtin", "sec3-ex2")
    assert code == 0 and "verdict: Transient" in out and "q=7/15 p=8/15" in out


def test_compare_counterexample(capsys):
    code, out, _ = run(capsys, "compare", "--builtin", "sec4-counter-recurrent", "--eps", "0.05")
    assert code == EXIT_VIOLATED
    assert out.splitlines()[0] == "CRITERION-INAPPLICABLE (connected domain violated); oracle: Recurrent"


def test_compare_agree_and_disagree(capsys):
    code, out, _ = run(capsys, "compare", "--builtin", "sec3-ex2")
    assert code == EXIT_OK and out.startswith("AGREE: Transient")
    code, out, _ = run(capsys, "compare", "--builtin", "sec4-counter-transient", "--force")
    assert code == EXIT_DISAGREE and out.startswith("DISAGREE")


def test_classify_violated_and_inconclusive(capsys):
    code, out, _ = run(capsys, "classify", "--builtin", "sec4-counter-transient")
    assert code == EXIT_VIOLATED and "connected domain violated" in out
    # q_i / p_i = i / (i + 1): harmonic terms, no rule decides
    qs = ",".join(f"{i}/{2 * i + 1}" for i in range(1, 2001))
    code, out, _ = run(capsys, "classify", "--builtin", "bd", "--q", qs, "--nmax", "2000")
    assert code == EXIT_INCONCLUSIVE and "verdict: Inconclusive" in out


def test_missing_spec_file(capsys):
    code, _, err = run(capsys, "classify", "--spec", "missing.json")
    assert code == EXIT_INPUT and "missing.json" in err


def test_malformed_spec_cites_field(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"head_rows": [[[1, 1, 1]], [["x", 1, 2]]], "tail_stencil": [[-1, 1, 2], [1, 1, 2]]}))
    code, _, err = run(capsys, "classify", "--spec", str(p))
    assert code == EXIT_INPUT and "head_rows[1][0]" in err


def test_spec_file_round_trip(capsys, tmp_path):
    p = tmp_path / "banded.json"
    p.write_text(json.dumps({"name": "banded", "head_rows": [[[1, 1, 1]]],
                             "tail_stencil": [[-1, 7, 12], [1, 2, 12], [2, 3, 12]]}))
    code, out, _ = run(capsys, "classify", "--spec", str(p))
    assert code == 0 and "Transient" in out


@pytest.mark.parametrize("argv", [["classify", "--builtin", "nope"], ["classify"], ["bogus"],
                                  ["classify", "--builtin", "ex1-B", "--lambda", "x"],
                                  ["classify", "--builtin", "ex1-A", "--spec", "a.json"]])
def test_input_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == EXIT_INPUT


def test_validate_command(capsys):
    code, out, _ = run(capsys, "validate", "--builtin", "sec4-counter-recurrent")
    assert code == EXIT_VIOLATED and "p[3,2]" in out
    code, out, _ = run(capsys, "validate", "--builtin", "sec3-ex1")
    assert code == 0 and out.rstrip().endswith("OK")


def test_builtin_list(capsys):
    code, out, _ = run(capsys, "builtin-list")
    assert code == 0 and "sec3-ex1" in out.split()


def test_artifacts_written(capsys, tmp_out):
    assert main(["compare", "--builtin", "sec3-ex1", "--trials", "200", "--horizon", "1000",
                 "--out", str(tmp_out)]) == 0
    names = sorted(p.name for p in tmp_out.iterdir())
    assert names == ["mc.csv", "report.txt", "ruin.csv", "trace.csv"]
    assert (tmp_out / "ruin.csv").read_text().splitlines()[0] == "L,h,one_minus_h"
    assert (tmp_out / "trace.csv").read_text().splitlines()[0] == "n,log_t,log_partial_sum"
    assert main(["verify", "--builtin", "ex1-B", "--upto", "60", "--out", str(tmp_out)]) == 0
    lines = (tmp_out / "balance.csv").read_text().splitlines()
    assert lines[0] == "system,n,lhs,rhs,residual" and len(lines) == 1 + 3 * 61


def test_artifacts_byte_identical(capsys, tmp_path):
    outs = []
    for k, workers in enumerate((1, 3)):
        d = tmp_path / f"run{k}"
        main(["oracle", "--builtin", "sec3-ex2", "--trials", "500", "--horizon", "5000", "--seed", "7",
              "--workers", str(workers), "--out", str(d)])
        main(["classify", "--builtin", "sec3-ex2", "--out", str(d)])
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.suffix == ".csv"})
    assert outs[0] == outs[1] and set(outs[0]) == {"mc.csv", "ruin.csv", "trace.csv"}


def test_family_parameters(capsys):
    code, out, _ = run(capsys, "compare", "--builtin", "ex1-B", "--lambda", "2", "--mu", "1", "--force")
    assert code == 0 and out.startswith("AGREE: Transient")


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "markov_recurrence.cli", "classify", "--builtin", "sec3-ex1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "Recurrent" in res.stdout
