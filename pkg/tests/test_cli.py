import shlex
import subprocess
import sys
from pathlib import Path

import pytest

from stoqlab.cli import main

FIX = Path(__file__).parent / "fixtures"


def run(capsys, *args):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def kv(line: str) -> dict:
    return dict(tok.split("=", 1) for tok in shlex.split(line))


def test_simulate_examples(capsys):
    code, out, _ = run(capsys, "simulate", "--verifier", FIX / "identity_verifier.txt",
                       "--witness", FIX / "classical_witness.txt")
    assert code == 0 and out == "accept=0.500000000000\n"
    code, out, _ = run(capsys, "simulate", "--verifier", FIX / "identity_verifier.txt",
                       "--witness", FIX / "uniform_witness.txt")
    assert code == 0 and out == "accept=1.000000000000\n"


def test_text_format(capsys):
    code, out, _ = run(capsys, "simulate", "--format", "text",
                       "--verifier", FIX / "identity_verifier.txt",
                       "--witness", FIX / "uniform_witness.txt")
    assert out == "accept: 1.000000000000\n"


def test_malformed_file(capsys):
    code, out, err = run(capsys, "simulate", "--verifier", FIX / "bad_verifier.txt",
                         "--witness", FIX / "classical_witness.txt")
    assert code == 2 and out == ""
    assert "line 5" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "simulate", "--verifier", FIX / "nope.txt",
                       "--witness", FIX / "classical_witness.txt")
    assert code == 2


def test_cap_exit_code(capsys):
    code, _, err = run(capsys, "simulate", "--cap", "1",
                       "--verifier", FIX / "identity_verifier.txt",
                       "--witness", FIX / "uniform_witness.txt")
    assert code == 3 and "resource limit" in err


def test_maxaccept(capsys):
    code, out, _ = run(capsys, "maxaccept", "--verifier", FIX / "identity_verifier.txt")
    lines = out.splitlines()
    assert code == 0 and kv(lines[0])["max_accept"] == "1.000000000000"


def test_amplify_fixture(capsys):
    code, out, _ = run(capsys, "amplify", "--verifier", FIX / "amplify_verifier.txt", "--r", "2")
    rec = kv(out.strip())
    assert code == 0
    assert float(rec["lam"]) == pytest.approx(0.5)
    assert float(rec["lam_rep"]) == pytest.approx(0.25)
    assert float(rec["lam_pow"]) == pytest.approx(0.25)
    assert float(rec["accept"]) == pytest.approx(0.75)
    assert float(rec["accept_rep"]) == pytest.approx(0.625)


def test_rcd_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "rcd", "witness-search", "--instance", FIX / "rcd_identity.txt")
    assert code == 0 and out == 'result=FOUND pair="00 - | 00 -"\n'
    code, out, _ = run(capsys, "rcd", "witness-search", "--instance", FIX / "rcd_disjoint.txt")
    assert code == 1 and out == "result=NONE\n"
    code, out, _ = run(capsys, "rcd", "decide", "--instance", FIX / "rcd_disjoint.txt")
    assert code == 0 and kv(out)["verdict"] == "NO"
    code, out, _ = run(capsys, "rcd", "decide", "--instance", FIX / "rcd_disjoint.txt",
                       "--alpha", "0.5", "--beta", "1.5")
    assert code == 1 and kv(out)["verdict"] == "PROMISE_VIOLATION"
    code, out, _ = run(capsys, "rcd", "distance", "--instance", FIX / "rcd_identity.txt",
                       "--witness", FIX / "uniform_witness.txt")
    assert kv(out)["distance"] == "0.000000000000"
    dest = tmp_path / "inst.txt"
    code, out, _ = run(capsys, "rcd", "build", "--verifier", FIX / "small_verifier.txt",
                       "--a", "0.9", "--b", "0.6", "-o", dest)
    assert code == 0 and dest.read_text().count("---") == 1
    code, out, _ = run(capsys, "rcd", "norandom", "--instance", FIX / "rcd_disjoint.txt")
    assert code == 1 and kv(out)["verdict"] == "EQUIVALENT"


def test_threshold_validation(capsys):
    code, _, err = run(capsys, "test", "--verifier", FIX / "identity_verifier.txt",
                       "--witness", FIX / "uniform_witness.txt",
                       "--a", "0.5", "--b", "0.6", "--seed", "1")
    assert code == 2
    code, _, _ = run(capsys, "rcd", "decide", "--instance", FIX / "rcd_disjoint.txt",
                     "--alpha", "1.5", "--beta", "0.5")
    assert code == 2


def test_test_command(capsys):
    args = ["test", "--verifier", FIX / "identity_verifier.txt",
            "--witness", FIX / "uniform_witness.txt",
            "--a", "0.9", "--b", "0.6", "--seed", "4", "--trials", "5"]
    code, out, _ = run(capsys, *args)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 6
    assert all(kv(l)["verdict"] == "ACCEPT" for l in lines[:5])
    assert kv(lines[-1])["rate"] == "1.000000000000"
    assert kv(lines[0])["samples"] == str(5689 * 3) and kv(lines[0])["queries"] == "5689"
    _, again, _ = run(capsys, *args)
    assert again == out


def test_test_requires_seed(capsys):
    with pytest.raises(SystemExit):
        main(["test", "--verifier", str(FIX / "identity_verifier.txt"),
              "--witness", str(FIX / "uniform_witness.txt"), "--a", "0.9", "--b", "0.6"])


def test_setcsp_commands(capsys, tmp_path):
    inst = FIX / "setcsp_small.txt"
    code, out, _ = run(capsys, "setcsp", "frustration", "--instance", inst, "--subset", "010,100")
    assert code == 0 and kv(out.splitlines()[-1])["total"] == "0.416666666667"
    code, out, _ = run(capsys, "setcsp", "compile", "--instance", inst, "--subset", "010,100",
                       "-o", tmp_path / "v.txt")
    recs = [kv(l) for l in out.splitlines()]
    last = [r for r in recs if "corrected" in r][0]
    assert last["corrected"] == last["expected"]
    assert (tmp_path / "v.txt").exists()
    code, out, _ = run(capsys, "setcsp", "minimize", "--instance", inst)
    assert code == 0 and kv(out)["heuristic"] == "False"
    code, _, _ = run(capsys, "setcsp", "minimize", "--instance", inst, "--heuristic")
    assert code == 2
    code, _, _ = run(capsys, "setcsp", "frustration", "--instance", inst, "--subset", "01")
    assert code == 2


def test_cstoqma_ma(capsys):
    code, out, _ = run(capsys, "cstoqma-ma", "--verifier", FIX / "small_verifier.txt", "--s", "10")
    assert code == 0 and kv(out)["residual"] == "0.000000000000"
    code, _, _ = run(capsys, "cstoqma-ma", "--verifier", FIX / "small_verifier.txt", "--s", "1")
    assert code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stoqlab", "simulate",
                          "--verifier", str(FIX / "identity_verifier.txt"),
                          "--witness", str(FIX / "uniform_witness.txt")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "accept=1.000000000000\n"


def test_help_lists_commands():
    res = subprocess.run([sys.executable, "-m", "stoqlab", "--help"], capture_output=True, text=True)
    for cmd in ("simulate", "maxaccept", "rcd", "amplify", "test", "setcsp", "cstoqma-ma"):
        assert cmd in res.stdout
