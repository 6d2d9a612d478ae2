import json
import subprocess
import sys

import pytest

from telescoper.cli import EXIT_FAIL, EXIT_INPUT, EXIT_IO, EXIT_OK, ProblemManifest, main
from telescoper.corpus import example


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_quotients_json(capsys):
    code, out, _ = run(capsys, "quotients", "--example", "2", "--json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert len(doc["q"]) == 2 and doc["d"]


def test_estden_text(capsys):
    code, out, _ = run(capsys, "estden", "--example", "1")
    assert code == EXIT_OK
    assert out.startswith("EstDen:") and "G1 =" in out


def test_telescope_then_verify(tmp_path, capsys):
    cert = tmp_path / "c.json"
    code, out, _ = run(capsys, "telescope", "--example", "2", "--emit", str(cert))
    assert code == EXIT_OK and out.startswith("order 2") and "primitive: (4*n + 6)" in out
    doc = json.loads(cert.read_text())
    assert doc["order"] == 2 and doc["shift_var"] == "n"
    code, out, _ = run(capsys, "verify", "--example", "2", "--cert", str(cert), "--json")
    assert code == EXIT_OK
    assert {c["name"]: c["status"] for c in json.loads(out)["checks"]} == {"symbolic": "pass", "numeric": "pass"}


def test_tampered_certificate_exit_one(tmp_path, capsys):
    cert = tmp_path / "c.json"
    run(capsys, "telescope", "--example", "1", "--emit", str(cert))
    doc = json.loads(cert.read_text())
    doc["R2"]["num"] = doc["R2"]["num"] + " + 1"
    cert.write_text(json.dumps(doc))
    code, _, err = run(capsys, "verify", "--example", "1", "--cert", str(cert))
    assert code == EXIT_FAIL
    e = json.loads(err.strip().splitlines()[-1])
    assert e["kind"] == "verification_failed" and e["residual"]


def test_telescope_deterministic(capsys):
    outs = []
    for _ in range(2):
        _, out, _ = run(capsys, "telescope", "--example", "4", "--seed", "5")
        doc = json.loads(out)
        for t in doc["search_trace"]:
            t.pop("seconds")
        outs.append(doc)
    assert outs[0] == outs[1]


def test_parse_error_position(capsys):
    code, _, err = run(capsys, "quotients", "--term", "binom(i+j")
    assert code == EXIT_INPUT
    e = json.loads(err)
    assert e["kind"] == "parse_error" and (e["line"], e["column"]) == (1, 10)


def test_no_certificate_exit_one(capsys):
    code, _, err = run(capsys, "telescope", "--example", "2", "--max-order", "1")
    assert code == EXIT_FAIL
    assert json.loads(err)["kind"] == "no_certificate"


def test_missing_problem(capsys):
    code, _, err = run(capsys, "telescope")
    assert code == EXIT_INPUT and "exactly one" in json.loads(err)["message"]


def test_missing_manifest_file(capsys, tmp_path):
    code, _, err = run(capsys, "quotients", str(tmp_path / "absent.json"))
    assert code == EXIT_IO and json.loads(err)["kind"] == "io_error"


def test_manifest_round_trip(tmp_path, capsys):
    man = ProblemManifest.from_example(example(6))
    path = tmp_path / "m.json"
    path.write_text(json.dumps(man.to_dict()))
    assert ProblemManifest.from_dict(json.loads(path.read_text())) == man
    code, out, _ = run(capsys, "sumcheck", str(path), "--n-range", "0:4")
    assert code == EXIT_OK and "annihilation" in out and "identity" in out


def test_manifest_validation():
    with pytest.raises(ValueError, match="unknown"):
        ProblemManifest.from_dict({"term": "binom(n,i)", "colour": 1})
    with pytest.raises(ValueError, match="overlap"):
        ProblemManifest("binom(n,i)", rec_var="i")
    with pytest.raises(ValueError, match="two"):
        ProblemManifest("binom(n,i)", sum_vars=("i",))
    with pytest.raises(ValueError, match="term"):
        ProblemManifest.from_dict({"rec_var": "n"})


def test_bad_manifest_json(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "quotients", str(path))
    assert code == EXIT_INPUT and "JSON" in json.loads(err)["message"]


def test_sumcheck_needs_param_values(capsys):
    code, _, err = run(capsys, "sumcheck", "--example", "6", "--param-values", "{}")
    assert code == EXIT_INPUT


def test_bad_solver_option(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"term": "binom(n,i)*binom(n,j)", "options": {"speed": 3}}))
    code, _, err = run(capsys, "telescope", str(path))
    assert code == EXIT_INPUT and "solver options" in json.loads(err)["message"]


def test_corpus_subset_json(capsys):
    code, out, _ = run(capsys, "corpus", "--only", "1,4", "--json", "--trials", "5")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["passed"] == doc["total"] == 2
    assert set(doc["pipeline_timings"]) == {"reduced", "estden", "theorem"}


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "telescoper", "quotients", "--example", "1"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0 and "d = 1" in proc.stdout


def test_telescope_example1_coefficients(capsys):
    code, out, _ = run(capsys, "telescope", "--example", "1")
    assert code == EXIT_OK and json.loads(out)["coeffs"] == ["2*n + 1"]


def test_full_corpus_including_slow(capsys):
    code, out, _ = run(capsys, "corpus", "--include-slow", "--no-timings", "--trials", "5")
    assert code == EXIT_OK
    assert "7/7 pass" in out
