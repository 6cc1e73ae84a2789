import json
import subprocess
import sys

import pytest

from iifcyclicity.cli import EXIT_DISAGREE, EXIT_INPUT, EXIT_OK, main
from iifcyclicity.errors import JobError
from iifcyclicity.jobs import corpus_names, load_job, parse_job

BASE = {"name": "t", "system": {"p": "-2*y", "q": "-2*x+3*x^2"}, "points": {"o": [0, 0]}}


def job(**extra):
    d = json.loads(json.dumps(BASE))
    d.update(extra)
    return d


@pytest.mark.parametrize(
    "payload, field",
    [
        ({"system": {"p": "x+"}}, "system"),
        ({"tasks": [{"type": "nope"}]}, "tasks[0].type"),
        ({"tasks": [{"type": "saddle", "point": "zz"}]}, "tasks[0].point"),
        ({"tasks": [{"type": "verify-iif", "v": "x", "mode": "guess"}]}, "tasks[0].mode"),
        ({"extra": 1}, "job"),
    ],
)
def test_parse_errors_name_the_field(payload, field):
    d = job(**payload)
    if "system" in payload:
        d["system"] = payload["system"]
    with pytest.raises(JobError) as exc:
        parse_job(d)
    assert exc.value.field == field


def test_corpus_loads():
    names = corpus_names()
    assert {"example1", "example3", "andronov", "perturb"} <= set(names)
    for n in names:
        assert load_job(n).tasks


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--job", str(bad)]) == EXIT_INPUT
    assert "input error" in capsys.readouterr().err
    assert main(["run", "--job", str(tmp_path / "missing.json")]) == EXIT_INPUT
    assert main(["saddle", "--job", "example3"]) == EXIT_OK
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps(job(tasks=[{"type": "saddle", "point": "o", "expect": {"lambda": 3}}])))
    assert main(["saddle", "--job", str(wrong)]) == EXIT_DISAGREE
    assert main(["perturb", "--n", "2"]) == EXIT_INPUT


def test_direct_perturb(capsys):
    assert main(["perturb", "--n", "2", "--eps", "1/20", "--a", "1", "2", "--format", "json"]) == EXIT_OK
    rec = json.loads(capsys.readouterr().out)
    assert rec["job"] == "perturb" and rec["summary"]["pass"] == 1


def test_deterministic_output(capsys):
    outs = []
    for _ in range(2):
        main(["run", "--job", "example3", "--format", "json"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    json.loads(outs[0])


def test_out_directory(tmp_path, capsys):
    assert main(["run", "--job", "example3", "--out", str(tmp_path)]) == EXIT_OK
    files = {p.name for p in tmp_path.iterdir()}
    assert {"example3_report.json", "example3_report.txt"} <= files
    assert any(f.endswith(".csv") for f in files)


def test_corpus_list(capsys):
    assert main(["corpus", "--list"]) == EXIT_OK
    assert capsys.readouterr().out.split() == corpus_names()


def test_workers_match_sequential():
    args = [sys.executable, "-m", "iifcyclicity.cli", "corpus", "--only", "example3", "example2-m1",
            "--format", "json"]
    seq = subprocess.run(args, capture_output=True, text=True)
    par = subprocess.run(args + ["--workers", "2"], capture_output=True, text=True)
    assert seq.returncode == par.returncode == EXIT_OK
    assert seq.stdout == par.stdout
