import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from entropic_barrier import __version__
from entropic_barrier.cli import parse_and_run


@pytest.fixture
def bodies(tmp_path):
    paths = {}
    for name, d in {
        "cube2": {"type": "box", "lo": [0, 0], "hi": [1, 1]},
        "cube1": {"type": "box", "lo": [0], "hi": [1]},
        "simplex2": {"type": "simplex", "vertices": [[0, 0], [1, 0], [0, 1]]},
        "bad": {"type": "box", "lo": [0, 0]},
    }.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(d))
        paths[name] = str(p)
    (tmp_path / "broken.json").write_text("{not json")
    paths["broken"] = str(tmp_path / "broken.json")
    return paths


def run(argv, capsys):
    code = parse_and_run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_example(bodies, capsys):
    code, out, _ = run(["eval", "--body", bodies["cube2"], "--theta", "0,0"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "entropic-barrier/1" and doc["version"] == __version__
    assert doc["subcommand"] == "eval" and doc["seed"] == 0
    assert doc["body_hash"].startswith("sha256:")
    assert doc["result"]["value"] == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(doc["result"]["mean"], [0.5, 0.5])
    assert "wall_time_s" in doc


def test_conjugate(bodies, capsys):
    code, out, _ = run(["conjugate", "--body", bodies["cube1"], "--x", "0.7"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["theta"][0] == pytest.approx(2.6721, abs=1e-3)


def test_verify_sc(bodies, capsys):
    code, out, _ = run(["verify-sc", "--body", bodies["cube2"], "--directions", "8", "--mode", "exact"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["pass"] and doc["result"]["nu_max"] <= 2 * (1 + 1e-6)


def test_solve_lp_with_negative_vector_and_csv(bodies, tmp_path, capsys):
    out_path = tmp_path / "lp.json"
    code, _, _ = run(["solve-lp", "--body", bodies["simplex2"], "--c", "-1,-1", "--eps", "1e-3",
                      "--out", str(out_path)], capsys)
    assert code == 0
    doc = json.loads(out_path.read_text())
    lo, hi = doc["result"]["certified_value_interval"]
    assert lo - 1e-8 <= -1.0 <= hi and doc["pass"]
    rows = list(csv.reader(open(str(out_path) + ".csv")))
    assert rows[0] == ["t", "x_1", "x_2", "objective", "gap_bound"]
    assert len(rows) - 1 == doc["result"]["records"]


def test_sample_csv(bodies, tmp_path, capsys):
    p = tmp_path / "s.csv"
    code, _, _ = run(["sample", "--body", bodies["cube2"], "--samples", "64", "--out", str(p)], capsys)
    rows = list(csv.reader(open(p)))
    assert code == 0 and rows[0] == ["x_1", "x_2"] and len(rows) == 65


def test_catalog_lines(capsys):
    code, out, _ = run(["verify-hormander"], capsys)
    lines = [json.loads(s) for s in out.strip().splitlines()]
    assert code == 0 and len(lines) == 13
    assert all(line["schema"] == "entropic-barrier/1" for line in lines)
    assert lines[-1]["summary"] == {"cases": 12, "failed": 0, "pass": True}
    assert "wall_time_s" in lines[-1] and "wall_time_s" not in lines[0]


def test_verify_varentropy_single_body(bodies, capsys):
    code, out, _ = run(["verify-varentropy", "--body", bodies["cube2"], "--theta", "50,50"], capsys)
    first = json.loads(out.splitlines()[0])
    assert code == 0 and first["report"]["lhs"] == pytest.approx(2.0, abs=1e-6)


def test_verify_tensorization(bodies, capsys):
    code, out, _ = run(["verify-tensorization", "--body", bodies["cube1"], "--body", bodies["simplex2"],
                        "--x", "0.3", "--x", "0.2,0.5"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["pass"] and doc["result"]["residual"] <= 1e-8


def test_deterministic_modulo_wall_time(bodies, capsys):
    argv = ["eval", "--body", bodies["simplex2"], "--theta", "1,2", "--mode", "mc", "--samples", "2000",
            "--seed", "3"]
    docs = []
    for _ in range(2):
        code, out, _ = run(argv, capsys)
        assert code == 0
        d = json.loads(out)
        d.pop("wall_time_s")
        docs.append(json.dumps(d, sort_keys=True))
    assert docs[0] == docs[1]


@pytest.mark.parametrize("argv_tail, message", [
    (["--theta", "0,0"], "body.hi: missing field"),
])
def test_malformed_body_names_field(bodies, capsys, argv_tail, message):
    code, _, err = run(["eval", "--body", bodies["bad"]] + argv_tail, capsys)
    assert code == 2 and message in err


def test_usage_errors_exit_2(bodies, capsys):
    assert run(["eval", "--body", bodies["cube2"], "--theta", "1,2,3"], capsys)[0] == 2
    assert run(["eval", "--theta", "1,2"], capsys)[0] == 2
    assert run(["eval", "--body", bodies["broken"], "--theta", "0,0"], capsys)[0] == 2
    assert run(["conjugate", "--body", bodies["cube2"], "--x", "1.5,0.5"], capsys)[0] == 2
    assert run(["solve-lp", "--body", bodies["cube2"], "--c", "1,1"], capsys)[0] == 2
    assert run(["no-such-command"], capsys)[0] == 2
    assert run(["verify-tensorization", "--body", bodies["cube1"]], capsys)[0] == 2


@pytest.mark.skipif(shutil.which("entropic-barrier") is None, reason="console script not installed")
def test_console_script(bodies):
    res = subprocess.run(["entropic-barrier", "eval", "--body", bodies["cube2"], "--theta", "1,1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["result"]["method"] == "exact"


def test_module_entry_point(bodies):
    res = subprocess.run([sys.executable, "-m", "entropic_barrier.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
