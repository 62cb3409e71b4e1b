import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from errbound.cli import CSV_HEADER, main, parse_system
from errbound.common import InvalidInputError

GOLDEN = Path(__file__).parent / "golden"

CASES = {
    "hoffman_ex1": ["hoffman", "examples/ex1.json"],
    "hoffman_ex2_sweep": ["hoffman", "examples/ex2.json", "--sweep", "0.1,0.01", "--anchor", "0,0", "--direction", "0,1"],
    "phi_ex2": ["phi", "examples/ex2.json", "--at", "0,0"],
    "phi_exp": ["phi", "--function", "exp_minus_one", "--at", "0"],
    "modulus_exp_local": ["modulus", "--function", "exp_minus_one", "--local", "--at", "0"],
    "stability_ex2": ["stability", "examples/ex2.json", "--at", "0,0", "--eps", "0.1"],
    "stability_exp_global": ["stability", "--function", "exp_minus_one", "--global", "--eps", "0.05"],
}


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("name", sorted(CASES))
def test_reports_match_frozen_output(name):
    code, out, _ = run(CASES[name])
    assert code == 0
    assert out == (GOLDEN / f"{name}.txt").read_text()


def test_hoffman_ex1_summary():
    _, out, _ = run(["hoffman", "examples/ex1.json"])
    assert "realizable active sets: 6" in out
    assert "lower_bound: 0.7071067811865476 (certified)" in out


def test_hoffman_ex2_unstable():
    _, out, _ = run(["hoffman", "examples/ex2.json"])
    assert "lower_bound: 0.0 (certified)" in out and "verdict: unstable" in out


def test_phi_values():
    _, out, _ = run(["phi", "examples/ex1.json", "--at", "0,1"])
    assert "phi: -1.4142135623730951" in out and "active: {1}" in out
    _, out, _ = run(["phi", "--function", "exp_minus_one", "--at", "0"])
    assert "phi: -1.0" in out and "certified: yes" in out


def test_modulus_routes():
    _, out, _ = run(["modulus", "--function", "zero", "--local", "--at", "0"])
    assert "direct ratio: inf" in out and "primal phi: inf" in out
    _, out, _ = run(["modulus", "halfspace.json", "--global"])
    val = float(out.split("direct ratio: ")[1].split()[0])
    assert abs(val - 5) < 1e-6


def test_stability_point_stable():
    _, out, _ = run(["stability", "--function", "exp_minus_one", "--at", "0"])
    assert "verdict: stable" in out and "tilt margin" in out


def test_sweep_csv(tmp_path):
    csv_path = tmp_path / "sweep.csv"
    code, _, _ = run(["hoffman", "examples/ex2.json", "--sweep", "0.1,0.01", "--anchor", "0,0", "--direction", "0,1", "--out", str(csv_path)])
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1].startswith("0.01,0,0,") and lines[2].startswith("0.10000000000000001,0,0,")


def test_json_report(tmp_path):
    path = tmp_path / "r.json"
    run(["phi", "examples/ex2.json", "--at", "0,0", "--json", str(path)])
    doc = json.loads(path.read_text())
    assert doc["phi"] == 0.0 and doc["certified"] is True and doc["exit"] == 0


def test_oracle_check_passes():
    for path in ("examples/ex1.json", "examples/ex2.json", "halfspace.json"):
        code, out, _ = run(["oracle-check", path])
        assert code == 0 and "result: pass" in out


@pytest.mark.parametrize(
    "doc",
    [
        '{"space_dim": 2, "norm": "euclidean", "rows": []}',
        '{"space_dim": 2, "rows": [{"label": "1", "a": [1], "b": 0}]}',
        '{"space_dim": 2, "rows": [{"label": "1", "a": [1, 2], "b": 0, "c": 1}]}',
        '{"space_dim": 2, "rows": [{"label": "1", "a": [1, 2], "b": 0}], "extra": true}',
        '{"space_dim": 2, "norm": "l7", "rows": [{"label": "1", "a": [1, 2], "b": 0}]}',
        '{"space_dim": 2, "rows": [{"label": 1, "a": [1, 2], "b": 0}]}',
        "[1, 2]",
        "{not json",
    ],
)
def test_bad_specs_are_rejected(doc, tmp_path):
    with pytest.raises(InvalidInputError):
        parse_system(doc)
    p = tmp_path / "bad.json"
    p.write_text(doc)
    for cmd in ("hoffman", "oracle-check"):
        code, _, err = run([cmd, str(p)])
        assert code == 1 and err.startswith("errbound:")


def test_usage_errors_exit_one():
    assert run(["phi"])[0] == 1
    assert run(["nonsense"])[0] == 1
    assert run(["phi", "--function", "nope", "--at", "0"])[0] == 1
    assert run(["phi", "--function", "exp_minus_one", "--at", "zz"])[0] == 1
    assert run(["stability", "--function", "exp_minus_one", "--at", "1"])[0] == 1


def test_uncertified_phi_exits_three(tmp_path):
    p = tmp_path / "sup.json"
    p.write_text('{"space_dim": 2, "norm": "sup", "rows": [{"label": "1", "a": [3, 4], "b": 0}]}')
    code, out, _ = run(["phi", str(p), "--at", "0,0"])
    assert code == 3 and "certified: no" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "errbound", "phi", "examples/ex2.json", "--at", "0,0"], capture_output=True, text=True)
    assert proc.returncode == 0 and "phi: 0.0" in proc.stdout
