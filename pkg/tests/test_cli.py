import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from symmaxent import schema
from symmaxent.cli import main
from symmaxent.polytope import pr_box, uniform_behavior

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.mark.parametrize("name,code", [("gibbs.json", 0), ("symmetry_infeasible.json", 2),
                                       ("chsh_maxent.json", 0)])
def test_shipped_problems_exit_codes(name, code, tmp_path):
    out = tmp_path / "out.json"
    assert main(["solve", str(PROBLEMS / name), "--out", str(out)]) == code
    payload = json.loads(out.read_text())
    assert payload["status"] == ("optimal" if code == 0 else "infeasible")


def test_solve_round_trip(tmp_path):
    out = tmp_path / "gibbs.json"
    assert main(["solve", str(PROBLEMS / "gibbs.json"), "--out", str(out)]) == 0
    pf = schema.parse_problem(schema.load_json(PROBLEMS / "gibbs.json"))
    check = schema.check_solution(json.loads(out.read_text()), pf.problem)
    assert check["ok"] and np.max(np.abs(check["residuals"])) <= 1e-8


def test_infeasible_payload_has_certificate(tmp_path):
    out = tmp_path / "inf.json"
    main(["solve", str(PROBLEMS / "symmetry_infeasible.json"), "--out", str(out)])
    payload = json.loads(out.read_text())
    text = json.dumps(payload)
    assert "twirled_norm" in text


def test_output_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        main(["solve", str(PROBLEMS / "chsh_maxent.json"), "--seed", "3", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_subprocess_entry_point_is_deterministic():
    cmd = [sys.executable, "-m", "symmaxent", "solve", str(PROBLEMS / "gibbs.json"), "--seed", "1"]
    a = subprocess.run(cmd, capture_output=True, check=True)
    b = subprocess.run(cmd, capture_output=True, check=True)
    assert a.stdout == b.stdout and a.stdout


BAD_MATRIX = ('{"space": {"kind": "quantum", "size": 2}, '
              '"constraints": [{"kind": "moment", "observable": [[1, 2]], "target": 0}]}')


@pytest.mark.parametrize("content", ["{not json", BAD_MATRIX,
                                     '{"space": {"kind": "fuzzy", "size": 2}, "constraints": []}'])
def test_malformed_input_exits_4(content, tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(content)
    assert main(["solve", str(path)]) == 4


def test_missing_file_and_bad_flags_exit_4(tmp_path):
    assert main(["solve", str(tmp_path / "missing.json")]) == 4
    assert main(["solve"]) == 4


def test_entropy_command(tmp_path, capsys):
    state = write_json(tmp_path / "s.json", {"space": {"kind": "quantum", "size": 2},
                                            "state": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]})
    assert main(["entropy", state]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(np.log(2), abs=1e-15)


def test_twirl_command(tmp_path):
    state = write_json(tmp_path / "s.json", {"space": {"kind": "classical", "size": 3}, "state": [1, 0, 0]})
    group = write_json(tmp_path / "g.json", {"kind": "permutations", "generators": [[1, 2, 0]]})
    out = tmp_path / "t.json"
    assert main(["twirl", state, group, "--out", str(out)]) == 0
    assert np.allclose(json.loads(out.read_text())["state"], [1 / 3] * 3)


def test_polytope_command(tmp_path, capsys):
    pr = write_json(tmp_path / "pr.json", pr_box().flat().tolist())
    assert main(["polytope", pr, "--membership", "local"]) == 0
    assert capsys.readouterr().out.strip() == "outside"
    assert main(["polytope", pr, "--membership", "nosignal"]) == 0
    assert capsys.readouterr().out.strip() == "inside"
    uni = write_json(tmp_path / "u.json", {"behavior": uniform_behavior().flat().tolist()})
    assert main(["polytope", uni, "--chsh"]) == 0
    assert all(float(v) == 0.0 for v in capsys.readouterr().out.split())
    bad = write_json(tmp_path / "bad.json", [0.5] * 16)
    assert main(["polytope", bad]) == 4


def test_coherent_commands(tmp_path):
    out = tmp_path / "c.json"
    assert main(["coherent", "--alpha", "1+0i", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert max(map(abs, payload["saturation_residuals"])) <= 1e-6
    assert main(["coherent", "--saturate", "0", "0", "--dim", "20", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["status"] == "optimal"
    assert main(["coherent", "--su2", "0.5", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["resolution_residual"] <= 1e-9
    assert main(["coherent", "--su2", "0.3"]) == 4
    assert main(["coherent", "--saturate", "9", "0", "--dim", "8", "--out", str(out)]) == 2


def test_float_formatting():
    assert schema.format_float(4.0) == "4.0"
    assert schema.format_float(0.1) == "0.10000000000000001"
    assert float(schema.format_float(np.pi)) == np.pi
    assert json.loads(schema.dumps({"a": float("nan"), "b": 1.0})) == {"a": None, "b": 1.0}
