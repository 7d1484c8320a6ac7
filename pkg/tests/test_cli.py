import json
import math
import subprocess
import sys

import pytest

from cmsflow.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_geometric_pressure(capsys):
    code, out, _ = run(capsys, "pressure", "--model", "renewal", "--const-potential=-log2")
    assert code == 0
    assert abs(json.loads(out)["pressure"]) <= 1e-9


def test_all_routes_log2(capsys):
    code, out, _ = run(capsys, "pressure", "--all-routes")
    d = json.loads(out)
    assert code == 0
    assert d["pressure"] == pytest.approx(math.log(2), abs=1e-12)
    assert d["routes"]["dp"]["estimate"] == pytest.approx(math.log(2), abs=1e-6)
    assert d["routes"]["perron"]["hi"] <= math.log(2) + 1e-12


def test_finite_model(capsys):
    code, out, _ = run(capsys, "pressure", "--model", "finite", "--matrix", "[[1,1],[1,0]]")
    assert code == 0
    assert json.loads(out)["pressure"] == pytest.approx(math.log((1 + 5**0.5) / 2), abs=1e-11)


def test_example_trans_null(capsys):
    code, out, _ = run(capsys, "example", "trans_null")
    d = json.loads(out)
    assert code == 0 and d["pass"]
    assert all(row["pass"] for row in d["expectations"])


def test_entropy_two_phase(capsys):
    code, out, _ = run(capsys, "entropy", "--scenario", "two_phase")
    d = json.loads(out)
    assert code == 0
    assert d["s_infinity"] == 1.0 and d["h_flow"] > 1.0


def test_flow_pressure_on_interval(capsys):
    code, out, _ = run(capsys, "flow-pressure", "--scenario", "two_phase", "--t", "2.1")
    d = json.loads(out)
    assert code == 0 and d["pressure"] == 1.0 and d["sticks_to_boundary"]


def test_classify_transient_exit_zero(capsys):
    code, out, _ = run(capsys, "classify", "--scenario", "hofbauer_transient")
    d = json.loads(out)
    assert code == 0
    assert d["flow_class"] == "Transient" and d["mme"] == "None"


def test_phase_scan_csv(capsys):
    code, out, _ = run(capsys, "phase-scan", "--scenario", "two_phase", "--grid", "0.5,2.1", "--csv")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "t,pressure,pressure_err,regime,flow_class"
    assert lines[2].startswith("2.1,1,0,Affine")


def test_mp_csv(capsys):
    code, out, _ = run(capsys, "mp", "--alpha", "1", "--branches", "50", "--csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "n,tau_lo,tau_hi,cyl_len" and len(lines) == 51


def test_spec_file(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"roof": {"c": ["1", "0", "0", "0"], "lin": "1"}}))
    code, out, _ = run(capsys, "entropy", "--spec", str(f))
    assert code == 0
    assert json.loads(out)["h_flow"] == pytest.approx(math.log(2), abs=1e-10)


@pytest.mark.parametrize("argv", [
    ["example", "nope"],
    ["flow-pressure", "--scenario", "two_phase", "--t", "abc"],
    ["flow-pressure"],
    ["pressure", "--model", "finite"],
    ["pressure", "--model", "finite", "--matrix", "[[1,2],[1,1]]"],
    ["mp", "--alpha", "-1", "--branches", "10"],
    ["phase-scan", "--scenario", "two_phase", "--step", "0"],
])
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("thermo")


def test_bad_json_spec(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    code, _, _ = run(capsys, "entropy", "--spec", str(f))
    assert code == 2


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as e:
        main(["no-such-verb"])
    assert e.value.code == 2


def test_floats_have_12_significant_digits(capsys):
    _, out, _ = run(capsys, "entropy", "--scenario", "two_phase")
    assert json.loads(out)["h_flow"] == 1.22678604337


def test_output_byte_deterministic():
    cmd = [sys.executable, "-m", "cmsflow", "classify", "--scenario", "no_phase", "--t", "1"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a
