import csv
import io
import json

import pytest

from cabm import acceptance
from cabm import cli


def call(*argv, env=None):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), env=env or {}, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def body_lines(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def preamble(text):
    out = {}
    for ln in text.splitlines():
        if ln.startswith("# "):
            k, v = ln[2:].split("=", 1)
            out[k] = json.loads(v)
    return out


def test_kernel_table_diagonal_is_one():
    code, out, _ = call("kernel", "--data", "maximal", "--theta", "0", "--t", "1",
                        "--grid", "-3:3:0.1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO("\n".join(body_lines(out)))))
    assert list(rows[0]) == ["x", "y", "K", "DxK", "DyK", "DxyK"]
    diag = [r for r in rows if r["x"] == r["y"]]
    assert len(diag) == 61
    assert all(float(r["K"]) == 1.0 for r in diag)
    assert len(rows) == 61 * 62 // 2
    cfg = preamble(out)
    assert cfg["command"] == "kernel" and cfg["grid"][0] == -3.0 and cfg["t"] == 1.0


def test_kernel_json():
    code, out, _ = call("kernel", "--data", "points:0", "--theta", "0.5", "--grid", "-1:1:1",
                        "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["config"]["data"] == "points:0"
    assert len(d["K"]) == 6


def test_identical_invocations_identical_files(tmp_path):
    p = tmp_path / "s.csv"
    args = ["simulate", "--data", "points:-1,0,2", "--theta", "0.5", "--t", "0.05",
            "--reps", "20", "--seed", "3", "--out", str(p)]
    assert call(*args)[0] == 0
    first = p.read_bytes()
    assert call(*args)[0] == 0
    assert p.read_bytes() == first
    assert b"replicate,t,index,position" in first


def test_simulate_trajectory_and_json():
    code, out, _ = call("simulate", "--data", "points:0,0.5", "--t", "0.01", "--reps", "2",
                        "--record-every", "5")
    assert code == 0
    rows = body_lines(out)
    assert rows[0] == "replicate,t,index,position"
    reps = {r.split(",")[0] for r in rows[1:]}
    assert reps == {"0", "1"}
    code, out, _ = call("simulate", "--data", "empty", "--t", "0.01", "--reps", "3",
                        "--format", "json")
    d = json.loads(out)
    assert [s["positions"] for s in d["samples"]] == [[], [], []]


def test_seed_precedence(tmp_path):
    base = ["simulate", "--data", "points:0", "--t", "0.01", "--reps", "1"]
    assert preamble(call(*base)[1])["seed"] == 0
    assert preamble(call(*base, env={"CABM_SEED": "17"})[1])["seed"] == 17
    assert preamble(call(*base, "--seed", "4", env={"CABM_SEED": "17"})[1])["seed"] == 4
    assert preamble(call(*base, "--seed", "-1")[1])["seed"] == 2 ** 64 - 1
    assert call(*base, env={"CABM_SEED": "x"})[0] == 2


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.conf"
    cfg.write_text("# settings\ntheta = 0.25\nreps=3   # inline\nrecord-every = 0\nt = 0.02\n")
    code, out, _ = call("simulate", "--config", str(cfg), "--data", "points:0")
    assert code == 0
    rec = preamble(out)
    assert (rec["theta"], rec["reps"], rec["t"]) == (0.25, 3, 0.02)
    code, out, _ = call("simulate", "--config", str(cfg), "--theta", "0.75", "--data", "points:0")
    assert preamble(out)["theta"] == 0.75
    bad = tmp_path / "bad.conf"
    bad.write_text("grid = 0:1:0.5\n")
    assert call("simulate", "--config", str(bad))[0] == 2


@pytest.mark.parametrize("argv", [
    ("simulate", "--theta", "2"),
    ("simulate", "--t", "0"),
    ("simulate", "--reps", "0"),
    ("simulate", "--format", "xml"),
    ("simulate", "--bogus", "1"),
    ("kernel", "--data", "maximal"),
    ("kernel", "--grid", "1:0:0.1"),
    ("kernel", "--grid", "abc"),
    ("kernel", "--data", "{bad json", "--grid", "0:1:0.5"),
    ("kernel", "--data", "/no/such/file.json", "--grid", "0:1:0.5"),
    ("duality-check", "--points", "0,1,2"),
    ("duality-check", "--points", "1,0"),
    ("laplace", "--phi", "0,1|0,1,0"),
    ("mixture-check", "--k", "1"),
    ("intensity-check", "--grid", "0:1:0.5", "--pairs", "0-5"),
    ("approx", "--f", "0|1"),
    ("approx", "--f", "|1", "--n", "0"),
    ("nosuch",),
    (),
])
def test_usage_errors_exit_2(argv):
    code, out, err = call(*argv)
    assert code == 2
    assert "usage" in err
    assert out == ""


def test_product_data_needs_theta_one():
    code, _, err = call("kernel", "--data", '{"variant": "product", "breakpoints": [], '
                        '"values": [0.5]}', "--grid", "0:1:0.5", "--theta", "0.5")
    assert code == 2


def test_approx_output():
    code, out, _ = call("approx", "--f", "|-1", "--n", "2")
    assert code == 0
    d = json.loads(out)
    assert d["points"] == [-2.0, 2.0]
    code, out, _ = call("approx", "--f", "-1,0,1|1,0.3,-0.5,1", "--n", "4", "--format", "csv")
    assert body_lines(out)[0] == "index,position"


def test_duality_check_cli():
    code, out, _ = call("duality-check", "--data", "points:-1,0,2", "--theta", "0",
                        "--t", "0.5", "--points", "-0.5,0.5", "--reps", "20000", "--seed", "1",
                        "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO("\n".join(body_lines(out)))))
    assert rows[0] == ["check", "param_hash", "analytic", "mc_mean", "mc_stderr", "tolerance",
                       "pass"]
    assert rows[1][0] == "duality_n1" and rows[1][-1] == "true"


def test_intensity_and_laplace_cli():
    code, out, _ = call("intensity-check", "--data", "empty", "--grid", "-1:1:0.5",
                        "--reps", "10", "--pairs", "0-2")
    assert code == 0 and json.loads(out)["all_pass"] is True
    code, out, _ = call("laplace", "--data", "empty", "--phi", "-0.5,0.5|0,0.5,0",
                        "--mc", "false")
    d = json.loads(out)
    assert code == 0 and d["reports"][0]["analytic"] == 1.0


def test_failed_check_exit_1(monkeypatch):
    failing = acceptance.CriterionResult(1, "stub", False, 0.0, None, "forced failure")
    monkeypatch.setattr(acceptance, "run_all", lambda **kw: [failing])
    code, out, _ = call("selftest", "--quick")
    assert code == 1
    assert json.loads(out)["all_pass"] is False


def test_mixture_check_example():
    code, out, _ = call("mixture-check", "--theta", "0.5", "--k", "3", "--reps", "200000",
                        "--seed", "7")
    assert code == 0
    reports = json.loads(out)["reports"]
    surv = [r for r in reports if r["check"] == "mixture_survivors"][0]
    assert surv["analytic"] == 0.25


def test_selftest_quick():
    code, out, err = call("selftest", "--quick", "--seed", "42")
    assert code == 0, err
    d = json.loads(out)
    assert d["all_pass"] is True
    assert [c["number"] for c in d["criteria"]] == list(range(1, 8))
    assert err.count("[PASS]") == 7
