import csv
import json

import pytest

from tmscatter.cli import main
from tmscatter.config import DEFAULTS, config_hash


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def bump_config(tmp_path, amp=0.05):
    cfg = {"potential": {"type": "separable", "axial": {"shape": "gaussian", "amp": amp,
                                                        "width": 0.4, "nsig": 5},
                         "transverse": {"shape": "gaussian", "width": 0.4}},
           "numerics": {"n_prop": 12, "n_evan": 12, "n_theta": 37, "p_max_check": False}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_solve_zero_potential_all_zero(tmp_path):
    code, out = run(tmp_path, "solve", "--theta0=-30,0,45", "--side", "both")
    assert code == 0
    rows = read_csv(out / "amplitude.csv")
    assert len(rows) == 6 * len({r["theta_deg"] for r in rows})
    assert all(float(r["abs_f2"]) == 0.0 for r in rows)
    assert list(rows[0]) == ["theta0_deg", "side", "theta_deg", "re_f", "im_f", "abs_f2"]


def test_delta_compare_report(tmp_path):
    code, out = run(tmp_path, "delta-compare", "--z", "4+0i", "--k", "1.0", "--r0", "0,0")
    assert code == 0
    report = (out / "report.txt").read_text()
    assert "PASS" in report and "0.564190" in report
    rows = read_csv(out / "amplitude.csv")
    vals = [float(r["abs_f2"]) ** 0.5 for r in rows]
    assert max(vals) - min(vals) <= 1e-12
    assert vals[0] == pytest.approx(0.5641895835, abs=1e-9)
    res = json.loads((out / "result.json").read_text())["result"]
    assert res["passed"] and all(c["tm_vs_ls_max_rel_diff"] <= 1e-12 for c in res["checks"])


def test_invis_certify_report(tmp_path):
    code, out = run(tmp_path, "invis-certify", "--alpha", "1.0", "--margin", "0.05", "--k", "0.9")
    assert code == 0
    report = (out / "report.txt").read_text()
    assert "PASS" in report and "worst" in report


def test_csv_byte_identical_across_runs(tmp_path):
    cfg = bump_config(tmp_path)
    _, a = run(tmp_path, "solve", "--config", str(cfg), name="a")
    _, b = run(tmp_path, "solve", "--config", str(cfg), name="b")
    assert (a / "amplitude.csv").read_bytes() == (b / "amplitude.csv").read_bytes()
    ja = json.loads((a / "result.json").read_text())
    jb = json.loads((b / "result.json").read_text())
    ja.pop("timestamp"), jb.pop("timestamp")
    ja["config"]["output"], jb["config"]["output"] = None, None
    assert ja["result"] == jb["result"]


def _keys(d, prefix=""):
    for key, val in d.items():
        if isinstance(val, dict) and key != "potential":
            yield from _keys(val, f"{prefix}{key}.")
        else:
            yield prefix + key


def test_config_echo_is_complete(tmp_path):
    cfg = bump_config(tmp_path)
    _, out = run(tmp_path, "solve", "--config", str(cfg))
    doc = json.loads((out / "result.json").read_text())
    assert set(_keys(DEFAULTS)) <= set(_keys(doc["config"]))
    assert doc["config_hash"] == config_hash(doc["config"])
    # values resolved at run time are reported next to the results
    assert doc["result"]["grid"]["p_max"] == pytest.approx(4.0)
    assert doc["result"]["diagnostics"]["dx"] > 0


def test_flags_override_file(tmp_path):
    cfg = bump_config(tmp_path)
    _, out = run(tmp_path, "solve", "--config", str(cfg), "--n-prop", "10", "--k", "1.1")
    doc = json.loads((out / "result.json").read_text())
    assert doc["config"]["numerics"]["n_prop"] == 10
    assert doc["config"]["numerics"]["n_evan"] == 12
    assert doc["result"]["grid"]["k"] == 1.1


def test_print_config(tmp_path, capsys):
    assert main(["solve", "--print-config", "--set", "numerics.n_prop=7"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["numerics"]["n_prop"] == 7 and cfg["numerics"]["scheme"] == "rk4"


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_exit_code_validation(tmp_path, capsys):
    code, _ = run(tmp_path, "solve", "--n-prop", "-3")
    assert code == 2 and _err(capsys)["error"] == "ValidationError"
    code, _ = run(tmp_path, "solve", "--set", "potential.type=\"banana\"")
    assert code == 2


def test_exit_code_conditioning(tmp_path, capsys):
    cfg = bump_config(tmp_path)
    code, _ = run(tmp_path, "solve", "--config", str(cfg), "--p-max", "40",
                  "--set", "numerics.max_growth=1e6")
    assert code == 3
    err = _err(capsys)
    assert err["exit_code"] == 3 and err["growth"] > 1e6


def test_exit_code_spectral_singularity(tmp_path, capsys):
    code, _ = run(tmp_path, "delta-compare", "--z", "0+4i")
    assert code == 4
    assert _err(capsys)["error"] == "SpectralSingularity"


def test_sweep_respects_thread_cap(tmp_path, monkeypatch):
    cfg = bump_config(tmp_path)
    monkeypatch.setenv("SCATTER_THREADS", "2")
    code, out = run(tmp_path, "sweep", "--config", str(cfg), "--k-sweep", "0.8,1.0,1.2")
    assert code == 0
    doc = json.loads((out / "result.json").read_text())
    assert doc["result"]["workers"] == 2
    assert [p["k"] for p in doc["result"]["points"]] == [0.8, 1.0, 1.2]
    monkeypatch.setenv("SCATTER_THREADS", "1")
    _, serial = run(tmp_path, "sweep", "--config", str(cfg), "--k-sweep", "0.8,1.0,1.2",
                    name="serial")
    assert (out / "amplitude.csv").read_bytes() == (serial / "amplitude.csv").read_bytes()


def test_born_check_runs(tmp_path):
    code, out = run(tmp_path, "born-check", "--alpha", "1.0", "--beta", "1.5", "--k", "0.8",
                    "--n-prop", "16", "--n-evan", "16")
    assert code == 0
    assert "PASS" in (out / "report.txt").read_text()


def test_oracle_compare_runs(tmp_path):
    cfg = bump_config(tmp_path, amp=0.3)
    code, out = run(tmp_path, "oracle-compare", "--config", str(cfg), "--closure", "evanescent",
                    "--set", "oracle.y_range=[-2,2]", "--set", "oracle.h=0.05",
                    "--n-prop", "24", "--n-evan", "24")
    assert code == 0
    rows = read_csv(out / "amplitude.csv")
    assert "re_f_oracle" in rows[0]
