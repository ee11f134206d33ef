import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from varinfer import cli, io

CLI_FIXTURES = Path(__file__).parent / "fixtures" / "cli"


def run(argv, capsys=None):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr() if capsys else None
    return code, out


def write_config(path, obj):
    path.write_text(json.dumps(obj))
    return path


def simulate_into(tmp_path, name="sim"):
    code, _ = run(["simulate", "--config", CLI_FIXTURES / "simulate.json", "--out-dir", tmp_path / name])
    assert code == 0
    return tmp_path / name


def read_manifest(d):
    m = json.loads((d / "manifest.json").read_text())
    m.pop("wall_time")
    return m


def test_simulate_outputs(tmp_path, capsys):
    code, out = run(["simulate", "--config", CLI_FIXTURES / "simulate.json", "--out-dir", tmp_path], capsys)
    assert code == 0
    assert out.out.strip() == str(tmp_path / "manifest.json")
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["outputs"] == ["A.csv", "sample.csv", "sample.json"]
    assert man["master_seed"] == 7 and man["command"] == "simulate"
    meta = json.loads((tmp_path / "sample.json").read_text())
    assert meta["n"] == 60 and meta["p"] == 5 and meta["spectral_radius"] == pytest.approx(0.5)
    assert io.read_sample(tmp_path / "sample.csv").series.shape == (61, 5)


def test_seed_override_changes_sample(tmp_path):
    a = simulate_into(tmp_path, "a")
    run(["simulate", "--config", CLI_FIXTURES / "simulate.json", "--seed", 8, "--out-dir", tmp_path / "b"])
    assert (a / "sample.csv").read_bytes() != (tmp_path / "b" / "sample.csv").read_bytes()
    assert read_manifest(tmp_path / "b")["master_seed"] == 8


def test_determinism_across_runs(tmp_path):
    for d in ("one", "two"):
        sim = simulate_into(tmp_path, f"sim_{d}")
        code, _ = run(["test", "--config", CLI_FIXTURES / "test.json", "--data", sim / "sample.csv",
                       "--beta0", sim / "A.csv", "--out-dir", tmp_path / d])
        assert code == 0
    for sub in ("sim_", ""):
        a, b = tmp_path / f"{sub}one", tmp_path / f"{sub}two"
        assert read_manifest(a) == read_manifest(b)
        for name in read_manifest(a)["outputs"]:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_golden_report(tmp_path):
    sim = simulate_into(tmp_path)
    run(["test", "--config", CLI_FIXTURES / "test.json", "--data", sim / "sample.csv",
         "--beta0", sim / "A.csv", "--out-dir", tmp_path / "t"])
    got = json.loads((tmp_path / "t" / "report.json").read_text())
    want = json.loads((CLI_FIXTURES / "golden_report.json").read_text())
    for section in ("report", "tuning"):
        for key, val in want[section].items():
            if isinstance(val, float):
                assert got[section][key] == pytest.approx(val, rel=1e-9), key
            else:
                assert got[section][key] == val, key
    draws = io.read_matrix(tmp_path / "t" / "w_draws.csv", header=True)
    assert draws.shape == (200, 1)


def test_beta0_equal_to_estimate_gives_unit_p_value(tmp_path):
    sim = simulate_into(tmp_path)
    run(["fit", "--config", CLI_FIXTURES / "test.json", "--data", sim / "sample.csv", "--out-dir", tmp_path / "f"])
    code, _ = run(["test", "--config", CLI_FIXTURES / "test.json", "--data", sim / "sample.csv",
                   "--beta0", tmp_path / "f" / "beta_check.csv", "--out-dir", tmp_path / "t"])
    assert code == 0
    rep = json.loads((tmp_path / "t" / "report.json").read_text())["report"]
    assert rep["p_value"] == 1.0 and rep["statistic"] == 0.0 and not rep["reject_global"]


def test_fit_outputs(tmp_path):
    sim = simulate_into(tmp_path)
    code, _ = run(["fit", "--config", CLI_FIXTURES / "test.json", "--data", sim / "sample.csv", "--out-dir", tmp_path / "f"])
    assert code == 0
    assert read_manifest(tmp_path / "f")["outputs"] == ["beta_check.csv", "beta_hat.csv", "fit.json", "omega.csv"]
    om = io.read_matrix(tmp_path / "f" / "omega.csv")
    np.testing.assert_array_equal(om, om.T)


def test_exit_code_config_errors(tmp_path, capsys):
    bad = write_config(tmp_path / "bad.json", {"seed": 1, "bogus": 2})
    code, out = run(["simulate", "--config", bad, "--out-dir", tmp_path], capsys)
    assert code == 2 and "bogus" in out.err and out.out == ""
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert run(["simulate", "--config", broken, "--out-dir", tmp_path])[0] == 2
    assert run(["simulate", "--config", tmp_path / "missing.json", "--out-dir", tmp_path])[0] == 2
    no_n = write_config(tmp_path / "non.json", {"model": {"design": {"kind": "banded", "p": 4}}})
    assert run(["simulate", "--config", no_n, "--out-dir", tmp_path])[0] == 2


def test_exit_code_malformed_csv(tmp_path, capsys):
    sim = simulate_into(tmp_path)
    rows = (sim / "sample.csv").read_text().splitlines()
    rows[3] = rows[3].rsplit(",", 1)[0] + ",oops"
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(rows) + "\n")
    code, out = run(["fit", "--config", CLI_FIXTURES / "test.json", "--data", bad, "--out-dir", tmp_path / "f"], capsys)
    assert code == 2 and "row 4, column 6" in out.err
    wrong = tmp_path / "b0.csv"
    io.write_matrix(wrong, np.zeros((3, 3)))
    code, _ = run(["test", "--config", CLI_FIXTURES / "test.json", "--data", sim / "sample.csv",
                   "--beta0", wrong, "--out-dir", tmp_path / "t"])
    assert code == 2


def test_exit_code_unstable(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"model": {"n": 10, "design": {"kind": "matrix", "A": [[1.2, 0], [0, 0.1]]}}})
    assert run(["simulate", "--config", cfg, "--out-dir", tmp_path])[0] == 3


def test_exit_code_degenerate_mu(tmp_path):
    sim = simulate_into(tmp_path)
    cfg = write_config(tmp_path / "c.json", {"inference": {"mu_floor": 0.999}})
    assert run(["fit", "--config", cfg, "--data", sim / "sample.csv", "--out-dir", tmp_path / "f"])[0] == 4


def test_exit_code_unconverged(tmp_path):
    sim = simulate_into(tmp_path)
    cfg = write_config(tmp_path / "c.json", {"inference": {"max_iter": 1, "pilot_lambda": 0.0}})
    assert run(["fit", "--config", cfg, "--data", sim / "sample.csv", "--out-dir", tmp_path / "f"])[0] == 5
    ok = write_config(tmp_path / "ok.json", {"inference": {"max_iter": 1, "pilot_lambda": 0.0, "allow_unconverged": True}})
    assert run(["fit", "--config", ok, "--data", sim / "sample.csv", "--out-dir", tmp_path / "g"])[0] == 0


def test_exit_code_failed_experiment(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "seed": 1, "inference": {"mu_floor": 0.999},
        "experiment": {"designs": ["banded"], "dfs": [5], "replications": 2, "bootstrap_draws": 20, "p": 4},
    })
    assert run(["experiment", "--config", cfg, "--workers", 1, "--out-dir", tmp_path / "e"])[0] == 6
    assert (tmp_path / "e" / "size_table.csv").exists()


def test_experiment_and_qq(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "seed": 2,
        "experiment": {"designs": ["banded", "block_diagonal"], "dfs": [10], "replications": 3,
                       "bootstrap_draws": 50, "p": 4, "n": 30},
    })
    code, _ = run(["experiment", "--config", cfg, "--workers", 1, "--out-dir", tmp_path / "e"])
    assert code == 0
    e = tmp_path / "e"
    outs = read_manifest(e)["outputs"]
    for label in ("banded_10", "block_diagonal_10"):
        for stem in ("replications", "qq", "w"):
            assert f"{stem}_{label}.csv" in outs
    assert io.read_matrix(e / "w_banded_10.csv").shape == (3, 50)
    qq = io.read_matrix(e / "qq_banded_10.csv", header=True)
    assert qq.shape == (3, 2)
    code, _ = run(["qq", "--statistics", e / "replications_banded_10.csv", "--draws", e / "w_banded_10.csv",
                   "--out-dir", tmp_path / "q", "--name", "again.csv"])
    assert code == 0
    assert (tmp_path / "q" / "again.csv").read_bytes() == (e / "qq_banded_10.csv").read_bytes()
    assert run(["qq", "--statistics", tmp_path / "none.csv", "--draws", e / "w_banded_10.csv",
                "--out-dir", tmp_path / "q"])[0] == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "varinfer", "simulate", "--config", str(CLI_FIXTURES / "simulate.json"),
                           "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == str(tmp_path / "manifest.json")
    exe = shutil.which("varinfer")
    if exe:
        proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
        assert proc.stdout.strip() == "0.1.0"


def test_schema_file_is_valid():
    import jsonschema

    jsonschema.Draft202012Validator.check_schema(cli.load_schema())
