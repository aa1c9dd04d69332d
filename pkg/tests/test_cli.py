import subprocess
import sys

import pytest

from ionmirror.cli import main, parse_grid, resolve_config


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_subcommand_prints_manifest(capsys):
    code, out, err = run_cli([], capsys)
    assert code == 0 and err == ""
    assert "[postselect]" in out and "coupling_efficiency = 0.8946960917469554" in out
    # every default carries a note line
    lines = out.splitlines()
    for i, line in enumerate(lines):
        if " = " in line and not line.startswith("#"):
            assert lines[i - 1].startswith("# ")


def test_state_delta_grid_first_row(capsys):
    code, out, _ = run_cli(["state", "--delta-grid", "0:5:0.1"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 52
    assert lines[1] == "0,0.148148148148,1,0.148148148148,1"


def test_dynamics_csv(capsys, tmp_path):
    out_path = tmp_path / "dyn.csv"
    code, out, _ = run_cli(["dynamics", "--out", str(out_path)], capsys)
    assert code == 0
    assert "ion2_peak_t_over_tau: 1.22222" in out
    manifest = (tmp_path / "dyn.csv.manifest.ini").read_text()
    assert "scenario = dynamics" in manifest and "[results]" in manifest
    assert out_path.read_text().splitlines()[1].startswith("0,1,0")


def test_byte_identical_reruns(tmp_path, capsys):
    outputs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        for sub in (["postselect"], ["budget"], ["sweep", "--grid", "0:1:0.25"], ["geometry"]):
            assert main(sub + ["--out", str(path)]) == 0
            outputs.append((sub[0], path.read_bytes(), (tmp_path / f"run{k}.csv.manifest.ini").read_bytes()))
    capsys.readouterr()
    half = len(outputs) // 2
    assert outputs[:half] == outputs[half:]


def test_sweep_order_independent_of_workers(capsys):
    _, serial, _ = run_cli(["sweep", "--target", "fiber", "--grid", "0.5:3:0.5", "--set", "sweep.workers=1"], capsys)
    _, parallel, _ = run_cli(["sweep", "--target", "fiber", "--grid", "0.5:3:0.5", "--set", "sweep.workers=6"], capsys)
    assert serial == parallel
    assert [line.split(",")[0] for line in serial.splitlines()[1:]] == ["0.5", "1", "1.5", "2", "2.5", "3"]


@pytest.mark.parametrize(
    "args, message",
    [
        (["budget", "--set", "budget.foo=1"], "error: unknown key: budget.foo\n"),
        (["budget", "--set", "nosection.foo=1"], "error: unknown section: nosection\n"),
        (["budget", "--set", "budget.mirror_eta=2"], None),
        (["state", "--delta-grid", "0:1"], None),
        (["dynamics", "--set", "dynamics.t_max_over_tau=2.5"], None),
        (["budget", "--out", "/nonexistent/dir/x.csv"], None),
        (["frobnicate"], None),
    ],
)
def test_errors_single_line(args, message, capsys):
    code, out, err = run_cli(args, capsys)
    assert code != 0
    assert err.startswith("error: ") and err.count("\n") == 1
    if message:
        assert err == message


def test_config_file_and_env(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[budget]\ntrials_per_cooling = 80\n")
    _, out, _ = run_cli(["budget", "--config", str(cfg)], capsys)
    assert "repetition_rate_hz,9756.09756098" in out
    monkeypatch.setenv("IONMIRROR_CONFIG", str(cfg))
    _, out_env, _ = run_cli(["budget"], capsys)
    assert out_env == out
    bad = tmp_path / "bad.ini"
    bad.write_text("[budget]\ncolling_time = 1\n")
    code, _, err = run_cli(["budget", "--config", str(bad)], capsys)
    assert code == 2 and err == "error: unknown key: budget.colling_time\n"


def test_parse_grid():
    assert list(parse_grid("0:1:0.25")) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert list(parse_grid("1,2.5")) == [1.0, 2.5]
    with pytest.raises(ValueError):
        parse_grid("1:0:0.1")


def test_resolve_config_types():
    cfg = resolve_config("postselect", overrides=["postselect.priors=0.3,0.7", "postselect.reflectivity=0.4"])
    assert cfg["postselect"]["priors"] == (0.3, 0.7)
    assert cfg["postselect"]["reflectivity"] == 0.4


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ionmirror", "budget"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("quantity,value")
