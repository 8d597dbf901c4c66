"""End-to-end tests of the command-line surface and the run configuration."""

import json

import pytest
from rich.console import Console

from config import Config, RunConfig, build_run_config, run_config_from_json
from core.errors import ConfigInvalid
from main import main
from ui.cli import CLI


def _cli() -> CLI:
    return CLI(console=Console(quiet=True))


def _report(directory, pattern):
    found = sorted(directory.glob(pattern))
    assert len(found) == 1, found
    return found[0]


def test_zero_datum_simulation(tmp_path):
    code = _cli().run(["simulate", "--datum", "zero", "--n-max", "4", "--dt", "0.01", "--T", "0.05",
                       "--report-dir", str(tmp_path)])
    assert code == 0
    report = json.loads(_report(tmp_path, "simulate-*.json").read_text())
    assert report["samples"] == 6
    assert report["drift"] == {"mean": 0.0, "mass_l2": 0.0, "energy": 0.0}
    assert report["parameters"]["s"] == 0.6
    lines = _report(tmp_path, "simulate-*.jsonl").read_text().splitlines()
    assert len(lines) == 7
    assert "header" in json.loads(lines[0])


def test_order_check_flag(tmp_path):
    code = _cli().run(["simulate", "--n-max", "8", "--dt", "0.02", "--T", "0.2", "--order-check",
                       "--report-dir", str(tmp_path)])
    assert code == 0
    report = json.loads(_report(tmp_path, "simulate-*.json").read_text())
    assert 12.0 < report["order_ratio"] < 20.0


def test_low_regularity_exits_with_config_error(tmp_path):
    code = _cli().run(["verify-estimates", "--id", "matome-1", "--s", "0.4", "--sizes", "4", "--trials", "2",
                       "--report-dir", str(tmp_path)])
    assert code == 2
    assert not list(tmp_path.iterdir())


def test_invalid_parameters_exit_with_config_error(tmp_path):
    cli = _cli()
    assert cli.run(["simulate", "--dt", "0.5", "--T", "0.1", "--report-dir", str(tmp_path)]) == 2
    assert cli.run(["nf-expand", "--traj", str(tmp_path / "missing.jsonl"), "--report-dir", str(tmp_path)]) == 2
    assert cli.run(["identity-scan", "--M", "0.5", "--report-dir", str(tmp_path)]) == 2
    assert cli.run(["no-such-command"]) == 2


def test_gauge_and_normal_form_pipeline(tmp_path):
    cli = _cli()
    traj = tmp_path / "traj.jsonl"
    assert cli.run(["simulate", "--n-max", "4", "--a", "0.1", "--b", "0.05", "--dt", "0.001", "--T", "0.004",
                    "--output", str(traj), "--report-dir", str(tmp_path)]) == 0
    assert traj.exists()

    assert cli.run(["gauge-check", "--input", str(traj), "--report-dir", str(tmp_path)]) == 0
    gauge = json.loads(_report(tmp_path, "gauge-check-*.json").read_text())
    assert gauge["worst_residual"]["residual_grouped"] < 1e-4
    csv_lines = _report(tmp_path, "gauge-check-*.csv").read_text().splitlines()
    assert csv_lines[0].startswith("t,residual_grouped")
    assert len(csv_lines) == 1 + 3

    assert cli.run(["nf-expand", "--traj", str(traj), "--J", "1", "--M", "8",
                    "--report-dir", str(tmp_path)]) == 0
    nf = json.loads(_report(tmp_path, "nf-expand-*.json").read_text())
    assert {entry["family"] for entry in nf["families"]} == {"N_0", "N_R", "N_1", "R", "N_next"}
    assert nf["telescoping"]["residual"] < 0.05 * nf["telescoping"]["lhs_norm"] + 3 * nf["telescoping"][
        "quadrature_error"]
    assert nf["parameters"]["M"] == 8.0


def test_count_lemma_reports_do_not_depend_on_threads(tmp_path):
    runs = []
    for threads in ("1", "3"):
        directory = tmp_path / f"threads-{threads}"
        code = _cli().run(["count-lemma", "--curve", "both", "--rmax", "16", "--centers", "2", "--probes", "50",
                           "--threads", threads, "--report-dir", str(directory)])
        assert code == 0
        runs.append({path.name: path.read_bytes() for path in directory.iterdir()})
    assert runs[0] == runs[1]
    report = json.loads(next(v for k, v in runs[0].items() if k.endswith(".json")))
    assert report["spot_checks"] == {"hyperbola_mu12_R10": 8, "ellipse_mu0_R10": 1}
    assert report["large_mu"]["violations"] == 0


def test_config_file_matches_flags(tmp_path):
    config_file = tmp_path / "run.toml"
    config_file.write_text('n_max = 4\ndt = 0.01\nT = 0.02\n\n[datum]\nkind = "zero"\n')
    from_file, from_flags = tmp_path / "file", tmp_path / "flags"
    assert _cli().run(["simulate", "--config", str(config_file), "--report-dir", str(from_file)]) == 0
    assert _cli().run(["simulate", "--n-max", "4", "--dt", "0.01", "--T", "0.02", "--datum", "zero",
                       "--report-dir", str(from_flags)]) == 0
    assert sorted(p.name for p in from_file.iterdir()) == sorted(p.name for p in from_flags.iterdir())
    cfg = build_run_config(config_file)
    assert _report(from_file, "simulate-*.json").name == f"simulate-{cfg.digest()}.json"


def test_run_config_round_trip():
    cfg = build_run_config(overrides={"n_max": 8, "J": 2, "datum": {"kind": "colored", "decay": 1.5}})
    again = run_config_from_json(cfg.to_json())
    assert again == cfg
    assert again.digest() == cfg.digest()
    assert build_run_config(overrides={"n_max": 8, "J": 2, "threads": 4,
                                       "datum": {"kind": "colored", "decay": 1.5}}).digest() == cfg.digest()
    assert RunConfig(n_max=9).digest() != RunConfig().digest()


def test_invalid_run_configs(tmp_path):
    with pytest.raises(ConfigInvalid):
        build_run_config(overrides={"sigma": 2})
    with pytest.raises(ConfigInvalid):
        build_run_config(overrides={"datum": {"kind": "spiky"}})
    with pytest.raises(ConfigInvalid):
        build_run_config(tmp_path / "absent.toml")
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ConfigInvalid):
        build_run_config(broken)


def test_environment_settings_are_valid():
    assert Config.validate()


def test_identity_scan(tmp_path):
    code = _cli().run(["identity-scan", "--scan-bound", "20", "--samples", "2000", "--M", "16",
                       "--report-dir", str(tmp_path)])
    assert code == 0
    report = json.loads(_report(tmp_path, "identity-scan-*.json").read_text())
    assert report["region"]["empty"]
    assert all(part["ok"] for part in report["partition"])


def test_main_maps_errors_to_exit_codes(tmp_path):
    assert main(["twin-probe", "--dt", "1.0", "--T", "0.5", "--report-dir", str(tmp_path)]) == 2
