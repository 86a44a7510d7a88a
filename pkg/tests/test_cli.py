import csv
import json

import pytest

from phonon_tc.cli import main
from phonon_tc.config import dump_scenario, parse_scenario
from phonon_tc.presets import preset
from phonon_tc.runner import EXIT_OK, EXIT_VALIDATION

SMALL = ["--cutoff", "12", "--t-end", "0.5", "--samples", "11"]


def test_validate_preset_passes(capsys):
    assert main(["validate", "--preset", "fig3"]) == EXIT_OK
    assert "PASS" in capsys.readouterr().out


def test_validate_json(capsys):
    assert main(["validate", "--preset", "fig2", "--json"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["passed"] and len(payload["members"]) == 3


def test_validate_inline_rates_not_applicable():
    assert main(["validate", "--rates", "g=1,kappa=0.1,delta=1"]) == EXIT_VALIDATION


def hard_failure_config(tmp_path):
    sc = preset("fig3")
    text = dump_scenario(sc).replace("omega_e_rabi_khz = 1340.0", "omega_e_rabi_khz = 22400.0")
    assert parse_scenario(text).params_spec.omega_e_rabi == 22400.0
    path = tmp_path / "bad.ini"
    path.write_text(text)
    return path


def test_hard_chain_failure_blocks_run(tmp_path):
    cfg = hard_failure_config(tmp_path)
    assert main(["validate", "--config", str(cfg)]) == EXIT_VALIDATION
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), *SMALL]) == EXIT_VALIDATION
    assert sorted(p.name for p in out.iterdir()) == ["validation.json"]
    report = json.loads((out / "validation.json").read_text())
    assert report["hard_failure"] is True


def test_dump_preset(capsys):
    assert main(["dump-preset", "fig5"]) == EXIT_OK
    assert parse_scenario(capsys.readouterr().out) == preset("fig5")


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--preset", "fig9", "--out", "x"])
    assert exc.value.code == EXIT_VALIDATION
    with pytest.raises(SystemExit) as exc:
        main(["validate"])
    assert exc.value.code == EXIT_VALIDATION
    assert main(["validate", "--rates", "g=1,kappa"]) == EXIT_VALIDATION


def test_missing_config_is_io_error(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "none.ini")]) == 3


def test_small_preset_run_writes_files(tmp_path):
    out = tmp_path / "fig3"
    code = main(["run", "--preset", "fig3", "--out", str(out), "--husimi-at", "0.25", *SMALL,
                 "--formats", "csv,json,long"])
    assert code == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert "manifest.json" in names and "validation.json" in names
    assert "traj_fig3.csv" in names and "traj_fig3.json" in names
    assert "classical_fig3.csv" in names
    assert {"husimi_fig3_t0.25ms.csv", "husimi_fig3_t0.25ms_long.csv", "husimi_fig3_t0.25ms.json"} <= set(names)
    manifest = json.loads((out / "manifest.json").read_text())
    assert sorted(manifest["files"] + ["manifest.json"]) == names
    with open(out / "traj_fig3.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:4] == ["t_ms", "Na", "rescaled_Na", "purity"]
    assert float(rows[1][1]) == 0.0 and float(rows[1][3]) == pytest.approx(1.0)
    assert len(rows) >= 12


def test_inline_rates_run(tmp_path):
    out = tmp_path / "custom"
    code = main(["run", "--rates", "g=0.54,kappa=0.003645,delta=5", "--epsilon-from-threshold", "14.27",
                 "--out", str(out), *SMALL])
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    (member,) = manifest["members"]
    readings = member["epsilon_readings_khz"]
    assert readings["angular"]["re"] == pytest.approx(14.27 / 0.003645**0.5 / 6.283185307179586**1.5)
    assert readings["nu"]["re"] == pytest.approx(14.27 / 0.003645**0.5)
    # a 12-level cutoff is far too small for this drive; the tail check reports it
    assert member["tail"]["satisfied"] is False


def test_unknown_format(tmp_path):
    assert main(["run", "--preset", "fig3", "--out", str(tmp_path), "--formats", "xml", *SMALL]) == EXIT_VALIDATION
