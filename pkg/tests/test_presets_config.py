import json
import math

import pytest

from phonon_tc.config import dump_scenario, load_scenario, parse_scenario, write_scenario
from phonon_tc.fock import DomainError
from phonon_tc.params import derive_rates, to_khz
from phonon_tc.presets import (
    PRESET_NAMES,
    RESCALED_DRIVE,
    DriveSpec,
    InlineRates,
    Scenario,
    oracle_params,
    preset,
)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_config_round_trip(name, tmp_path):
    sc = preset(name)
    text = dump_scenario(sc)
    back = parse_scenario(text)
    assert back == sc
    assert dump_scenario(back) == text
    write_scenario(sc, tmp_path / "s.ini")
    assert load_scenario(tmp_path / "s.ini") == sc


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_json_is_deterministic(name):
    assert preset(name).to_json() == preset(name).to_json()
    json.loads(preset(name).to_json())


def test_unknown_preset_lists_names():
    with pytest.raises(DomainError, match="fig2, fig3"):
        preset("fig9")


def test_fig3_and_fig5_fields():
    f3 = preset("fig3")
    assert f3.husimi_times == (0.0, 5.0) and f3.t_end == 5.0
    assert "husimi" in f3.outputs
    (m,) = f3.members()
    assert abs(m.epsilon) * math.sqrt(m.kappa) == pytest.approx(RESCALED_DRIVE)
    assert m.thermal is None
    f5 = preset("fig5")
    (m5,) = f5.members()
    assert m5.thermal.n_bar0 == 5.0
    assert f5.population_max == 40
    assert f5.division_points == pytest.approx([2.5, 2.55, 2.6, 2.65, 2.7, 2.75])


def test_sweeps_resolve_to_members():
    f2 = preset("fig2").members()
    assert [to_khz(m.params.omega2_rabi) for m in f2] == pytest.approx([300, 500, 700])
    assert len({m.cutoff for m in f2}) == 3
    assert all(abs(m.epsilon) * math.sqrt(m.kappa) == pytest.approx(RESCALED_DRIVE) for m in f2)
    f4 = preset("fig4").members()
    assert [m.thermal.n_bar0 for m in f4] == [1.0, 5.0, 10.0]
    assert f4[0].label != f4[1].label


def test_working_point_chain_passes():
    for name in ("fig2", "fig3", "fig4", "fig5"):
        for m in preset(name).members():
            assert m.validation(10.0).passed, m.label


def test_drive_readings_differ_by_unit():
    kappa = derive_rates(preset("fig3").params).kappa
    r = DriveSpec(RESCALED_DRIVE).readings(kappa)
    # nu reading: |eps| (kHz) = X / sqrt(kappa in kHz), then converted to rad/ms
    assert abs(r["nu"]) / abs(r["angular"]) == pytest.approx((2 * math.pi) ** 1.5, rel=1e-12)
    with pytest.raises(DomainError):
        DriveSpec(1.0, reading="hertz")


def test_oracle_params_tie_rates():
    for ratio in (10.0, 30.0):
        p = oracle_params(ratio)
        r = derive_rates(p)
        assert r.g == pytest.approx(r.Gamma / ratio**2)
        assert r.kappa == pytest.approx(r.g)
        assert p.delta == pytest.approx(r.g)
    assert preset("oracle-small", ratio=30.0).name == "oracle-small-r30"


def test_scenario_validation():
    rates = InlineRates(g=1.0, kappa=0.1, delta=1.0)
    with pytest.raises(DomainError):
        Scenario("x", 10, 1.0, 11, ("trajectory",))
    with pytest.raises(DomainError):
        Scenario("x", 10, 1.0, 11, ("wigner",), inline_rates=rates)
    with pytest.raises(DomainError):
        Scenario("x", 10, 1.0, 11, ("trajectory",), inline_rates=rates, sweep_key="omega2_rabi",
                 sweep_values=(1.0,))
    ok = Scenario("x", 10, 1.0, 11, ("trajectory",), inline_rates=rates)
    assert ok.members()[0].rescale is None


def test_malformed_config():
    with pytest.raises(DomainError):
        parse_scenario("[params]\ngamma_khz = 1\n")
    with pytest.raises(DomainError):
        parse_scenario("no section header")
