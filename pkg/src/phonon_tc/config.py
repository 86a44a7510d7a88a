"""Scenario config files: sectioned ``key = value`` text (INI grammar).

Grammar::

    [scenario]      name, cutoff, t_end_ms, samples, outputs (comma list), chain_ratio, notes
    [params]        gamma_khz, omega_e_rabi_khz, omega1_rabi_khz, omega2_rabi_khz, eta,
                    omega_r_khz, delta_khz, epsilon_re_khz, epsilon_im_khz, phi1, phi2,
                    eta1_tilde, eta2_tilde            (laser/trap block; all frequencies nu in kHz)
    [rates]         g_khz, kappa_khz, delta_khz, epsilon_re_khz, epsilon_im_khz
                    (inline effective rates; exactly one of [params] / [rates])
    [drive]         eps_sqrt_kappa, reading (angular | nu), phase
    [thermal]       n_bar0
    [sweep]         key (omega2_rabi | n_bar0), values, cutoffs   (comma lists)
    [husimi]        times_ms, resolution
    [populations]   max_index, window_ms, division_points_ms
    [integrator]    rtol, atol

Optional keys may be left out; ``none`` denotes an unset optional value.
Floats are written with ``repr`` so a dump/load round trip is exact.
"""

from __future__ import annotations

import configparser
import io
from pathlib import Path

from phonon_tc.fock import DomainError
from phonon_tc.params import ThermalSpec
from phonon_tc.presets import DriveSpec, InlineRates, ParamSpec, Scenario

__all__ = ["dump_scenario", "load_scenario", "parse_scenario", "write_scenario"]

_PARAM_KEYS = {
    "gamma": "gamma_khz",
    "omega_e_rabi": "omega_e_rabi_khz",
    "omega1_rabi": "omega1_rabi_khz",
    "omega2_rabi": "omega2_rabi_khz",
    "eta": "eta",
    "omega_r": "omega_r_khz",
    "delta": "delta_khz",
    "epsilon_re": "epsilon_re_khz",
    "epsilon_im": "epsilon_im_khz",
    "phi1": "phi1",
    "phi2": "phi2",
    "eta1_tilde": "eta1_tilde",
    "eta2_tilde": "eta2_tilde",
}
_RATE_KEYS = {
    "g": "g_khz",
    "kappa": "kappa_khz",
    "delta": "delta_khz",
    "epsilon_re": "epsilon_re_khz",
    "epsilon_im": "epsilon_im_khz",
}


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _opt_float(s: str | None) -> float | None:
    if s is None or s.strip().lower() == "none":
        return None
    return float(s)


def _floats(s: str) -> tuple[float, ...]:
    s = s.strip()
    return tuple(float(x) for x in s.split(",")) if s and s.lower() != "none" else ()


def dump_scenario(sc: Scenario) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["scenario"] = {
        "name": sc.name,
        "cutoff": _fmt(sc.cutoff),
        "t_end_ms": _fmt(float(sc.t_end)),
        "samples": _fmt(sc.samples),
        "outputs": ", ".join(sc.outputs),
        "chain_ratio": _fmt(float(sc.chain_ratio)),
        "notes": sc.notes,
    }
    if sc.params_spec is not None:
        cp["params"] = {key: _fmt(getattr(sc.params_spec, f)) for f, key in _PARAM_KEYS.items()}
    if sc.inline_rates is not None:
        cp["rates"] = {key: _fmt(getattr(sc.inline_rates, f)) for f, key in _RATE_KEYS.items()}
    if sc.drive is not None:
        cp["drive"] = {
            "eps_sqrt_kappa": _fmt(sc.drive.eps_sqrt_kappa),
            "reading": sc.drive.reading,
            "phase": _fmt(sc.drive.phase),
        }
    if sc.thermal is not None:
        cp["thermal"] = {"n_bar0": _fmt(sc.thermal.n_bar0)}
    if sc.sweep_key is not None:
        cp["sweep"] = {
            "key": sc.sweep_key,
            "values": _fmt(sc.sweep_values),
            "cutoffs": _fmt(sc.sweep_cutoffs) if sc.sweep_cutoffs else "none",
        }
    if sc.husimi_times:
        cp["husimi"] = {"times_ms": _fmt(sc.husimi_times), "resolution": _fmt(sc.husimi_resolution)}
    if sc.population_max is not None:
        cp["populations"] = {
            "max_index": _fmt(sc.population_max),
            "window_ms": _fmt(sc.population_window) if sc.population_window else "none",
            "division_points_ms": _fmt(sc.division_points) if sc.division_points else "none",
        }
    cp["integrator"] = {"rtol": _fmt(sc.rtol), "atol": _fmt(sc.atol)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse_scenario(text: str) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise DomainError(f"malformed config: {exc}") from exc
    if "scenario" not in cp:
        raise DomainError("config needs a [scenario] section")
    s = cp["scenario"]
    kw: dict = {
        "name": s.get("name", "custom"),
        "cutoff": s.getint("cutoff", 128),
        "t_end": s.getfloat("t_end_ms", 5.0),
        "samples": s.getint("samples", 501),
        "outputs": tuple(x.strip() for x in s.get("outputs", "trajectory, purity").split(",") if x.strip()),
        "chain_ratio": s.getfloat("chain_ratio", 10.0),
        "notes": s.get("notes", ""),
    }
    if "params" in cp:
        sec = cp["params"]
        vals = {}
        for f, key in _PARAM_KEYS.items():
            if key in sec:
                vals[f] = _opt_float(sec[key])
        vals = {k: v for k, v in vals.items() if v is not None or k in ("eta1_tilde", "eta2_tilde")}
        try:
            kw["params_spec"] = ParamSpec(**vals)
        except TypeError as exc:
            raise DomainError(f"[params] incomplete: {exc}") from exc
    if "rates" in cp:
        sec = cp["rates"]
        try:
            kw["inline_rates"] = InlineRates(**{f: float(sec[key]) for f, key in _RATE_KEYS.items() if key in sec})
        except (TypeError, KeyError) as exc:
            raise DomainError(f"[rates] incomplete: {exc}") from exc
    if "drive" in cp:
        sec = cp["drive"]
        kw["drive"] = DriveSpec(
            float(sec["eps_sqrt_kappa"]), sec.get("reading", "angular").strip(), sec.getfloat("phase", 0.0)
        )
    if "thermal" in cp:
        kw["thermal"] = ThermalSpec(cp["thermal"].getfloat("n_bar0"))
    if "sweep" in cp:
        sec = cp["sweep"]
        kw["sweep_key"] = sec["key"].strip()
        kw["sweep_values"] = _floats(sec.get("values", ""))
        kw["sweep_cutoffs"] = tuple(int(x) for x in _floats(sec.get("cutoffs", "none")))
    if "husimi" in cp:
        sec = cp["husimi"]
        kw["husimi_times"] = _floats(sec.get("times_ms", ""))
        kw["husimi_resolution"] = sec.getint("resolution", 201)
    if "populations" in cp:
        sec = cp["populations"]
        kw["population_max"] = sec.getint("max_index")
        window = _floats(sec.get("window_ms", "none"))
        kw["population_window"] = window if window else None
        kw["division_points"] = _floats(sec.get("division_points_ms", "none"))
    if "integrator" in cp:
        kw["rtol"] = cp["integrator"].getfloat("rtol", 1e-8)
        kw["atol"] = cp["integrator"].getfloat("atol", 1e-10)
    return Scenario(**kw)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def write_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(dump_scenario(sc))
