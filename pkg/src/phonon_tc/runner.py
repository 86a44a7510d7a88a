"""Run scenarios end to end and write their data files, validation report and manifest."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from phonon_tc import __version__
from phonon_tc.classical import ClassicalParams, integrate_classical, undriven_radius
from phonon_tc.fock import FockSpace, fock_state, number_op, thermal_state
from phonon_tc.master_eq import IntegrationError, IntegratorOptions, InvariantBreach, integrate, phonon_model
from phonon_tc.observables import HusimiGrid, default_husimi_range, husimi_q
from phonon_tc.params import to_khz
from phonon_tc.presets import Member, Scenario

__all__ = [
    "EXIT_BREACH",
    "EXIT_IO",
    "EXIT_OK",
    "EXIT_VALIDATION",
    "RunResult",
    "member_grid",
    "run_member",
    "run_scenario",
    "validate_scenario",
    "write_husimi",
]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BREACH = 2
EXIT_IO = 3

TAIL_RULE = 1e-8


def _num(x) -> str:
    """Full-precision round-trip text for a float."""
    return repr(float(x))


def _jsonable(obj):
    """Recursively convert numpy scalars, complex numbers and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, complex):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def member_grid(scenario: Scenario, husimi_times=()) -> np.ndarray:
    """Uniform sample grid merged with every time at which a snapshot is needed."""
    base = np.linspace(0.0, scenario.t_end, scenario.samples)
    extra = [t for t in (*husimi_times, *scenario.division_points) if 0.0 <= t <= scenario.t_end]
    grid = np.concatenate([base, extra])
    grid = np.unique(grid)
    # collapse near-duplicates introduced by linspace rounding
    keep = np.concatenate([[True], np.diff(grid) > 1e-12 * max(1.0, scenario.t_end)])
    return grid[keep]


def _nearest(grid: np.ndarray, t: float) -> float:
    return float(grid[np.argmin(np.abs(grid - t))])


def _initial_state(member: Member, space: FockSpace):
    if member.thermal is not None and member.thermal.n_bar0 > 0:
        return thermal_state(space, member.thermal.n_bar0)
    return fock_state(space, 0)


def write_husimi(grid: HusimiGrid, stem: Path, formats, meta: dict) -> list[str]:
    """Write ``<stem>.csv`` (matrix), ``<stem>_long.csv`` (q, p, Q rows) and ``<stem>.json`` (axes)."""
    files = []
    if "csv" in formats:
        path = stem.parent / (stem.name + ".csv")
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            for row in grid.values:
                w.writerow([_num(v) for v in row])
        files.append(path.name)
    if "long" in formats:
        path = stem.parent / (stem.name + "_long.csv")
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q", "p", "Q"])
            for i, q in enumerate(grid.q):
                for j, p in enumerate(grid.p):
                    w.writerow([_num(q), _num(p), _num(grid.values[i, j])])
        files.append(path.name)
    if "json" in formats or "csv" in formats:
        path = stem.parent / (stem.name + ".json")
        _dump_json(
            {
                **meta,
                "q_range": grid.q_range,
                "p_range": grid.p_range,
                "resolution": grid.resolution,
                "layout": "rows follow q, columns follow p",
                "cell_area": grid.cell_area,
                "riemann_sum": grid.total(),
                "max_at": grid.argmax(),
            },
            path,
        )
        files.append(path.name)
    return files


@dataclass
class MemberOutcome:
    label: str
    files: list[str] = field(default_factory=list)
    monitor: dict = field(default_factory=dict)
    tail: dict = field(default_factory=dict)
    error: str | None = None
    exit_code: int = EXIT_OK
    seconds: float = 0.0


def run_member(member: Member, scenario: Scenario, out_dir, opts: IntegratorOptions, formats, husimi_times=()) -> MemberOutcome:
    """Integrate one member and write its files. Never raises for integration failures."""
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    outcome = MemberOutcome(label=member.label)
    space = FockSpace(member.cutoff)
    model = phonon_model(space, member.g, member.kappa, member.delta, member.epsilon)
    grid = member_grid(scenario, husimi_times)
    k_max = min(scenario.population_max if scenario.population_max is not None else 0, member.cutoff - 1)
    snap_times = sorted({_nearest(grid, t) for t in (*husimi_times, *scenario.division_points)})
    try:
        traj = integrate(
            model,
            _initial_state(member, space),
            grid,
            opts,
            e_ops={"Na": number_op(space)},
            populations=member.cutoff - 1,
            store=snap_times,
        )
    except InvariantBreach as exc:
        outcome.error, outcome.exit_code = str(exc), EXIT_BREACH
        return outcome
    except IntegrationError as exc:
        outcome.error, outcome.exit_code = str(exc), EXIT_BREACH
        return outcome

    pops = traj.observables["populations"]
    outcome.monitor = {k: v for k, v in traj.monitor.items()}
    outcome.tail = {
        "rule": TAIL_RULE,
        "final_top_population": float(pops[-1, -1]),
        "max_top_population": float(pops[:, -1].max()),
        "satisfied": bool(pops[-1, -1] < TAIL_RULE),
    }
    if not outcome.tail["satisfied"]:
        log.warning("%s: final tail population %.2e exceeds %.0e", member.label, pops[-1, -1], TAIL_RULE)

    na = traj.observables["Na"]
    rescale = member.rescale
    header = ["t_ms", "Na", "rescaled_Na", "purity"] + [f"p{n}" for n in range(k_max + 1)]
    if "csv" in formats:
        path = out_dir / f"traj_{member.label}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i, t in enumerate(grid):
                resc = _num(rescale * na[i]) if rescale is not None else "nan"
                w.writerow([_num(t), _num(na[i]), resc, _num(traj.observables["purity"][i])]
                           + [_num(p) for p in pops[i, : k_max + 1]])
        outcome.files.append(path.name)
    if "json" in formats:
        path = out_dir / f"traj_{member.label}.json"
        _dump_json(
            {
                "label": member.label,
                "columns": header,
                "rescale_factor": rescale,
                "rescale_units": "(Omega2/2pi in kHz)^2" if rescale is not None else None,
                "cutoff": member.cutoff,
                "integrator": opts.to_dict(),
                "monitor": outcome.monitor,
                "tail": outcome.tail,
            },
            path,
        )
        outcome.files.append(path.name)

    if scenario.division_points:
        path = out_dir / f"fock_{member.label}_division.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_ms"] + [f"p{n}" for n in range(k_max + 1)])
            for t in scenario.division_points:
                rho = traj.state_at(_nearest(grid, t))
                w.writerow([_num(t)] + [_num(x) for x in np.diagonal(rho.data)[: k_max + 1].real])
        outcome.files.append(path.name)

    if husimi_times:
        half = default_husimi_range(member.g, member.kappa)
        for t in husimi_times:
            rho = traj.state_at(_nearest(grid, t))
            hq = husimi_q(rho, (-half, half), resolution=scenario.husimi_resolution)
            stem = out_dir / f"husimi_{member.label}_t{t:g}ms"
            outcome.files += write_husimi(hq, stem, formats, {"label": member.label, "t_ms": t})
    outcome.seconds = time.perf_counter() - t0
    return outcome


def _classical_rows(member: Member, grid: np.ndarray):
    p = ClassicalParams(member.g, member.kappa, member.delta, member.epsilon)
    traj = integrate_classical(0.0, p, grid)
    rescale = member.rescale
    for t, a in zip(traj.times, traj.alphas):
        a2 = abs(a) ** 2
        yield [member.label, _num(t), _num(a.real), _num(a.imag), _num(a2),
               _num(rescale * a2) if rescale is not None else "nan"]


def _member_summary(member: Member) -> dict:
    out = {
        "label": member.label,
        "cutoff": member.cutoff,
        "initial_state": {"thermal_n_bar0": member.thermal.n_bar0} if member.thermal else "vacuum",
        "rates_rad_per_ms": {"g": member.g, "kappa": member.kappa, "delta": member.delta, "epsilon": member.epsilon},
        "rates_khz": {
            "g": to_khz(member.g),
            "kappa": to_khz(member.kappa),
            "delta": to_khz(member.delta),
            "epsilon": to_khz(member.epsilon),
        },
        "epsilon_readings_rad_per_ms": member.epsilon_readings,
        "epsilon_readings_khz": {k: to_khz(v) for k, v in member.epsilon_readings.items()},
        "classical_radius": undriven_radius(ClassicalParams(member.g, member.kappa, member.delta)) if member.kappa > 0 else None,
    }
    if member.params is not None:
        out["params_khz"] = member.params.to_khz_dict()
        out["params_rad_per_ms"] = asdict(member.params)
        out["derived_rates"] = member.rates.to_dict()
    return out


def validate_scenario(scenario: Scenario) -> tuple[bool, list[dict], bool]:
    """(all members pass, per-member reports, any hard failure)."""
    reports = []
    passed = True
    hard = False
    for m in scenario.members():
        rep = m.validation(scenario.chain_ratio)
        if rep is None:
            reports.append({"label": m.label, "applicable": False,
                            "reason": "effective rates given directly; no laser parameters to check"})
            continue
        reports.append({"label": m.label, "applicable": True, "threshold": rep.threshold,
                        "passed": rep.passed, "hard_failures": [l.name for l in rep.hard_failures()],
                        "links": rep.to_json(), "text": rep.format()})
        passed &= rep.passed
        hard |= bool(rep.hard_failures())
    return passed, reports, hard


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    files: list[str]
    manifest: dict
    messages: list[str] = field(default_factory=list)


def _run_member_job(args):
    return run_member(*args)


def run_scenario(
    scenario: Scenario,
    out_dir,
    formats=("csv", "json"),
    parallel: int = 1,
    force: bool = False,
    opts: IntegratorOptions | None = None,
) -> RunResult:
    """Run every member of ``scenario`` and write results under ``out_dir``."""
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    messages: list[str] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(out_dir, os.W_OK):
            raise PermissionError(f"output directory {out_dir} is not writable")
    except OSError as exc:
        return RunResult(EXIT_IO, out_dir, [], {}, [f"I/O error: {exc}"])

    opts = opts or IntegratorOptions(rtol=scenario.rtol, atol=scenario.atol)
    members = scenario.members()
    husimi_times = scenario.husimi_times if "husimi" in scenario.outputs else ()
    passed, reports, hard = validate_scenario(scenario)
    files = ["validation.json"]
    try:
        _dump_json({"passed": passed, "hard_failure": hard, "members": reports}, out_dir / "validation.json")
    except OSError as exc:
        return RunResult(EXIT_IO, out_dir, [], {}, [f"I/O error: {exc}"])
    if hard and not force:
        messages.append("parameter chain has a link with ratio below 2; rerun with --force to proceed")
        return RunResult(EXIT_VALIDATION, out_dir, files, {}, messages)

    jobs = [(m, scenario, out_dir, opts, tuple(formats), husimi_times) for m in members]
    try:
        if parallel > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(parallel, len(jobs))) as pool:
                outcomes = list(pool.map(_run_member_job, jobs))
        else:
            outcomes = [_run_member_job(j) for j in jobs]
    except OSError as exc:
        return RunResult(EXIT_IO, out_dir, files, {}, [f"I/O error: {exc}"])

    exit_code = EXIT_OK
    for o in outcomes:
        files += o.files
        if o.error:
            messages.append(f"{o.label}: {o.error}")
            exit_code = max(exit_code, o.exit_code)

    try:
        if "classical" in scenario.outputs and exit_code == EXIT_OK:
            path = out_dir / f"classical_{scenario.name}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["member", "t_ms", "re_alpha", "im_alpha", "abs2_alpha", "rescaled_abs2_alpha"])
                for m in members:
                    w.writerows(_classical_rows(m, member_grid(scenario)))
            files.append(path.name)

        manifest = {
            "package_version": __version__,
            "scenario": scenario.to_dict(),
            "formats": list(formats),
            "integrator": opts.to_dict(),
            "validation_passed": passed,
            "forced": bool(force and hard),
            "members": [
                {**_member_summary(m), "monitor": o.monitor, "tail": o.tail, "error": o.error, "files": o.files}
                for m, o in zip(members, outcomes)
            ],
            "files": sorted(files),
            "exit_code": exit_code,
            "timing": {
                "started_utc": started,
                "wall_clock_s": time.perf_counter() - t0,
                "member_seconds": {o.label: o.seconds for o in outcomes},
            },
        }
        _dump_json(manifest, out_dir / "manifest.json")
    except OSError as exc:
        return RunResult(EXIT_IO, out_dir, files, {}, [f"I/O error: {exc}"])
    return RunResult(exit_code, out_dir, sorted(files + ["manifest.json"]), manifest, messages)
