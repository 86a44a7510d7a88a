"""Canonical scenarios: the experimental working point and the figure set-ups.

A :class:`Scenario` is pure data. Frequencies are stored as ordinary
frequencies in kHz exactly as written in a config file, and converted to
angular rates only when a scenario is resolved into runnable members, so
that dumping and re-reading a scenario is lossless.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

from phonon_tc.fock import DomainError
from phonon_tc.params import (
    EffectiveRates,
    ExperimentParams,
    ThermalSpec,
    derive_rates,
    khz,
    to_khz,
    validate_chain,
)

__all__ = [
    "DriveSpec",
    "InlineRates",
    "Member",
    "ParamSpec",
    "PRESET_NAMES",
    "Scenario",
    "oracle_params",
    "preset",
]

OUTPUT_NAMES = ("trajectory", "purity", "populations", "husimi", "classical")


@dataclass(frozen=True)
class ParamSpec:
    """Laser, trap and drive parameters as ordinary frequencies (kHz)."""

    gamma: float
    omega_e_rabi: float
    omega1_rabi: float
    omega2_rabi: float
    eta: float
    omega_r: float
    delta: float
    epsilon_re: float = 0.0
    epsilon_im: float = 0.0
    phi1: float = 0.0
    phi2: float = math.pi / 2
    eta1_tilde: float | None = None
    eta2_tilde: float | None = None

    def to_params(self, **overrides) -> ExperimentParams:
        values = {**asdict(self), **overrides}
        eps = complex(values.pop("epsilon_re"), values.pop("epsilon_im"))
        return ExperimentParams.from_khz(epsilon=eps, **values)


@dataclass(frozen=True)
class InlineRates:
    """Effective-model rates given directly (kHz), bypassing the laser parameters."""

    g: float
    kappa: float
    delta: float
    epsilon_re: float = 0.0
    epsilon_im: float = 0.0


@dataclass(frozen=True)
class DriveSpec:
    """Drive fixed through the rescaled strength |epsilon| sqrt(kappa).

    ``reading`` selects how the number is interpreted: "angular" takes it in
    (rad/ms)^(3/2) with kappa in rad/ms; "nu" takes it in kHz^(3/2) with
    kappa/2pi in kHz. Both resulting epsilons are always reported.
    """

    eps_sqrt_kappa: float
    reading: str = "angular"
    phase: float = 0.0

    def __post_init__(self):
        if self.reading not in ("angular", "nu"):
            raise DomainError(f"drive reading must be 'angular' or 'nu', got {self.reading!r}")

    def readings(self, kappa: float) -> dict[str, complex]:
        """Drive epsilon (rad/ms) under both readings, for angular ``kappa``."""
        if kappa <= 0:
            raise DomainError("rescaled drive needs kappa > 0")
        rot = complex(math.cos(self.phase), math.sin(self.phase))
        return {
            "angular": self.eps_sqrt_kappa / math.sqrt(kappa) * rot,
            "nu": khz(self.eps_sqrt_kappa / math.sqrt(to_khz(kappa))) * rot,
        }


@dataclass(frozen=True)
class Scenario:
    name: str
    cutoff: int
    t_end: float
    samples: int
    outputs: tuple[str, ...]
    params_spec: ParamSpec | None = None
    inline_rates: InlineRates | None = None
    thermal: ThermalSpec | None = None
    drive: DriveSpec | None = None
    sweep_key: str | None = None
    sweep_values: tuple[float, ...] = ()
    sweep_cutoffs: tuple[int, ...] = ()
    husimi_times: tuple[float, ...] = ()
    husimi_resolution: int = 201
    population_max: int | None = None
    population_window: tuple[float, float] | None = None
    division_points: tuple[float, ...] = ()
    rtol: float = 1e-8
    atol: float = 1e-10
    chain_ratio: float = 10.0
    notes: str = ""

    def __post_init__(self):
        if (self.params_spec is None) == (self.inline_rates is None):
            raise DomainError("exactly one of params_spec / inline_rates must be given")
        unknown = set(self.outputs) - set(OUTPUT_NAMES)
        if unknown:
            raise DomainError(f"unknown outputs {sorted(unknown)}; valid: {list(OUTPUT_NAMES)}")
        if self.sweep_key not in (None, "omega2_rabi", "n_bar0"):
            raise DomainError(f"unsupported sweep key {self.sweep_key!r}")
        if self.sweep_key == "omega2_rabi" and self.params_spec is None:
            raise DomainError("an omega2_rabi sweep needs laser parameters")
        if self.sweep_cutoffs and len(self.sweep_cutoffs) != len(self.sweep_values):
            raise DomainError("sweep_cutoffs must match sweep_values in length")
        if self.t_end <= 0 or self.samples < 2:
            raise DomainError("t_end must be > 0 and samples >= 2")
        if self.cutoff < 2:
            raise DomainError("cutoff must be >= 2")

    @property
    def params(self) -> ExperimentParams | None:
        return self.params_spec.to_params() if self.params_spec is not None else None

    def with_overrides(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def members(self) -> list["Member"]:
        """Resolve the scenario (and its sweep) into runnable members."""
        values = self.sweep_values if self.sweep_key else (None,)
        out = []
        for i, v in enumerate(values):
            cutoff = self.sweep_cutoffs[i] if self.sweep_cutoffs else self.cutoff
            thermal = self.thermal
            label = self.name
            params = None
            rates = None
            if self.params_spec is not None:
                over = {"omega2_rabi": v} if self.sweep_key == "omega2_rabi" else {}
                params = self.params_spec.to_params(**over)
                rates = derive_rates(params)
                g, kappa, delta, eps = rates.g, rates.kappa, params.delta, params.epsilon
            else:
                r = self.inline_rates
                g, kappa, delta = khz(r.g), khz(r.kappa), khz(r.delta)
                eps = khz(complex(r.epsilon_re, r.epsilon_im))
            if self.sweep_key == "omega2_rabi":
                label = f"{self.name}_omega2_{v:g}kHz"
            elif self.sweep_key == "n_bar0":
                thermal = ThermalSpec(v)
                label = f"{self.name}_nbar0_{v:g}"
            readings = {}
            if self.drive is not None:
                readings = self.drive.readings(kappa)
                eps = readings[self.drive.reading]
                if params is not None:
                    params = params.with_(epsilon=eps)
            out.append(
                Member(
                    label=label,
                    params=params,
                    rates=rates,
                    g=g,
                    kappa=kappa,
                    delta=delta,
                    epsilon=complex(eps),
                    thermal=thermal,
                    cutoff=cutoff,
                    epsilon_readings=readings,
                )
            )
        return out


@dataclass(frozen=True)
class Member:
    """One integration of a scenario; rates in rad/ms."""

    label: str
    params: ExperimentParams | None
    rates: EffectiveRates | None
    g: float
    kappa: float
    delta: float
    epsilon: complex
    thermal: ThermalSpec | None
    cutoff: int
    epsilon_readings: dict = field(default_factory=dict)

    @property
    def rescale(self) -> float | None:
        """(Omega_2 / 2pi in kHz)^2, the factor in front of the rescaled phonon number."""
        return to_khz(self.params.omega2_rabi) ** 2 if self.params is not None else None

    def validation(self, ratio: float = 10.0):
        if self.params is None:
            return None
        return validate_chain(self.params, self.rates, ratio)


# the experimental working point, kHz
WORKING_POINT = ParamSpec(
    gamma=22400.0,
    omega_e_rabi=1340.0,
    omega1_rabi=100.0,
    omega2_rabi=300.0,
    eta=0.07,
    omega_r=1000.0,
    delta=5.0,
    eta1_tilde=0.066,
    eta2_tilde=0.0018,
)
RESCALED_DRIVE = 14.27


def _fig2() -> Scenario:
    return Scenario(
        name="fig2",
        params_spec=WORKING_POINT,
        drive=DriveSpec(RESCALED_DRIVE),
        cutoff=200,
        t_end=10.0,
        samples=1001,
        outputs=("trajectory", "purity", "classical"),
        sweep_key="omega2_rabi",
        sweep_values=(300.0, 500.0, 700.0),
        sweep_cutoffs=(200, 140, 100),
        notes="Omega2 sweep values are a fixed choice anchored at 300 kHz; qualitative fidelity only.",
    )


def _fig3() -> Scenario:
    return Scenario(
        name="fig3",
        params_spec=WORKING_POINT,
        drive=DriveSpec(RESCALED_DRIVE),
        cutoff=200,
        t_end=5.0,
        samples=501,
        outputs=("trajectory", "purity", "husimi", "classical"),
        husimi_times=(0.0, 5.0),
    )


def _fig4() -> Scenario:
    return Scenario(
        name="fig4",
        params_spec=WORKING_POINT,
        drive=DriveSpec(RESCALED_DRIVE),
        thermal=ThermalSpec(5.0),
        cutoff=200,
        t_end=10.0,
        samples=1001,
        outputs=("trajectory", "purity", "classical"),
        sweep_key="n_bar0",
        sweep_values=(1.0, 5.0, 10.0),
        notes="Initial mean phonon numbers 1, 5, 10 are a fixed choice; only 5 is quoted.",
    )


def _fig5() -> Scenario:
    return Scenario(
        name="fig5",
        params_spec=WORKING_POINT,
        drive=DriveSpec(RESCALED_DRIVE),
        thermal=ThermalSpec(5.0),
        cutoff=200,
        t_end=3.75,
        samples=3751,
        outputs=("trajectory", "purity", "populations"),
        population_max=40,
        population_window=(2.0, 3.0),
        division_points=tuple(2.5 + 0.05 * k for k in range(6)),
    )


def oracle_params(ratio: float = 10.0) -> ExperimentParams:
    """Working point with both sideband strengths set to Gamma / ratio; drive and detuning tied to g.

    Gamma is kept; g = kappa = Gamma / ratio^2, Delta = g, epsilon = g / 2,
    so the whole effective model is fast enough to be integrated next to the
    full two-ion model on a tiny Fock space.
    """
    if ratio <= 1:
        raise DomainError("oracle chain ratio must exceed 1")
    base = WORKING_POINT.to_params()
    gamma_eff = base.omega_e_rabi**2 / base.gamma
    p = base.with_(
        omega1_rabi=gamma_eff / (ratio * WORKING_POINT.eta1_tilde),
        omega2_rabi=gamma_eff / (ratio * WORKING_POINT.eta2_tilde),
    )
    g = derive_rates(p).g
    return p.with_(delta=g, epsilon=0.5 * g)


def _oracle_small(ratio: float = 10.0) -> Scenario:
    p = oracle_params(ratio)
    g = derive_rates(p).g
    spec = ParamSpec(
        gamma=to_khz(p.gamma),
        omega_e_rabi=to_khz(p.omega_e_rabi),
        omega1_rabi=to_khz(p.omega1_rabi),
        omega2_rabi=to_khz(p.omega2_rabi),
        eta=p.eta,
        omega_r=to_khz(p.omega_r),
        delta=to_khz(p.delta),
        epsilon_re=to_khz(p.epsilon).real,
        eta1_tilde=p.eta1_tilde,
        eta2_tilde=p.eta2_tilde,
    )
    return Scenario(
        name="oracle-small" if ratio == 10.0 else f"oracle-small-r{ratio:g}",
        params_spec=spec,
        cutoff=6,
        t_end=8.0 / g,
        samples=401,
        outputs=("trajectory", "purity"),
        chain_ratio=ratio,
        notes="Scaled set for the elimination oracle: sideband strengths at Gamma/ratio.",
    )


_PRESETS = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "oracle-small": _oracle_small,
}
PRESET_NAMES = tuple(_PRESETS)


def preset(name: str, **kwargs) -> Scenario:
    """Scenario by name; ``oracle-small`` accepts ``ratio``."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; valid names: {', '.join(PRESET_NAMES)}") from None
    return factory(**kwargs)
