"""Laser/trap parameters, effective Lamb-Dicke series and derived rates.

Unit convention: every rate stored here is an angular rate in rad/ms and
times are in ms. Configuration files and reports quote ordinary
frequencies nu = omega / 2 pi in kHz; use :func:`khz` / :func:`to_khz` at
the boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace

from phonon_tc.fock import DomainError

__all__ = [
    "TWO_PI",
    "ChainLink",
    "EffectiveRates",
    "ExperimentParams",
    "ThermalSpec",
    "ValidationReport",
    "derive_rates",
    "eta_tilde_1",
    "eta_tilde_2",
    "khz",
    "lamb_dicke_two_ion",
    "n_bar_for_eta_tilde",
    "to_khz",
    "validate_chain",
]

TWO_PI = 2.0 * math.pi
_MAX_TERMS = 10_000


def khz(nu: float | complex) -> float | complex:
    """Ordinary frequency in kHz -> angular rate in rad/ms."""
    return TWO_PI * nu


def to_khz(omega: float | complex) -> float | complex:
    """Angular rate in rad/ms -> ordinary frequency in kHz."""
    return omega / TWO_PI


def _series(first_term: float, ratio_fn, n_bar: float, eta: float, tol: float) -> float:
    if eta <= 0:
        raise DomainError(f"Lamb-Dicke parameter must be positive, got {eta}")
    if n_bar < 0:
        raise DomainError(f"mean phonon number must be >= 0, got {n_bar}")
    if n_bar * eta * eta >= 1.0:
        raise DomainError(
            f"effective Lamb-Dicke series diverges: n_bar * eta^2 = {n_bar * eta * eta:.3g} >= 1"
        )
    term = first_term
    total = term
    k = 0
    while abs(term) >= tol * abs(total):
        k += 1
        if k > _MAX_TERMS:
            raise DomainError("effective Lamb-Dicke series failed to converge")
        term *= ratio_fn(k)
        total += term
        if term == 0.0:
            break
    return total


def eta_tilde_1(eta: float, n_bar: float = 0.0, tol: float = 1e-16) -> float:
    """First-order effective Lamb-Dicke parameter.

    sum_k (-n)^k eta^(2k+1) / (k! (k+1)!), summed until the last term drops
    below ``tol`` times the partial sum.
    """
    x = -n_bar * eta * eta
    return _series(eta, lambda k: x / (k * (k + 1)), n_bar, eta, tol)


def eta_tilde_2(eta: float, n_bar: float = 0.0, tol: float = 1e-16) -> float:
    """Second-order effective Lamb-Dicke parameter.

    sum_{k>=1} (-n)^(k-1) eta^(2k) / ((k-1)! (k+1)!). The overall sign is
    taken positive so that eta_tilde_2(eta, 0) = eta^2 / 2; only its square
    enters the damping rate.
    """
    x = -n_bar * eta * eta
    # term_{k+1} / term_k = x / (k (k + 2)) with k counted from 1
    return _series(0.5 * eta * eta, lambda j: x / (j * (j + 2)), n_bar, eta, tol)


def n_bar_for_eta_tilde(target: float, eta: float, order: int) -> float:
    """Mean phonon number at which ``eta_tilde_<order>(eta, n)`` equals ``target``."""
    from scipy.optimize import brentq

    fn = {1: eta_tilde_1, 2: eta_tilde_2}[order]
    hi = (1.0 - 1e-9) / (eta * eta)
    return brentq(lambda n: fn(eta, n) - target, 0.0, hi, xtol=1e-12)


def lamb_dicke_two_ion(omega_t: float, n_ions: int = 2) -> float:
    """Lamb-Dicke parameter of the radial centre-of-mass mode.

    Anchored to eta = 0.1 for one ion at omega_t / 2 pi = 1 MHz, scaling as
    omega_t^(-1/2) and n_ions^(-1/2). ``omega_t`` is in rad/ms.
    """
    if omega_t <= 0:
        raise DomainError(f"trap frequency must be positive, got {omega_t}")
    nu_mhz = to_khz(omega_t) / 1000.0
    if not 0.1 - 1e-12 <= nu_mhz <= 10.0 + 1e-12:
        warnings.warn(f"trap frequency {nu_mhz:g} MHz outside the accessible 0.1-10 MHz range", stacklevel=2)
    return 0.1 / math.sqrt(nu_mhz) / math.sqrt(n_ions)


@dataclass(frozen=True)
class ExperimentParams:
    """Laser, trap and drive parameters (angular rates in rad/ms).

    ``eta1_tilde`` / ``eta2_tilde`` pin the effective Lamb-Dicke parameters
    to quoted values instead of evaluating the series.
    """

    gamma: float
    omega_e_rabi: float
    omega1_rabi: float
    omega2_rabi: float
    eta: float
    omega_r: float
    omega_e_drive: float
    delta: float
    epsilon: complex = 0.0
    phi1: float = 0.0
    phi2: float = math.pi / 2
    delta1: float | None = None
    delta2: float | None = None
    eta1_tilde: float | None = None
    eta2_tilde: float | None = None

    def __post_init__(self):
        for name in ("gamma", "omega_e_rabi", "omega1_rabi", "omega2_rabi", "omega_r"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.eta <= 0:
            raise DomainError(f"eta must be positive, got {self.eta}")
        scale = max(abs(self.omega_e_drive), abs(self.omega_r), 1.0)
        if abs(self.delta - (self.omega_e_drive - self.omega_r)) > 1e-9 * scale:
            raise DomainError(
                f"delta ({self.delta}) must equal omega_e_drive - omega_r "
                f"({self.omega_e_drive - self.omega_r})"
            )
        object.__setattr__(self, "epsilon", complex(self.epsilon))
        # detunings selected for the gain and two-phonon-loss sidebands
        if self.delta1 is None:
            object.__setattr__(self, "delta1", self.omega_e_drive)
        if self.delta2 is None:
            object.__setattr__(self, "delta2", -2.0 * self.omega_e_drive)

    @classmethod
    def from_khz(
        cls,
        *,
        gamma: float,
        omega_e_rabi: float,
        omega1_rabi: float,
        omega2_rabi: float,
        eta: float,
        omega_r: float,
        delta: float,
        epsilon: complex = 0.0,
        phi1: float = 0.0,
        phi2: float = math.pi / 2,
        eta1_tilde: float | None = None,
        eta2_tilde: float | None = None,
    ) -> "ExperimentParams":
        """Build from ordinary frequencies in kHz; omega_e_drive = omega_r + delta."""
        return cls(
            gamma=khz(gamma),
            omega_e_rabi=khz(omega_e_rabi),
            omega1_rabi=khz(omega1_rabi),
            omega2_rabi=khz(omega2_rabi),
            eta=eta,
            omega_r=khz(omega_r),
            omega_e_drive=khz(omega_r + delta),
            delta=khz(delta),
            epsilon=khz(epsilon),
            phi1=phi1,
            phi2=phi2,
            eta1_tilde=eta1_tilde,
            eta2_tilde=eta2_tilde,
        )

    def with_(self, **changes) -> "ExperimentParams":
        if "omega_e_drive" not in changes and ("omega_r" in changes or "delta" in changes):
            omega_r = changes.get("omega_r", self.omega_r)
            changes["omega_e_drive"] = omega_r + changes.get("delta", self.delta)
            if "delta1" not in changes:
                changes["delta1"] = None
            if "delta2" not in changes:
                changes["delta2"] = None
        return replace(self, **changes)

    def scaled(self, s: float) -> "ExperimentParams":
        """Every rate multiplied by ``s``; dimensionless entries unchanged."""
        rates = (
            "gamma", "omega_e_rabi", "omega1_rabi", "omega2_rabi",
            "omega_r", "omega_e_drive", "delta", "epsilon", "delta1", "delta2",
        )
        return replace(self, **{k: s * getattr(self, k) for k in rates})

    def to_khz_dict(self) -> dict:
        out = {}
        for key, value in asdict(self).items():
            if key in ("eta", "phi1", "phi2", "eta1_tilde", "eta2_tilde"):
                out[key] = value
            elif isinstance(value, complex):
                out[key] = [to_khz(value).real, to_khz(value).imag]
            else:
                out[key] = to_khz(value)
        return out


@dataclass(frozen=True)
class ThermalSpec:
    n_bar0: float

    def __post_init__(self):
        if self.n_bar0 < 0:
            raise DomainError(f"n_bar0 must be >= 0, got {self.n_bar0}")


@dataclass(frozen=True)
class EffectiveRates:
    """Elimination-derived rates (rad/ms) and the Lamb-Dicke factors used."""

    Gamma: float
    eta1_tilde: float
    eta2_tilde: float
    g: float
    kappa: float
    n_bar: float = 0.0

    def to_dict(self) -> dict:
        return {
            "Gamma": self.Gamma,
            "eta1_tilde": self.eta1_tilde,
            "eta2_tilde": self.eta2_tilde,
            "g": self.g,
            "kappa": self.kappa,
            "n_bar": self.n_bar,
            "Gamma_khz": to_khz(self.Gamma),
            "g_khz": to_khz(self.g),
            "kappa_khz": to_khz(self.kappa),
        }


def derive_rates(params: ExperimentParams, n_bar: float = 0.0, tol: float = 1e-16) -> EffectiveRates:
    """Gamma = Omega_e^2 / gamma, g = (eta1 Omega_1)^2 / Gamma, kappa = (eta2 Omega_2)^2 / Gamma."""
    if params.gamma == 0:
        raise DomainError("excited-state decay rate gamma must be nonzero")
    Gamma = params.omega_e_rabi**2 / params.gamma
    e1 = params.eta1_tilde if params.eta1_tilde is not None else eta_tilde_1(params.eta, n_bar, tol)
    e2 = params.eta2_tilde if params.eta2_tilde is not None else eta_tilde_2(params.eta, n_bar, tol)
    if Gamma == 0:
        raise DomainError("effective decay rate Gamma vanishes (Omega_e = 0)")
    g = (e1 * params.omega1_rabi) ** 2 / Gamma
    kappa = (e2 * params.omega2_rabi) ** 2 / Gamma
    return EffectiveRates(Gamma=Gamma, eta1_tilde=e1, eta2_tilde=e2, g=g, kappa=kappa, n_bar=n_bar)


@dataclass(frozen=True)
class ChainLink:
    name: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    required: bool = True

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "pass": self.passed,
            "required": self.required,
        }


@dataclass(frozen=True)
class ValidationReport:
    threshold: float
    links: tuple[ChainLink, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(link.passed for link in self.links if link.required)

    def hard_failures(self, floor: float = 2.0) -> list[ChainLink]:
        return [link for link in self.links if link.required and link.ratio < floor]

    def to_json(self) -> list[dict]:
        return [link.to_dict() for link in self.links]

    def format(self) -> str:
        lines = [f"adiabatic chain check (threshold {self.threshold:g}, frequencies in kHz)"]
        for link in self.links:
            tag = "PASS" if link.passed else "FAIL"
            if not link.required:
                tag += " (advisory)"
            lines.append(
                f"  {link.name:<28s} {link.lhs:>14.6g} / {link.rhs:<14.6g} = {link.ratio:>10.4g}  {tag}"
            )
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def validate_chain(
    params: ExperimentParams,
    rates: EffectiveRates,
    ratio: float = 10.0,
) -> ValidationReport:
    """Check gamma >> Omega_e, omega_r >> Gamma >> eta_k Omega_k >> eps, kappa, g.

    Required links are the ones each elimination step relies on. The
    cross-channel comparisons and the drive strength links are reported as
    advisory: the quoted working point itself sits below them.
    """
    if ratio <= 1:
        raise DomainError(f"threshold ratio must exceed 1, got {ratio}")
    e1w = rates.eta1_tilde * params.omega1_rabi
    e2w = rates.eta2_tilde * params.omega2_rabi
    eps = abs(params.epsilon)
    spec = [
        ("gamma >> Omega_e", params.gamma, params.omega_e_rabi, True),
        ("Omega_e >> Gamma", params.omega_e_rabi, rates.Gamma, True),
        ("omega_r >> Gamma", params.omega_r, rates.Gamma, True),
        ("Gamma >> eta1*Omega1", rates.Gamma, e1w, True),
        ("Gamma >> eta2*Omega2", rates.Gamma, e2w, True),
        ("eta1*Omega1 >> g", e1w, rates.g, True),
        ("eta2*Omega2 >> kappa", e2w, rates.kappa, True),
        ("eta1*Omega1 >> kappa", e1w, rates.kappa, False),
        ("eta2*Omega2 >> g", e2w, rates.g, False),
        ("eta1*Omega1 >> |epsilon|", e1w, eps, False),
        ("eta2*Omega2 >> |epsilon|", e2w, eps, False),
    ]
    links = []
    for name, lhs, rhs, required in spec:
        if lhs == 0 and rhs == 0:
            continue
        r = math.inf if rhs == 0 else lhs / rhs
        links.append(ChainLink(name, to_khz(lhs), to_khz(rhs), r, r >= ratio, required))
    return ValidationReport(threshold=ratio, links=tuple(links))
