"""Mean-field (classical) limit: the driven Van der Pol amplitude equation.

    d alpha / dt = (g/2 + i delta - kappa |alpha|^2) alpha - i epsilon

Rates in rad/ms, times in ms, as everywhere else in the package.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.signal import find_peaks

from phonon_tc.fock import DomainError
from phonon_tc.integrator import IntegrationError

__all__ = [
    "ClassicalParams",
    "ClassicalTrajectory",
    "IndeterminateRegime",
    "Regime",
    "classify_regime",
    "hopf_threshold",
    "integrate_classical",
    "limit_cycle_orbit",
    "locate_transition",
    "undriven_radius",
    "vdp_rhs",
]


@dataclass(frozen=True)
class ClassicalParams:
    g: float
    kappa: float
    delta: float
    epsilon: complex = 0.0

    def __post_init__(self):
        if self.g < 0 or self.kappa < 0:
            raise DomainError("g and kappa must be >= 0")
        object.__setattr__(self, "epsilon", complex(self.epsilon))

    @classmethod
    def from_rescaled_drive(cls, g, kappa, delta, eps_sqrt_kappa: float, phase: float = 0.0):
        """Drive magnitude fixed by the rescaled strength |epsilon| sqrt(kappa)."""
        if kappa <= 0:
            raise DomainError("rescaled drive needs kappa > 0")
        return cls(g, kappa, delta, eps_sqrt_kappa / math.sqrt(kappa) * np.exp(1j * phase))


@dataclass
class ClassicalTrajectory:
    times: np.ndarray
    alphas: np.ndarray

    @property
    def abs2(self) -> np.ndarray:
        return np.abs(self.alphas) ** 2


class Regime(enum.Enum):
    FIXED_POINT = "FixedPoint"
    LIMIT_CYCLE = "LimitCycle"


class IndeterminateRegime(RuntimeError):
    """Neither a settled fixed point nor a stationary orbit; integrate longer."""


def vdp_rhs(alpha: complex, p: ClassicalParams) -> complex:
    return (0.5 * p.g + 1j * p.delta - p.kappa * abs(alpha) ** 2) * alpha - 1j * p.epsilon


def _rhs_real(p: ClassicalParams):
    half_g, delta, kappa = 0.5 * p.g, p.delta, p.kappa
    eps_re, eps_im = p.epsilon.real, p.epsilon.imag

    def f(t, y):
        x, q = y
        radial = half_g - kappa * (x * x + q * q)
        return [radial * x - delta * q + eps_im, radial * q + delta * x - eps_re]

    return f


def integrate_classical(
    alpha0: complex,
    p: ClassicalParams,
    t_grid,
    rtol: float = 1e-11,
    atol: float = 1e-12,
) -> ClassicalTrajectory:
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    alpha0 = complex(alpha0)
    if t_grid.size == 1:
        return ClassicalTrajectory(times=t_grid, alphas=np.array([alpha0]))
    sol = solve_ivp(
        _rhs_real(p),
        (t_grid[0], t_grid[-1]),
        np.array([alpha0.real, alpha0.imag]),
        method="DOP853",
        t_eval=t_grid,
        rtol=rtol,
        atol=atol,
    )
    if sol.status != 0:
        raise IntegrationError(f"classical integration failed: {sol.message}", time=float(sol.t[-1]))
    return ClassicalTrajectory(times=t_grid, alphas=sol.y[0] + 1j * sol.y[1])


def hopf_threshold(g: float, delta: float) -> float:
    """Rescaled drive |epsilon| sqrt(kappa) at the Hopf point, small-kappa limit."""
    if g < 0:
        raise DomainError("g must be >= 0")
    return math.sqrt(g * (g * g + 4.0 * delta * delta)) / 4.0


def undriven_radius(p: ClassicalParams) -> float:
    if p.kappa <= 0:
        raise DomainError("limit-cycle radius needs kappa > 0")
    return math.sqrt(p.g / (2.0 * p.kappa))


def _refined_peaks(x: np.ndarray) -> np.ndarray:
    idx, _ = find_peaks(x)
    idx = idx[(idx > 0) & (idx < len(x) - 1)]
    if idx.size == 0:
        return np.empty(0)
    y0, y1, y2 = x[idx - 1], x[idx], x[idx + 1]
    denom = y0 - 2 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(denom != 0, 0.5 * (y0 - y2) / denom, 0.0)
    return y1 - 0.25 * (y0 - y2) * shift


def _is_stationary_orbit(alphas: np.ndarray, rel_tol: float) -> bool:
    re = alphas.real
    scale = max(np.max(np.abs(alphas)), 1e-300)
    if np.std(re) < 1e-6 * scale:
        return False
    center = alphas.mean()
    r = np.abs(alphas - center)
    r_mean = r.mean()
    if r_mean == 0:
        return False
    if (r.max() - r.min()) / r_mean < rel_tol:
        return True
    peaks = _refined_peaks(r)
    if peaks.size < 3:
        return False
    return (peaks.max() - peaks.min()) / r_mean < rel_tol


def _sample_step(p: ClassicalParams) -> float:
    scale = abs(p.delta) + p.g + 2.0 * math.sqrt(p.kappa) * abs(p.epsilon) + abs(p.epsilon)
    return 2 * math.pi / (60.0 * max(scale, 1e-12))


def classify_regime(
    p: ClassicalParams,
    horizon: float,
    perturbation: complex | None = None,
    rel_tol: float = 0.01,
    max_samples: int = 400_000,
) -> Regime:
    """Long-time behaviour started from alpha = 0 and from a perturbed amplitude.

    FixedPoint when every start ends with |d alpha/dt| < 1e-6 |epsilon| + 1e-9;
    LimitCycle when some start settles on an orbit whose per-cycle radius
    maxima (about the orbit centre) vary by less than ``rel_tol`` over the
    last 20% of the horizon. Otherwise :class:`IndeterminateRegime`.
    """
    if perturbation is None:
        perturbation = 0.1 * undriven_radius(p) if p.kappa > 0 and p.g > 0 else 0.1
    n = int(min(max_samples, max(2001, math.ceil(horizon / _sample_step(p)))))
    t = np.linspace(0.0, horizon, n)
    tail = t >= 0.8 * horizon
    fp_tol = 1e-6 * abs(p.epsilon) + 1e-9
    fixed = []
    cycling = False
    for alpha0 in (0.0, complex(perturbation)):
        traj = integrate_classical(alpha0, p, t)
        end_speed = abs(vdp_rhs(traj.alphas[-1], p))
        fixed.append(end_speed < fp_tol)
        if not fixed[-1] and _is_stationary_orbit(traj.alphas[tail], rel_tol):
            cycling = True
    if cycling:
        return Regime.LIMIT_CYCLE
    if all(fixed):
        return Regime.FIXED_POINT
    raise IndeterminateRegime(
        f"no settled fixed point or stationary orbit within horizon {horizon:g} ms; extend the horizon"
    )


def locate_transition(
    g: float,
    kappa: float,
    delta: float,
    lo: float,
    hi: float,
    horizon: float,
    rel_width: float = 1e-3,
    max_horizon: float | None = None,
    stop_on_indeterminate: bool = False,
) -> tuple[float, float]:
    """Bisect the rescaled drive between a LimitCycle ``lo`` and a FixedPoint ``hi``.

    Returns the final bracket. Indeterminate evaluations are retried with a
    doubled horizon up to ``max_horizon`` (default 32x). Relaxation slows
    down without bound at the bifurcation, so a midpoint close enough to it
    stays indeterminate; with ``stop_on_indeterminate`` the bracket resolved
    so far is returned instead of raising.
    """
    max_horizon = max_horizon or 32 * horizon

    def regime(x):
        h = horizon
        while True:
            try:
                return classify_regime(ClassicalParams.from_rescaled_drive(g, kappa, delta, x), h)
            except IndeterminateRegime:
                h *= 2
                if h > max_horizon:
                    raise

    if regime(lo) is not Regime.LIMIT_CYCLE or regime(hi) is not Regime.FIXED_POINT:
        raise DomainError("bracket must go from LimitCycle (lo) to FixedPoint (hi)")
    while (hi - lo) > rel_width * hi:
        mid = 0.5 * (lo + hi)
        try:
            found = regime(mid)
        except IndeterminateRegime:
            if not stop_on_indeterminate:
                raise
            break
        if found is Regime.LIMIT_CYCLE:
            lo = mid
        else:
            hi = mid
    return lo, hi


def limit_cycle_orbit(p: ClassicalParams, settle: float, span: float, samples: int = 4000):
    """Orbit samples after ``settle`` ms, with its centre and mean radius about that centre."""
    t = np.concatenate([[0.0], np.linspace(settle, settle + span, samples)])
    traj = integrate_classical(0.0, p, t)
    orbit = traj.alphas[1:]
    center = orbit.mean()
    return orbit, center, float(np.abs(orbit - center).mean())
