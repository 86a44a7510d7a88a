"""Lindblad master equations and their time integration.

The right-hand side is written as X + X^dag with

    X = K rho + 1/2 sum_k r_k L_k rho L_k^dag,   K = -i H - 1/2 sum_k r_k L_k^dag L_k,

which equals -i[H, rho] + sum_k r_k D[L_k] rho for Hermitian rho and is
Hermitian to the last bit. ``X`` is applied as a precomputed sparse
superoperator on the row-major flattened density matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from phonon_tc.fock import (
    DensityMatrix,
    DomainError,
    FockSpace,
    annihilation_op,
    dagger,
    identity_op,
    number_op,
    psd_tolerance,
)
from phonon_tc.integrator import IntegrationError, SolverStats, StepSizeUnderflow, dopri5

__all__ = [
    "IntegratorOptions",
    "InvariantBreach",
    "LindbladModel",
    "PhononModel",
    "Trajectory",
    "expect",
    "integrate",
    "lindblad_rhs",
    "mean_field_residual",
    "phonon_hamiltonian",
    "phonon_model",
]

log = logging.getLogger(__name__)

_HERMITIAN_H_TOL = 1e-12


def _as_csr(op) -> sp.csr_matrix:
    return sp.csr_matrix(op, dtype=complex)


def expect(op, rho) -> complex:
    """Tr(op rho) for a sparse or dense operator."""
    r = np.asarray(rho)
    if sp.issparse(op):
        return complex(op.multiply(r.T).sum())
    return complex(np.sum(np.asarray(op) * r.T))


class LindbladModel:
    """Hamiltonian plus weighted jump channels ``[(rate, L), ...]``."""

    def __init__(self, H, channels: Iterable[tuple[float, object]] = ()):
        self.H = _as_csr(H)
        if self.H.shape[0] != self.H.shape[1]:
            raise DomainError(f"Hamiltonian must be square, got {self.H.shape}")
        scale = max(1.0, abs(self.H).max() if self.H.nnz else 0.0)
        herm = abs(self.H - self.H.conj().T).max() if self.H.nnz else 0.0
        if herm > _HERMITIAN_H_TOL * scale:
            raise DomainError(f"Hamiltonian not Hermitian (max deviation {herm:.3e})")
        self.channels = []
        for rate, L in channels:
            if rate < 0:
                raise DomainError(f"channel rate must be >= 0, got {rate}")
            L = _as_csr(L)
            if L.shape != self.H.shape:
                raise DomainError(f"jump operator shape {L.shape} does not match {self.H.shape}")
            self.channels.append((float(rate), L))

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @cached_property
    def _half_superop(self) -> sp.csr_matrix:
        d = self.dim
        eye = identity_op(d)
        K = -1j * self.H
        sandwich = sp.csr_matrix((d * d, d * d), dtype=complex)
        for rate, L in self.channels:
            K = K - 0.5 * rate * (dagger(L) @ L)
            sandwich = sandwich + 0.5 * rate * sp.kron(L, L.conj(), format="csr")
        return (sp.kron(K, eye, format="csr") + sandwich).tocsr()

    def rhs_flat(self, t: float, y: np.ndarray) -> np.ndarray:
        d = self.dim
        X = (self._half_superop @ y).reshape(d, d)
        return (X + X.conj().T).ravel()


class PhononModel(LindbladModel):
    """Driven phonon mode with linear gain g D[a^dag] and two-phonon loss kappa D[a^2]."""

    def __init__(self, space: FockSpace, g: float, kappa: float, delta: float, epsilon: complex):
        self.space = space
        self.g = float(g)
        self.kappa = float(kappa)
        self.delta = float(delta)
        self.epsilon = complex(epsilon)
        a = annihilation_op(space)
        super().__init__(
            phonon_hamiltonian(delta, epsilon, space),
            [(self.g, dagger(a)), (self.kappa, (a @ a).tocsr())],
        )


def phonon_hamiltonian(delta: float, epsilon: complex, space: FockSpace) -> sp.csr_matrix:
    """-delta a^dag a + epsilon a^dag + conj(epsilon) a."""
    a = annihilation_op(space)
    return (-delta * number_op(space) + epsilon * dagger(a) + np.conj(epsilon) * a).tocsr()


def phonon_model(space: FockSpace, g: float, kappa: float, delta: float, epsilon: complex) -> PhononModel:
    return PhononModel(space, g, kappa, delta, epsilon)


def _density_array(rho) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def lindblad_rhs(model: LindbladModel, rho) -> np.ndarray:
    r = _density_array(rho)
    if r.shape != (model.dim, model.dim):
        raise DomainError(f"density matrix shape {r.shape} does not match model dimension {model.dim}")
    return model.rhs_flat(0.0, np.ascontiguousarray(r).ravel()).reshape(model.dim, model.dim)


def mean_field_residual(model: PhononModel, rho) -> complex:
    """Tr{rho_dot a} minus (g/2 + i delta)<a> - kappa <a^dag a^2> - i epsilon.

    Vanishes identically for states away from the Fock cutoff.
    """
    r = _density_array(rho)
    a = annihilation_op(model.space)
    lhs = expect(a, lindblad_rhs(model, r))
    mean_a = expect(a, r)
    cubic = expect((dagger(a) @ a @ a).tocsr(), r)
    rhs = (0.5 * model.g + 1j * model.delta) * mean_a - model.kappa * cubic - 1j * model.epsilon
    return lhs - rhs


class InvariantBreach(IntegrationError):
    def __init__(self, quantity: str, value: float, budget: float, time: float):
        super().__init__(
            f"{quantity} = {value:.3e} exceeds budget {budget:.3e} at t = {time:.9g} ms", time=time
        )
        self.quantity = quantity
        self.value = value
        self.budget = budget


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    first_step: float | None = None
    max_steps: int = 50_000_000
    trace_budget: float = 1e-8
    hermiticity_budget: float = 1e-10
    psd_budget: float | None = None
    purity_slack: float = 1e-10
    eig_every: int = 1

    def to_dict(self) -> dict:
        return {
            "method": "Dormand-Prince 5(4), max-norm error control over real components",
            "rtol": self.rtol,
            "atol": self.atol,
            "first_step": self.first_step,
            "trace_budget": self.trace_budget,
            "hermiticity_budget": self.hermiticity_budget,
            "psd_budget": self.psd_budget,
            "purity_slack": self.purity_slack,
        }


@dataclass
class Trajectory:
    """Observables on the output grid plus any stored density matrices."""

    times: np.ndarray
    observables: dict[str, np.ndarray]
    states: dict[float, DensityMatrix] = field(default_factory=dict)
    monitor: dict = field(default_factory=dict)
    stats: SolverStats = field(default_factory=SolverStats)

    def state_at(self, t: float) -> DensityMatrix:
        key = min(self.states, key=lambda s: abs(s - t))
        if abs(key - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no stored state at t = {t}")
        return self.states[key]


def _resolve_store(store, t_grid: np.ndarray) -> set[int]:
    if store is None or store == "all":
        return set(range(len(t_grid)))
    if store == "none":
        return set()
    idx = set()
    for t in store:
        i = int(np.argmin(np.abs(t_grid - t)))
        if abs(t_grid[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"requested snapshot time {t} is not on the output grid")
        idx.add(i)
    return idx


def integrate(
    model: LindbladModel,
    rho0,
    t_grid,
    opts: IntegratorOptions | None = None,
    e_ops: Mapping[str, object] | None = None,
    populations: int | None = None,
    store="all",
) -> Trajectory:
    """Evolve ``rho0`` and sample observables on ``t_grid`` (ms).

    ``e_ops`` maps names to operators whose real expectation values are
    recorded; ``populations=K`` records p_0..p_K; ``store`` selects the
    grid times whose full density matrices are kept ("all", "none" or a
    sequence of times). The invariant monitor checks trace, Hermiticity,
    smallest eigenvalue and purity at every output time and raises
    :class:`InvariantBreach` instead of renormalizing.
    """
    opts = opts or IntegratorOptions()
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    r0 = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(rho0)
    if r0.dim != model.dim:
        raise DomainError(f"initial state dimension {r0.dim} does not match model dimension {model.dim}")
    d = model.dim
    psd_budget = opts.psd_budget if opts.psd_budget is not None else psd_tolerance(d)
    e_ops = {k: _as_csr(v) for k, v in (e_ops or {}).items()}
    keep = _resolve_store(store, t_grid)
    if populations is not None and populations >= d:
        raise DomainError(f"population index {populations} outside cutoff {d}")

    n_t = len(t_grid)
    obs = {name: np.empty(n_t) for name in e_ops}
    obs["trace"] = np.empty(n_t)
    obs["purity"] = np.empty(n_t)
    pops = np.empty((n_t, populations + 1)) if populations is not None else None
    monitor = {
        "checkpoints": n_t,
        "max_trace_drift": 0.0,
        "max_hermiticity": 0.0,
        "min_eigenvalue": np.inf,
        "min_purity": np.inf,
        "max_purity": -np.inf,
        "max_top_population": 0.0,
    }
    states: dict[float, DensityMatrix] = {}
    stats = SolverStats()
    solver = dopri5(
        model.rhs_flat,
        t_grid,
        np.ascontiguousarray(r0.data).ravel(),
        rtol=opts.rtol,
        atol=opts.atol,
        first_step=opts.first_step,
        max_steps=opts.max_steps,
        stats=stats,
    )
    for i, (t, y) in enumerate(solver):
        rho = y.reshape(d, d)
        tr = np.trace(rho)
        drift = abs(tr - 1.0)
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        pur = float(np.vdot(rho.conj().T.ravel(), rho.ravel()).real)
        monitor["max_trace_drift"] = max(monitor["max_trace_drift"], drift)
        monitor["max_hermiticity"] = max(monitor["max_hermiticity"], herm)
        monitor["min_purity"] = min(monitor["min_purity"], pur)
        monitor["max_purity"] = max(monitor["max_purity"], pur)
        monitor["max_top_population"] = max(monitor["max_top_population"], float(rho[-1, -1].real))
        if drift > opts.trace_budget:
            raise InvariantBreach("trace drift", drift, opts.trace_budget, t)
        if herm > opts.hermiticity_budget:
            raise InvariantBreach("hermiticity violation", herm, opts.hermiticity_budget, t)
        if pur > 1.0 + opts.purity_slack or pur < 1.0 / d - opts.purity_slack:
            raise InvariantBreach("purity out of [1/d, 1]", pur, opts.purity_slack, t)
        if opts.eig_every and i % opts.eig_every == 0:
            lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
            monitor["min_eigenvalue"] = min(monitor["min_eigenvalue"], lam)
            if lam < -psd_budget:
                raise InvariantBreach("negative eigenvalue", -lam, psd_budget, t)
        obs["trace"][i] = tr.real
        obs["purity"][i] = pur
        for name, op in e_ops.items():
            obs[name][i] = expect(op, rho).real
        if pops is not None:
            pops[i] = np.diagonal(rho)[: populations + 1].real
        if i in keep:
            states[float(t)] = DensityMatrix(rho, check=False)
    if pops is not None:
        obs["populations"] = pops
    monitor["steps"] = stats.steps
    monitor["rejected"] = stats.rejected
    monitor["nfev"] = stats.nfev
    log.debug("integrated %d steps (%d rejected) to t=%g", stats.steps, stats.rejected, t_grid[-1])
    return Trajectory(times=t_grid, observables=obs, states=states, monitor=monitor, stats=stats)


__all__ += ["IntegrationError", "StepSizeUnderflow"]
