"""Effective-operator adiabatic elimination.

Given a ground/excited partition of a Hilbert space, the couplings between
the two blocks and the decay operators out of the excited block, the
excited block is eliminated to leave an effective Hamiltonian and
effective jump operators acting on the ground block:

    H_NH   = H_e - (i/2) sum_k L_k^dag L_k
    H_eff  = -1/2 V_- [H_NH^-1 + (H_NH^-1)^dag] V_+ + H_g
    L_eff  = L_k H_NH^-1 V_+

Composite spaces are ordered ion1 (x) ion2 (x) phonon throughout. All
matrices here are dense; the models are small.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp

from phonon_tc.fock import DomainError, FockSpace, annihilation_op, number_op
from phonon_tc.master_eq import IntegratorOptions, LindbladModel, integrate, phonon_hamiltonian, phonon_model
from phonon_tc.params import EffectiveRates, ExperimentParams, derive_rates

__all__ = [
    "EffectiveModel",
    "PartitionedModel",
    "build_stage1_model",
    "build_stage2_model",
    "compare_elimination",
    "EliminationComparison",
    "eliminate",
    "ion_op",
    "non_hermitian_h",
    "operator_dump",
    "restricted_inverse",
]

PARTITION_TOL = 1e-12
SINGULAR_RTOL = 1e-12


def _dense(op) -> np.ndarray:
    return op.toarray() if hasattr(op, "toarray") else np.asarray(op, dtype=complex)


def _kron(*ops) -> np.ndarray:
    return reduce(np.kron, [_dense(o) for o in ops])


def _ketbra(levels: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((levels, levels), dtype=complex)
    m[i, j] = 1.0
    return m


def ion_op(single: np.ndarray, ion: int, levels: int, cutoff: int, phonon=None) -> np.ndarray:
    """Embed a single-ion operator (and optionally a phonon operator) into ion1 (x) ion2 (x) phonon."""
    eye_ion = np.eye(levels, dtype=complex)
    ph = np.eye(cutoff, dtype=complex) if phonon is None else _dense(phonon)
    parts = [single, eye_ion] if ion == 0 else [eye_ion, single]
    return _kron(*parts, ph)


@dataclass
class PartitionedModel:
    """Ground/excited split of a Lindblad model, ready for elimination."""

    H_g: np.ndarray
    H_e: np.ndarray
    V_plus: np.ndarray
    V_minus: np.ndarray
    jumps: list[np.ndarray]
    excited_projector: np.ndarray
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.H_g = _dense(self.H_g)
        self.H_e = _dense(self.H_e)
        self.V_plus = _dense(self.V_plus)
        self.V_minus = _dense(self.V_minus)
        self.jumps = [_dense(L) for L in self.jumps]
        self.excited_projector = _dense(self.excited_projector)
        self.check()

    @property
    def dim(self) -> int:
        return self.H_g.shape[0]

    @property
    def ground_projector(self) -> np.ndarray:
        return np.eye(self.dim) - self.excited_projector

    def check(self) -> None:
        Pe = self.excited_projector
        Pg = self.ground_projector
        if np.max(np.abs(Pe @ Pe - Pe)) > PARTITION_TOL or np.max(np.abs(Pe - Pe.conj().T)) > PARTITION_TOL:
            raise DomainError("excited_projector is not an orthogonal projector")
        if np.max(np.abs(self.V_minus - self.V_plus.conj().T)) > PARTITION_TOL:
            raise DomainError("V_minus must equal V_plus^dag")
        if np.max(np.abs(Pe @ self.V_plus @ Pg - self.V_plus), initial=0.0) > PARTITION_TOL:
            raise DomainError("V_plus must map the ground block into the excited block")
        for k, L in enumerate(self.jumps):
            # decay may pass through other excited states (double excitations); it must not act on the ground block
            if np.max(np.abs(L @ Pg), initial=0.0) > PARTITION_TOL:
                raise DomainError(f"jump operator {k} must annihilate the ground block")
        if np.max(np.abs(Pg @ self.H_g @ Pg - self.H_g), initial=0.0) > PARTITION_TOL:
            raise DomainError("H_g must act within the ground block")
        if np.max(np.abs(Pe @ self.H_e @ Pe - self.H_e), initial=0.0) > PARTITION_TOL:
            raise DomainError("H_e must act within the excited block")


@dataclass
class EffectiveModel:
    H_eff: np.ndarray
    L_eff: list[np.ndarray]

    def to_json(self, tol: float = 0.0) -> str:
        return json.dumps(
            {"H_eff": operator_dump(self.H_eff, tol), "L_eff": [operator_dump(L, tol) for L in self.L_eff]},
            indent=1,
        )


def operator_dump(op, tol: float = 0.0) -> dict:
    """{dim, entries: [(row, col, re, im), ...]} listing entries with modulus above ``tol``."""
    m = _dense(op)
    rows, cols = np.nonzero(np.abs(m) > tol)
    return {
        "dim": int(m.shape[0]),
        "entries": [[int(r), int(c), float(m[r, c].real), float(m[r, c].imag)] for r, c in zip(rows, cols)],
    }


def non_hermitian_h(model: PartitionedModel) -> np.ndarray:
    H = model.H_e.astype(complex).copy()
    for L in model.jumps:
        H -= 0.5j * (L.conj().T @ L)
    return H


def restricted_inverse(H_NH: np.ndarray, excited_projector: np.ndarray) -> np.ndarray:
    """Inverse of ``H_NH`` on the range of ``excited_projector``, zero elsewhere.

    ``H_NH`` is singular on the full space, so only its excited block is
    inverted. Raises :class:`DomainError` when that block is numerically
    singular.
    """
    evals, evecs = np.linalg.eigh(excited_projector)
    basis = evecs[:, evals > 0.5]
    if basis.shape[1] == 0:
        raise DomainError("excited subspace is empty")
    block = basis.conj().T @ H_NH @ basis
    sv = np.linalg.svd(block, compute_uv=False)
    if sv[-1] <= SINGULAR_RTOL * sv[0] or sv[0] == 0:
        raise DomainError(
            f"non-Hermitian Hamiltonian is singular on the excited block "
            f"(smallest singular value {sv[-1]:.3e}, largest {sv[0]:.3e})"
        )
    return basis @ np.linalg.inv(block) @ basis.conj().T


def eliminate(model: PartitionedModel) -> EffectiveModel:
    inv = restricted_inverse(non_hermitian_h(model), model.excited_projector)
    H_eff = -0.5 * model.V_minus @ (inv + inv.conj().T) @ model.V_plus + model.H_g
    herm = np.max(np.abs(H_eff - H_eff.conj().T))
    if herm > PARTITION_TOL * max(1.0, np.max(np.abs(H_eff))):
        raise DomainError(f"effective Hamiltonian not Hermitian (error {herm:.3e})")
    L_eff = [L @ inv @ model.V_plus for L in model.jumps]
    return EffectiveModel(H_eff=H_eff, L_eff=L_eff)


def _level_projector(level: int, levels: int, cutoff: int) -> np.ndarray:
    """Projector onto states where at least one ion occupies ``level``."""
    other = np.eye(levels) - _ketbra(levels, level, level)
    none = _kron(other, other, np.eye(cutoff))
    return np.eye(levels * levels * cutoff) - none


def build_stage1_model(
    params: ExperimentParams,
    space: FockSpace,
    rates: EffectiveRates | None = None,
) -> PartitionedModel:
    """Three-level ions with the 854 nm repumper on resonance; |2> is eliminated.

    The ground block carries the phonon Hamiltonian and the sideband
    couplings already reduced to their time-independent form.
    """
    rates = rates or derive_rates(params)
    d = space.cutoff
    a = annihilation_op(space).toarray()
    s_minus = _ketbra(3, 0, 1)   # |0><1|
    st_plus = _ketbra(3, 2, 1)   # |2><1|
    decay = _ketbra(3, 0, 2)     # |0><2|

    Pe = _level_projector(2, 3, d)
    Pg = np.eye(Pe.shape[0]) - Pe

    H_a = _kron(np.eye(3), np.eye(3), phonon_hamiltonian(params.delta, params.epsilon, space))
    c1 = 0.5 * rates.eta1_tilde * params.omega1_rabi
    c2 = 0.5 * rates.eta2_tilde * params.omega2_rabi
    H_side = c1 * ion_op(s_minus, 0, 3, d, a) + c2 * ion_op(s_minus.conj().T, 1, 3, d, a @ a)
    H_side = H_side + H_side.conj().T
    H_g = Pg @ (H_a + H_side) @ Pg

    V = 0.5 * params.omega_e_rabi * (ion_op(st_plus, 0, 3, d) + ion_op(st_plus, 1, 3, d))
    V_plus = Pe @ V @ Pg
    jumps = [np.sqrt(params.gamma) * ion_op(decay, n, 3, d) for n in (0, 1)]
    return PartitionedModel(
        H_g=H_g,
        H_e=np.zeros_like(H_g),
        V_plus=V_plus,
        V_minus=V_plus.conj().T,
        jumps=jumps,
        excited_projector=Pe,
        labels={"levels": 3, "cutoff": d, "order": "ion1 x ion2 x phonon"},
    )


def stage2_operators(params: ExperimentParams, rates: EffectiveRates, space: FockSpace) -> dict:
    """Full two-level-ion (x) phonon operators: Hamiltonian pieces and decay jumps."""
    d = space.cutoff
    a = annihilation_op(space).toarray()
    ad = a.conj().T
    s_minus = _ketbra(2, 0, 1)
    s_plus = s_minus.conj().T
    c1 = 0.5 * rates.eta1_tilde * params.omega1_rabi
    c2 = 0.5 * rates.eta2_tilde * params.omega2_rabi
    H_a = _kron(np.eye(2), np.eye(2), phonon_hamiltonian(params.delta, params.epsilon, space))
    # gain sideband a^dag sigma_+ on ion 1, two-phonon loss a^2 sigma_+ on ion 2
    V1 = c1 * ion_op(s_plus, 0, 2, d, ad)
    V2 = c2 * ion_op(s_plus, 1, 2, d, a @ a)
    H_int = V1 + V2
    H_int = H_int + H_int.conj().T
    jumps = [1j * np.sqrt(rates.Gamma) * ion_op(s_minus, n, 2, d) for n in (0, 1)]
    number = _kron(np.eye(2), np.eye(2), np.diag(np.arange(d)))
    return {"H_a": H_a, "V": V1 + V2, "H_int": H_int, "jumps": jumps, "number": number}


def build_stage2_model(
    params: ExperimentParams,
    rates: EffectiveRates,
    space: FockSpace,
) -> PartitionedModel:
    """Two-level ions coupled to the phonon by the gain and two-phonon-loss sidebands; |1> is eliminated.

    The excited-block Hamiltonian is dropped (phonon energies are negligible
    next to Gamma), so H_NH = -(i Gamma / 2) times the excitation number.
    """
    d = space.cutoff
    ops = stage2_operators(params, rates, space)
    Pe = _level_projector(1, 2, d)
    Pg = np.eye(Pe.shape[0]) - Pe
    V_plus = Pe @ ops["V"] @ Pg
    return PartitionedModel(
        H_g=Pg @ ops["H_a"] @ Pg,
        H_e=np.zeros_like(V_plus),
        V_plus=V_plus,
        V_minus=V_plus.conj().T,
        jumps=ops["jumps"],
        excited_projector=Pe,
        labels={"levels": 2, "cutoff": d, "order": "ion1 x ion2 x phonon"},
    )


@dataclass
class EliminationComparison:
    """<a^dag a>(t) from the full two-ion model and from the effective phonon model."""

    times: np.ndarray
    n_full: np.ndarray
    n_eff: np.ndarray

    @property
    def relative_error(self) -> float:
        """max |N_full - N_eff| over the run, relative to max N_eff."""
        return float(np.max(np.abs(self.n_full - self.n_eff)) / np.max(np.abs(self.n_eff)))


def compare_elimination(
    params: ExperimentParams,
    cutoff: int,
    t_grid,
    opts: IntegratorOptions | None = None,
) -> EliminationComparison:
    """Integrate the full stage-2 model and its effective model from ions in |00> and phonon vacuum.

    Only meaningful when the sideband strengths are well below Gamma (see
    :func:`phonon_tc.presets.oracle_params`); the full model is small (4 d).
    """
    rates = derive_rates(params)
    space = FockSpace(cutoff)
    ops = stage2_operators(params, rates, space)
    full = LindbladModel(sp.csr_matrix(ops["H_a"] + ops["H_int"]), [(1.0, sp.csr_matrix(L)) for L in ops["jumps"]])
    eff = phonon_model(space, rates.g, rates.kappa, params.delta, params.epsilon)
    opts = opts or IntegratorOptions(rtol=1e-10, atol=1e-12)
    rho_full = np.zeros((4 * cutoff, 4 * cutoff), dtype=complex)
    rho_full[0, 0] = 1.0
    rho_eff = np.zeros((cutoff, cutoff), dtype=complex)
    rho_eff[0, 0] = 1.0
    a = integrate(full, rho_full, t_grid, opts, e_ops={"N": ops["number"]}, store="none")
    b = integrate(eff, rho_eff, t_grid, opts, e_ops={"N": number_op(space)}, store="none")
    return EliminationComparison(np.asarray(t_grid, float), a.observables["N"], b.observables["N"])
