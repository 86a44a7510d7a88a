"""Fock-basis simulation of a dissipative phonon time crystal in a two-ion trap."""

from phonon_tc.fock import (
    DensityMatrix,
    FockSpace,
    annihilation_op,
    coherent_state_vector,
    creation_op,
    dagger,
    fock_state,
    number_op,
    thermal_state,
)
from phonon_tc.params import (
    EffectiveRates,
    ExperimentParams,
    ThermalSpec,
    derive_rates,
    eta_tilde_1,
    eta_tilde_2,
    validate_chain,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "EffectiveRates",
    "ExperimentParams",
    "FockSpace",
    "ThermalSpec",
    "annihilation_op",
    "coherent_state_vector",
    "creation_op",
    "dagger",
    "derive_rates",
    "eta_tilde_1",
    "eta_tilde_2",
    "fock_state",
    "number_op",
    "thermal_state",
    "validate_chain",
]
