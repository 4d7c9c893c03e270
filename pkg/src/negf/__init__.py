"""Steady-state nonequilibrium Green functions for molecular junctions with
electron-phonon coupling, in the Liouville-space (L/R branch) formulation."""

from .dyson import DysonError, ScbaDivergence, ScbaResult, scba_loop, solve_coupled, solve_rak
from .green import KeldyshGF, RakGF, electron_g0, from_rak, keldysh_residual, phonon_d0, to_rak
from .grid import FrequencyGrid, GridFunction, GridMismatchError, convolve, integrate
from .model import (
    ConfigError,
    JunctionSpec,
    LeadSpec,
    PhononSpec,
    SolverOptions,
    apply_bias,
    parse_config,
)
from .observables import CurrentResult, currents, lead_current, occupation, spectral, transmission
from .selfenergy import (
    SelfEnergySet,
    assemble_electron_sigma,
    assemble_phonon_pi,
    bath_gamma_sigma,
    ep_sigma_electron,
    ep_sigma_phonon,
    lead_sigma,
)

__all__ = [
    "ConfigError", "CurrentResult", "DysonError", "FrequencyGrid", "GridFunction", "GridMismatchError",
    "JunctionSpec", "KeldyshGF", "LeadSpec", "PhononSpec", "RakGF", "ScbaDivergence", "ScbaResult",
    "SelfEnergySet", "SolverOptions", "apply_bias", "assemble_electron_sigma", "assemble_phonon_pi",
    "bath_gamma_sigma", "convolve", "currents", "electron_g0", "ep_sigma_electron", "ep_sigma_phonon",
    "from_rak", "integrate", "keldysh_residual", "lead_current", "lead_sigma", "occupation",
    "parse_config", "phonon_d0", "scba_loop", "solve_coupled", "solve_rak", "spectral", "to_rak",
    "transmission",
]
