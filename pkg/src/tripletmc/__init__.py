"""Ground states of lattice models from a stochastic triplet ensemble.

The density matrix is sampled as signed triplets ``(c, ket, bra)`` and driven
to the fixed point of a resolvent map built from the free (diagonal) and
interaction (off-diagonal) parts of the Hamiltonian.
"""
from .ed import enumerate_sector, exact_one_step, fixed_point_iterate, ground_state_energy
from .engine import (
    EngineConfig,
    Ensemble,
    EnsembleExtinctError,
    FreeEvolutionError,
    SampleRecord,
    init_ensemble,
    run_loop,
    run_simulation,
)
from .estimators import binning_analysis, detect_plateau, energy_series_estimate, expectation
from .hamiltonians import FermiHubbard, HeisenbergParams, HeisenbergXXZ, HubbardParams, make_model
from .importance import BiasParams
from .lattice import FermionConfig, LatticeSpec, build_lattice

__all__ = [
    "BiasParams",
    "EngineConfig",
    "Ensemble",
    "EnsembleExtinctError",
    "FermiHubbard",
    "FermionConfig",
    "FreeEvolutionError",
    "HeisenbergParams",
    "HeisenbergXXZ",
    "HubbardParams",
    "LatticeSpec",
    "SampleRecord",
    "binning_analysis",
    "build_lattice",
    "energy_series_estimate",
    "enumerate_sector",
    "exact_one_step",
    "detect_plateau",
    "expectation",
    "fixed_point_iterate",
    "ground_state_energy",
    "init_ensemble",
    "make_model",
    "run_loop",
    "run_simulation",
]
