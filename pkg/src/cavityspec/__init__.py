"""Local spectra of a single photon scattered by two-level atoms in a 1D cavity.

The package propagates one-excitation states of a sine-mode cavity coupled to
two-level atoms and compares two ways of measuring a local spectrum: banks of
weakly coupled analyzer atoms, and mode reconstruction from a spatially
filtered field correlation function.
"""

__version__ = "0.1.0"

from .core import (AtomSpec, GaussianPhotonSpec, ModeBasis, MultiGaussianBounds,
                   SingleExcitationState, build_mode_basis, gaussian_photon_state,
                   normalize, random_multi_gaussian_state)
from .dynamics import (CoupledHamiltonian, Schedule, Trajectory, assemble_hamiltonian,
                       atom_excitation, cutoff_shift, dipole_from_gamma, evolve,
                       field_energy)
from .errors import (ConfigParseError, DegenerateFieldError, DegenerateSpectrumError,
                     ExperimentValidationError, InvalidArgumentError,
                     InvalidComparisonError, StepSizeError)
from .observables import (CorrelationField, SpatialGrid, corr_B, corr_E, corr_W,
                          energy_density, eval_T, reconstruct_from_T,
                          reconstruct_products_from_W)
from .spectra import (AnalyzerBank, SpatialFilter, Spectrum, analyzer_spectrum,
                      apply_filter, build_analyzer_bank, compare_spectra,
                      filtered_mode_spectrum, normalize_spectrum)
from .scenarios import (ExperimentSpec, parse_experiment, render_experiment,
                        scenario_one_atom, scenario_random_photon,
                        scenario_three_atoms)
from .experiment import RunResult, run_experiment
