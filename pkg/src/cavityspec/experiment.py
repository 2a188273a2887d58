"""Execute an :class:`~cavityspec.scenarios.ExperimentSpec` end to end."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .core import ModeBasis
from .dynamics import EvolutionDiagnostics, Schedule, evolve, field_energy
from .observables import SpatialGrid, energy_density_on_grid
from .spectra import (ComparisonMetrics, Spectrum, absorbed_energy,
                      analyzer_spectrum, build_analyzer_bank, compare_normalized,
                      filtered_mode_spectrum, initial_spectrum,
                      normalize_spectrum)
from .scenarios import (AnalyzerSpectrumOutput, ComparisonOutput,
                        EnergyDensityOutput, ExcitationTraceOutput,
                        ExperimentSpec, InitialSpectrumOutput,
                        ModeSpectrumOutput, experiment_to_dict)

log = logging.getLogger(__name__)


@dataclass
class ComparisonResult:
    name: str
    analyzer: str
    mode: str
    tol: float
    metrics: ComparisonMetrics

    @property
    def passed(self) -> bool:
        return self.metrics.l1 <= self.tol


@dataclass
class RunResult:
    """Everything a run produced, keyed by output name."""

    spec: ExperimentSpec
    basis: ModeBasis
    energy_density: dict = field(default_factory=dict)  # t -> (r, u)
    trace_times: dict = field(default_factory=dict)  # trace label -> times
    traces: dict = field(default_factory=dict)  # trace label -> {atom: p(t)}
    spectra: dict = field(default_factory=dict)  # name -> Spectrum (unnormalized)
    comparisons: dict = field(default_factory=dict)
    absorption: dict = field(default_factory=dict)  # spectrum name -> absorbed / initial field energy
    diagnostics: EvolutionDiagnostics | None = None
    initial_energy: float = 0.0
    wall_time: float = 0.0

    def normalized(self, name: str) -> Spectrum:
        return normalize_spectrum(self.spectra[name])

    def metadata(self) -> dict:
        return {
            "package_version": __version__,
            "experiment": experiment_to_dict(self.spec),
            "state_dimension": self.basis.n_modes + self.n_atoms,
            "initial_field_energy": self.initial_energy,
            "diagnostics": self.diagnostics.as_dict() if self.diagnostics else None,
            "bank_absorption": dict(self.absorption),
            "comparisons": {
                k: {"analyzer": c.analyzer, "mode": c.mode, "tol": c.tol, "passed": c.passed,
                    **c.metrics.as_dict()}
                for k, c in self.comparisons.items()
            },
            "wall_time_s": self.wall_time,
        }

    @property
    def n_atoms(self) -> int:
        return len(self.spec.atoms) + sum(b.n_atoms for b in self.spec.banks)


def layout(spec: ExperimentSpec):
    """Atom list (scatterers, then each bank in order) and index maps.

    Returns ``(atoms, atom_index, bank_offset)`` where ``atom_index`` maps
    scatterer names and ``bank_offset`` maps bank names to the position of
    their first atom.
    """
    atoms = list(spec.atoms)
    atom_index = {a.name: i for i, a in enumerate(spec.atoms)}
    bank_offset = {}
    for b in spec.banks:
        bank_offset[b.name] = len(atoms)
        atoms.extend(build_analyzer_bank(b))
    return atoms, atom_index, bank_offset


def _read_time(spec, o: AnalyzerSpectrumOutput) -> float:
    return o.t_read if o.t_read is not None else spec.bank(o.bank).t_read


def sample_times(spec: ExperimentSpec) -> list[float]:
    ts = {0.0}
    for o in spec.outputs:
        if isinstance(o, EnergyDensityOutput):
            ts.update(o.times)
        elif isinstance(o, ExcitationTraceOutput):
            ts.update(o.times)
        elif isinstance(o, AnalyzerSpectrumOutput):
            ts.add(_read_time(spec, o))
        elif isinstance(o, ModeSpectrumOutput):
            ts.add(o.t)
    return sorted(ts)


def run_experiment(spec: ExperimentSpec, *, backend: str | None = None, tol: float | None = None,
                   dt_max: float | None = None) -> RunResult:
    """Evolve the experiment once and evaluate every requested output.

    Keyword arguments override the spec's integrator settings; the
    overrides are recorded in the returned spec.
    """
    integ = spec.integrator
    integ = replace(integ, backend=backend or integ.backend, tol=tol if tol is not None else integ.tol,
                    dt_max=dt_max if dt_max is not None else integ.dt_max)
    spec = replace(spec, integrator=integ)
    start = time.perf_counter()
    basis = spec.basis
    atoms, atom_index, bank_offset = layout(spec)
    psi0 = spec.initial_field().with_atoms(len(atoms))
    times = sample_times(spec)
    traj = evolve(psi0, basis, atoms, Schedule.build(atoms, times), tol=integ.tol, backend=integ.backend,
                  dt_max=integ.dt_max, compensate_shift=integ.compensate_cutoff_shift)
    res = RunResult(spec, basis, diagnostics=traj.diagnostics, initial_energy=field_energy(psi0, basis))

    for o in spec.outputs:
        if isinstance(o, EnergyDensityOutput):
            grid = SpatialGrid.for_basis(basis, o.grid_factor)
            for t in o.times:
                res.energy_density[t] = (grid.points, energy_density_on_grid(traj.at(t), basis, grid))
        elif isinstance(o, ExcitationTraceOutput):
            label = "+".join(o.atoms)
            ts = o.times
            res.trace_times[label] = np.array(ts)
            res.traces[label] = {
                a: np.array([abs(traj.at(t).c_atom[atom_index[a]]) ** 2 for t in ts]) for a in o.atoms
            }
        elif isinstance(o, AnalyzerSpectrumOutput):
            bank = spec.bank(o.bank)
            t_read = _read_time(spec, o)
            state = traj.at(t_read)
            res.spectra[o.name] = analyzer_spectrum(state, bank, bank_offset[o.bank], t_read)
            res.absorption[o.name] = absorbed_energy(state, bank, bank_offset[o.bank]) / res.initial_energy
        elif isinstance(o, ModeSpectrumOutput):
            grid = SpatialGrid.for_basis(basis, o.grid_factor)
            res.spectra[o.name] = filtered_mode_spectrum(traj.at(o.t), basis, o.filter, grid)
        elif isinstance(o, InitialSpectrumOutput):
            res.spectra[o.name] = initial_spectrum(psi0, basis)

    for o in spec.outputs:
        if isinstance(o, ComparisonOutput):
            metrics = compare_normalized(res.spectra[o.analyzer], res.spectra[o.mode])
            res.comparisons[o.name] = ComparisonResult(o.name, o.analyzer, o.mode, o.tol, metrics)
            log.info("comparison %s: L1 = %.4g (tol %.3g)", o.name, metrics.l1, o.tol)
    res.wall_time = time.perf_counter() - start
    return res


def scale_bank_gamma(spec: ExperimentSpec, factor: float) -> ExperimentSpec:
    """Copy of ``spec`` with every analyzer decay constant multiplied by ``factor``."""
    return replace(spec, banks=tuple(replace(b, gamma=b.gamma * factor) for b in spec.banks))
