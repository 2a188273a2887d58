"""Declarative experiment descriptions and their JSON codec.

An experiment document has the top-level sections ``cavity``,
``initial_state``, ``atoms``, ``banks``, ``outputs`` and ``integrator``;
the JSON Schema in ``schema/experiment.schema.json`` fixes the key names.
:func:`parse_experiment` materializes every default so that
``render_experiment`` writes a complete, reproducible description.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Union

import jsonschema

from .core import (AtomSpec, GaussianPhotonSpec, ModeBasis, MultiGaussianBounds,
                   build_mode_basis, gaussian_photon_state,
                   random_multi_gaussian_state)
from .errors import (ConfigParseError, ExperimentValidationError,
                     InvalidArgumentError)
from .spectra import AnalyzerBank, SpatialFilter


@dataclass(frozen=True)
class CavityConfig:
    length: float
    n_modes: int


@dataclass(frozen=True)
class GaussianState:
    k0: float
    sigma_k: float
    r0: float
    kind = "gaussian"

    @property
    def photon(self) -> GaussianPhotonSpec:
        return GaussianPhotonSpec(self.k0, self.sigma_k, self.r0)


@dataclass(frozen=True)
class RandomState:
    n_components: int
    seed: int
    k_center: float
    bounds: MultiGaussianBounds = MultiGaussianBounds()
    kind = "random_multi_gaussian"


@dataclass(frozen=True)
class IntegratorConfig:
    backend: str = "eigh"
    tol: float = 1e-8
    dt_max: float | None = None
    compensate_cutoff_shift: bool = True


@dataclass(frozen=True)
class EnergyDensityOutput:
    times: tuple
    grid_factor: int = 8
    kind = "energy_density"


@dataclass(frozen=True)
class ExcitationTraceOutput:
    atoms: tuple
    t_start: float
    t_stop: float
    n_samples: int = 201
    kind = "excitation_trace"

    @property
    def times(self) -> list[float]:
        n = self.n_samples
        return [self.t_start + (self.t_stop - self.t_start) * i / (n - 1) for i in range(n)]


@dataclass(frozen=True)
class AnalyzerSpectrumOutput:
    name: str
    bank: str
    t_read: float | None = None
    kind = "analyzer_spectrum"


@dataclass(frozen=True)
class ModeSpectrumOutput:
    name: str
    filter: SpatialFilter
    t: float
    grid_factor: int = 8
    kind = "mode_spectrum"


@dataclass(frozen=True)
class InitialSpectrumOutput:
    name: str = "initial"
    kind = "initial_spectrum"


@dataclass(frozen=True)
class ComparisonOutput:
    name: str
    analyzer: str
    mode: str
    tol: float = 0.05
    kind = "comparison"


Output = Union[EnergyDensityOutput, ExcitationTraceOutput, AnalyzerSpectrumOutput,
               ModeSpectrumOutput, InitialSpectrumOutput, ComparisonOutput]


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    cavity: CavityConfig
    initial_state: GaussianState | RandomState
    atoms: tuple = ()
    banks: tuple = ()
    outputs: tuple = ()
    integrator: IntegratorConfig = IntegratorConfig()

    @property
    def basis(self) -> ModeBasis:
        return build_mode_basis(self.cavity.length, self.cavity.n_modes)

    def initial_field(self):
        basis = self.basis
        s = self.initial_state
        if isinstance(s, GaussianState):
            return gaussian_photon_state(basis, s.photon)
        return random_multi_gaussian_state(basis, s.n_components, s.seed, s.k_center, s.bounds)

    def bank(self, name: str) -> AnalyzerBank:
        for b in self.banks:
            if b.name == name:
                return b
        raise KeyError(name)

    def outputs_of(self, cls) -> list:
        return [o for o in self.outputs if isinstance(o, cls)]

    @property
    def horizon(self) -> float:
        """Latest time any output needs."""
        ts = [0.0]
        for o in self.outputs:
            if isinstance(o, EnergyDensityOutput):
                ts.extend(o.times)
            elif isinstance(o, ExcitationTraceOutput):
                ts.append(o.t_stop)
            elif isinstance(o, AnalyzerSpectrumOutput):
                ts.append(o.t_read if o.t_read is not None else self.bank(o.bank).t_read)
            elif isinstance(o, ModeSpectrumOutput):
                ts.append(o.t)
        return max(ts)


def validate(spec: ExperimentSpec) -> ExperimentSpec:
    """Check physical consistency; raise :class:`ExperimentValidationError` naming the field."""
    L = spec.cavity.length
    try:
        basis = spec.basis
    except InvalidArgumentError as e:
        raise ExperimentValidationError("cavity", str(e)) from None
    try:
        spec.initial_field()
    except InvalidArgumentError as e:
        raise ExperimentValidationError("initial_state", str(e)) from None
    names = set()
    for i, a in enumerate(spec.atoms):
        if not 0 < a.r < L:
            raise ExperimentValidationError(f"atoms[{i}].r", f"position {a.r} outside the cavity (0, {L})")
        if not basis.omega[0] < a.omega0 < basis.omega[-1]:
            raise ExperimentValidationError(f"atoms[{i}].omega0", f"{a.omega0} outside the mode band")
        if a.name in names:
            raise ExperimentValidationError(f"atoms[{i}].name", f"duplicate name {a.name!r}")
        names.add(a.name)
    for i, b in enumerate(spec.banks):
        if not 0 < b.r < L:
            raise ExperimentValidationError(f"banks[{i}].r", f"position {b.r} outside the cavity (0, {L})")
        if not (basis.omega[0] < b.omega_min and b.omega_max < basis.omega[-1]):
            raise ExperimentValidationError(f"banks[{i}]", "comb outside the mode band")
        if b.name in names:
            raise ExperimentValidationError(f"banks[{i}].name", f"duplicate name {b.name!r}")
        names.add(b.name)
    if not spec.outputs:
        raise ExperimentValidationError("outputs", "at least one output must be requested")
    bank_names = {b.name for b in spec.banks}
    spectra = {}
    for i, o in enumerate(spec.outputs):
        where = f"outputs[{i}]"
        if isinstance(o, ExcitationTraceOutput):
            for a in o.atoms:
                if a not in names:
                    raise ExperimentValidationError(f"{where}.atoms", f"unknown atom {a!r}")
            if not o.t_start < o.t_stop or o.n_samples < 2:
                raise ExperimentValidationError(where, "trace needs t_start < t_stop and n_samples >= 2")
        elif isinstance(o, AnalyzerSpectrumOutput):
            if o.bank not in bank_names:
                raise ExperimentValidationError(f"{where}.bank", f"unknown bank {o.bank!r}")
            b = spec.bank(o.bank)
            if o.t_read is not None and o.t_read <= b.t_on:
                raise ExperimentValidationError(f"{where}.t_read", "readout before the bank is switched on")
            spectra[o.name] = o
        elif isinstance(o, ModeSpectrumOutput):
            if o.grid_factor < 4:
                raise ExperimentValidationError(f"{where}.grid_factor", "need at least 4 grid points per mode")
            try:
                o.filter.check(L)
            except InvalidArgumentError as e:
                raise ExperimentValidationError(f"{where}.filter", str(e)) from None
            spectra[o.name] = o
        elif isinstance(o, InitialSpectrumOutput):
            spectra[o.name] = o
        elif isinstance(o, EnergyDensityOutput):
            if any(t < 0 for t in o.times):
                raise ExperimentValidationError(f"{where}.times", "negative snapshot time")
    for i, o in enumerate(spec.outputs):
        if isinstance(o, ComparisonOutput):
            for key in ("analyzer", "mode"):
                ref = getattr(o, key)
                if ref not in spectra:
                    raise ExperimentValidationError(f"outputs[{i}].{key}", f"unknown spectrum {ref!r}")
            if not isinstance(spectra[o.analyzer], AnalyzerSpectrumOutput):
                raise ExperimentValidationError(f"outputs[{i}].analyzer", "must name an analyzer spectrum")
    if spec.integrator.backend not in ("eigh", "rk4"):
        raise ExperimentValidationError("integrator.backend", f"unknown backend {spec.integrator.backend!r}")
    return spec


# ---------------------------------------------------------------------------
# built-in scenarios
# ---------------------------------------------------------------------------

def passage_time(r: float, photon: GaussianPhotonSpec, n_sigma: float = 3.0) -> float:
    """Time at which a free Gaussian pulse has passed position ``r`` by ``n_sigma`` widths."""
    return (r - photon.r0) + n_sigma * photon.sigma_x


def _comparison_block(label, bank, t_read, filt, t_mode, tol=0.05):
    return (
        AnalyzerSpectrumOutput(f"{label}_analyzer", bank, t_read),
        ModeSpectrumOutput(f"{label}_mode", filt, t_mode),
        ComparisonOutput(label, f"{label}_analyzer", f"{label}_mode", tol),
    )


def scenario_one_atom() -> ExperimentSpec:
    """Gaussian photon split by one resonant atom at the cavity centre.

    L = 2 pi, 400 modes, photon k0 = 100, sigma_k = 2 pi, r0 = 2; atom at
    L/2 with omega0 = 100, gamma = pi.  Three 200-atom banks: one at r = 1.8
    switched on at t = 1.5 for the reflected light, two at L/2 + 1 for the
    transmitted light (one always on, one switched on once the first
    transmitted peak has passed).
    """
    L = 2 * math.pi
    photon = GaussianPhotonSpec(100.0, 2 * math.pi, 2.0)
    center = L / 2
    r_right = center + 1.0
    t_late = passage_time(r_right, photon)
    t_read = 5.5
    t_mode = 3.8
    comb = dict(n_atoms=200, omega_min=80.0, omega_max=120.0)
    banks = (
        AnalyzerBank(r=1.8, t_on=1.5, t_read=t_read, name="left", **comb),
        AnalyzerBank(r=r_right, t_on=0.0, t_read=t_read, name="right", **comb),
        AnalyzerBank(r=r_right, t_on=t_late, t_read=t_read, name="right_late", **comb),
    )
    # light that passed r_right before t_late sits beyond this point at t_mode
    cut = r_right + (t_mode - t_late)
    outputs = (
        EnergyDensityOutput((0.0, 3.8)),
        ExcitationTraceOutput(("center",), 0.0, 3.8, 191),
        InitialSpectrumOutput("initial"),
        *_comparison_block("left", "left", None, SpatialFilter.boxcar(0.0, center), t_mode),
        *_comparison_block("right_total", "right", None, SpatialFilter.boxcar(center, L), t_mode),
        *_comparison_block("right_peak1", "right", t_late, SpatialFilter.boxcar(cut, L), t_mode),
        *_comparison_block("right_peak2", "right_late", None, SpatialFilter.boxcar(center, cut), t_mode),
    )
    return ExperimentSpec(
        "one_atom",
        CavityConfig(L, 400),
        GaussianState(photon.k0, photon.sigma_k, photon.r0),
        atoms=(AtomSpec(center, 100.0, math.pi, ((0.0, math.inf),), "scatterer", "center"),),
        banks=banks,
        outputs=outputs,
    )


def _scaled_geometry():
    L = 8 * math.pi
    center = L / 2
    return L, center, 7.2, center + 4.0


def scenario_three_atoms(n_modes: int = 1600) -> ExperimentSpec:
    """Broad Gaussian photon on three co-located atoms (90, pi), (100, pi), (110, pi/4).

    The one-atom geometry scaled by four: L = 8 pi, r0 = 8, left bank at
    7.2 switched on at t = 6, right bank at L/2 + 4.  ``n_modes`` must keep
    the band edge ``n_modes / 8`` well above the photon support (k up to
    about 163).
    """
    L, center, r_left, r_right = _scaled_geometry()
    photon = GaussianPhotonSpec(100.0, 4 * math.pi, 8.0)
    comb = dict(n_atoms=200, omega_min=80.0, omega_max=120.0)
    t_read, t_mode = 22.0, 16.5
    always = ((0.0, math.inf),)
    atoms = (
        AtomSpec(center, 90.0, math.pi, always, "scatterer", "center90"),
        AtomSpec(center, 100.0, math.pi, always, "scatterer", "center100"),
        AtomSpec(center, 110.0, math.pi / 4, always, "scatterer", "center110"),
    )
    banks = (
        AnalyzerBank(r=r_left, t_on=6.0, t_read=t_read, name="left", **comb),
        AnalyzerBank(r=r_right, t_on=0.0, t_read=t_read, name="right", **comb),
    )
    outputs = (
        EnergyDensityOutput((0.0, 8.0, 16.5)),
        ExcitationTraceOutput(("center90", "center100", "center110"), 0.0, 16.5, 166),
        InitialSpectrumOutput("initial"),
        *_comparison_block("left", "left", None, SpatialFilter.boxcar(0.0, center), t_mode),
        *_comparison_block("right", "right", None, SpatialFilter.boxcar(center, L), t_mode),
    )
    return ExperimentSpec("three_atoms", CavityConfig(L, n_modes),
                          GaussianState(photon.k0, photon.sigma_k, photon.r0),
                          atoms=atoms, banks=banks, outputs=outputs)


def scenario_random_photon(seed: int = 2, n_modes: int = 1600) -> ExperimentSpec:
    """Ten seeded random Gaussian components centred on k = 100, one atom at L/2.

    Components draw k0 in 100 +- 10, sigma_k in [1.5, 3] and r0 in [3, 6]
    (left quarter of L = 8 pi).  The centre atom has omega0 = 100 and
    gamma = pi.
    """
    L, center, r_left, r_right = _scaled_geometry()
    comb = dict(n_atoms=200, omega_min=75.0, omega_max=125.0)
    t_read, t_mode = 22.0, 17.0
    banks = (
        AnalyzerBank(r=r_left, t_on=6.0, t_read=t_read, name="left", **comb),
        AnalyzerBank(r=r_right, t_on=0.0, t_read=t_read, name="right", **comb),
    )
    outputs = (
        EnergyDensityOutput((0.0, 10.0, 17.0)),
        ExcitationTraceOutput(("center",), 0.0, 17.0, 171),
        InitialSpectrumOutput("initial"),
        ModeSpectrumOutput("full_mode", SpatialFilter.unit(), t_mode),
        *_comparison_block("left", "left", None, SpatialFilter.boxcar(0.0, center), t_mode),
        *_comparison_block("right", "right", None, SpatialFilter.boxcar(center, L), t_mode),
    )
    return ExperimentSpec(
        "random_photon",
        CavityConfig(L, n_modes),
        RandomState(10, int(seed), 100.0, MultiGaussianBounds(10.0, (1.5, 3.0), (3.0, 6.0))),
        atoms=(AtomSpec(center, 100.0, math.pi, ((0.0, math.inf),), "scatterer", "center"),),
        banks=banks,
        outputs=outputs,
    )


SCENARIOS = {
    "one_atom": scenario_one_atom,
    "three_atoms": scenario_three_atoms,
    "random_photon": scenario_random_photon,
}


# ---------------------------------------------------------------------------
# JSON codec
# ---------------------------------------------------------------------------

def load_schema() -> dict:
    text = resources.files("cavityspec").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


def _num(x):
    return None if x is None or x == math.inf else x


def _interval(a, b):
    return [a, None if b == math.inf else b]


def _filter_to_dict(f: SpatialFilter) -> dict:
    if f.kind == "unit":
        return {"kind": "unit"}
    if f.kind == "gaussian":
        return {"kind": "gaussian", "center": f.center, "sigma": f.sigma}
    return {"kind": "boxcar", "r_min": f.r_min, "r_max": f.r_max}


def _output_to_dict(o) -> dict:
    d = {"kind": o.kind}
    if isinstance(o, EnergyDensityOutput):
        d.update(times=list(o.times), grid_factor=o.grid_factor)
    elif isinstance(o, ExcitationTraceOutput):
        d.update(atoms=list(o.atoms), t_start=o.t_start, t_stop=o.t_stop, n_samples=o.n_samples)
    elif isinstance(o, AnalyzerSpectrumOutput):
        d.update(name=o.name, bank=o.bank, t_read=o.t_read)
    elif isinstance(o, ModeSpectrumOutput):
        d.update(name=o.name, filter=_filter_to_dict(o.filter), t=o.t, grid_factor=o.grid_factor)
    elif isinstance(o, InitialSpectrumOutput):
        d.update(name=o.name)
    elif isinstance(o, ComparisonOutput):
        d.update(name=o.name, analyzer=o.analyzer, mode=o.mode, tol=o.tol)
    return d


def experiment_to_dict(spec: ExperimentSpec) -> dict:
    s = spec.initial_state
    if isinstance(s, GaussianState):
        init = {"kind": "gaussian", "k0": s.k0, "sigma_k": s.sigma_k, "r0": s.r0}
    else:
        init = {
            "kind": "random_multi_gaussian",
            "n_components": s.n_components,
            "seed": s.seed,
            "k_center": s.k_center,
            "bounds": {"k0_spread": s.bounds.k0_spread, "sigma_k": list(s.bounds.sigma_k),
                       "r0": list(s.bounds.r0)},
        }
    return {
        "name": spec.name,
        "cavity": {"length": spec.cavity.length, "n_modes": spec.cavity.n_modes},
        "initial_state": init,
        "atoms": [
            {"name": a.name, "r": a.r, "omega0": a.omega0, "gamma": a.gamma,
             "schedule": [_interval(*iv) for iv in a.schedule]}
            for a in spec.atoms
        ],
        "banks": [
            {"name": b.name, "n_atoms": b.n_atoms, "omega_min": b.omega_min, "omega_max": b.omega_max,
             "r": b.r, "gamma": b.gamma, "t_on": b.t_on, "t_read": b.t_read}
            for b in spec.banks
        ],
        "outputs": [_output_to_dict(o) for o in spec.outputs],
        "integrator": {"backend": spec.integrator.backend, "tol": spec.integrator.tol,
                       "dt_max": spec.integrator.dt_max,
                       "compensate_cutoff_shift": spec.integrator.compensate_cutoff_shift},
    }


def render_experiment(spec: ExperimentSpec) -> str:
    return json.dumps(experiment_to_dict(spec), indent=2)


def _filter_from_dict(d) -> SpatialFilter:
    if d["kind"] == "unit":
        return SpatialFilter.unit()
    if d["kind"] == "gaussian":
        return SpatialFilter.gaussian(d["center"], d["sigma"])
    return SpatialFilter.boxcar(d["r_min"], d["r_max"])


def _output_from_dict(d):
    kind = d["kind"]
    if kind == "energy_density":
        return EnergyDensityOutput(tuple(float(t) for t in d["times"]), d.get("grid_factor", 8))
    if kind == "excitation_trace":
        return ExcitationTraceOutput(tuple(d["atoms"]), float(d["t_start"]), float(d["t_stop"]),
                                     d.get("n_samples", 201))
    if kind == "analyzer_spectrum":
        t = d.get("t_read")
        return AnalyzerSpectrumOutput(d["name"], d["bank"], None if t is None else float(t))
    if kind == "mode_spectrum":
        return ModeSpectrumOutput(d["name"], _filter_from_dict(d["filter"]), float(d["t"]),
                                  d.get("grid_factor", 8))
    if kind == "initial_spectrum":
        return InitialSpectrumOutput(d.get("name", "initial"))
    return ComparisonOutput(d["name"], d["analyzer"], d["mode"], float(d.get("tol", 0.05)))


def _build(doc: dict) -> ExperimentSpec:
    cav = CavityConfig(float(doc["cavity"]["length"]), int(doc["cavity"]["n_modes"]))
    init = doc["initial_state"]
    if init["kind"] == "gaussian":
        state = GaussianState(float(init["k0"]), float(init["sigma_k"]), float(init["r0"]))
    else:
        b = init.get("bounds", {})
        default = MultiGaussianBounds()
        bounds = MultiGaussianBounds(float(b.get("k0_spread", default.k0_spread)),
                                     tuple(b.get("sigma_k", default.sigma_k)),
                                     tuple(b.get("r0", default.r0)))
        state = RandomState(int(init["n_components"]), int(init["seed"]), float(init["k_center"]), bounds)
    atoms = []
    for i, a in enumerate(doc.get("atoms", [])):
        sched = tuple((float(on), math.inf if off is None else float(off))
                      for on, off in a.get("schedule", [[0.0, None]]))
        try:
            atoms.append(AtomSpec(float(a["r"]), float(a["omega0"]), float(a["gamma"]), sched,
                                  "scatterer", a.get("name", f"atom{i}")))
        except InvalidArgumentError as e:
            raise ExperimentValidationError(f"atoms[{i}]", str(e)) from None
    banks = []
    for i, b in enumerate(doc.get("banks", [])):
        g = b.get("gamma")
        try:
            banks.append(AnalyzerBank(int(b["n_atoms"]), float(b["omega_min"]), float(b["omega_max"]),
                                      float(b["r"]), float(b["t_read"]), None if g is None else float(g),
                                      float(b.get("t_on", 0.0)), b["name"]))
        except InvalidArgumentError as e:
            raise ExperimentValidationError(f"banks[{i}]", str(e)) from None
    outputs = []
    for i, o in enumerate(doc.get("outputs", [])):
        try:
            outputs.append(_output_from_dict(o))
        except InvalidArgumentError as e:
            raise ExperimentValidationError(f"outputs[{i}]", str(e)) from None
    integ = doc.get("integrator", {})
    default = IntegratorConfig()
    dt = integ.get("dt_max")
    integrator = IntegratorConfig(integ.get("backend", default.backend), float(integ.get("tol", default.tol)),
                                  None if dt is None else float(dt),
                                  bool(integ.get("compensate_cutoff_shift", default.compensate_cutoff_shift)))
    return ExperimentSpec(doc.get("name", "experiment"), cav, state, tuple(atoms), tuple(banks),
                          tuple(outputs), integrator)


def parse_experiment(text: str) -> ExperimentSpec:
    """Parse and validate a JSON experiment document.

    Raises
    ------
    ConfigParseError
        Malformed JSON (with line/column) or a schema violation (with the
        offending key path).
    ExperimentValidationError
        Physically inconsistent values, e.g. an atom outside the cavity.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise ConfigParseError(f"{path.lstrip('.') or '<root>'}: {err.message}")
    return validate(_build(doc))
