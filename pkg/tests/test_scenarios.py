import json
import math

import jsonschema
import numpy as np
import pytest

from cavityspec.errors import ConfigParseError, ExperimentValidationError
from cavityspec.experiment import layout
from cavityspec.observables import SpatialGrid, energy_density_on_grid
from cavityspec.scenarios import (SCENARIOS, ComparisonOutput, EnergyDensityOutput,
                                  GaussianState, RandomState, experiment_to_dict,
                                  load_schema, parse_experiment, passage_time,
                                  render_experiment, scenario_one_atom,
                                  scenario_random_photon, scenario_three_atoms, validate)

MINIMAL = {
    "cavity": {"length": 6.283185307179586, "n_modes": 400},
    "initial_state": {"kind": "gaussian", "k0": 100.0, "sigma_k": 6.283185307179586, "r0": 2.0},
    "atoms": [{"name": "a", "r": 3.14, "omega0": 100.0, "gamma": 3.14}],
    "banks": [{"name": "b", "n_atoms": 200, "omega_min": 80.0, "omega_max": 120.0, "r": 4.0, "t_read": 5.0}],
    "outputs": [{"kind": "analyzer_spectrum", "name": "s", "bank": "b"}],
}


def doc(**changes):
    d = json.loads(json.dumps(MINIMAL))
    d.update(changes)
    return d


def test_one_atom_layout():
    spec = validate(scenario_one_atom())
    assert spec.cavity.length == pytest.approx(2 * math.pi) and spec.cavity.n_modes == 400
    assert len(spec.atoms) == 1 and len(spec.banks) == 3
    assert all(b.n_atoms == 200 for b in spec.banks)
    atoms, _, _ = layout(spec)
    assert len(atoms) == 601
    (snap,) = spec.outputs_of(EnergyDensityOutput)
    assert set(snap.times) == {0.0, 3.8}
    center = spec.atoms[0]
    assert (center.r, center.omega0, center.gamma) == (math.pi, 100.0, math.pi)
    assert isinstance(spec.initial_state, GaussianState)
    assert (spec.initial_state.k0, spec.initial_state.sigma_k, spec.initial_state.r0) == (100.0, 2 * math.pi, 2.0)
    left = spec.bank("left")
    assert (left.r, left.t_on) == (1.8, 1.5)
    assert spec.bank("right").r == pytest.approx(math.pi + 1)
    assert {c.name for c in spec.outputs_of(ComparisonOutput)} == {"left", "right_total", "right_peak1", "right_peak2"}


def test_group_three_activation_time():
    spec = scenario_one_atom()
    photon = spec.initial_state.photon
    late = spec.bank("right_late")
    assert late.t_on == pytest.approx(passage_time(late.r, photon))
    assert late.t_on == pytest.approx((math.pi + 1 - 2.0) + 3 / (2 * 2 * math.pi))


def test_three_atoms():
    spec = validate(scenario_three_atoms())
    pairs = {(a.omega0, a.gamma) for a in spec.atoms}
    assert pairs == {(90.0, math.pi), (100.0, math.pi), (110.0, math.pi / 4)}
    assert len({a.r for a in spec.atoms}) == 1
    assert spec.cavity.n_modes == 1600 and spec.cavity.length == pytest.approx(8 * math.pi)
    assert spec.initial_state.sigma_k == pytest.approx(4 * math.pi)
    assert scenario_three_atoms(800).cavity.n_modes == 800


def test_random_photon_deterministic():
    assert scenario_random_photon(11) == scenario_random_photon(11)
    a = scenario_random_photon(11).initial_field()
    b = scenario_random_photon(11).initial_field()
    np.testing.assert_array_equal(a.c_mode, b.c_mode)
    spec = validate(scenario_random_photon())
    assert isinstance(spec.initial_state, RandomState) and spec.initial_state.n_components == 10
    assert [(a.omega0, a.gamma) for a in spec.atoms] == [(100.0, math.pi)]


@pytest.mark.parametrize("seed", [2, 42, 123])
def test_random_photon_starts_left_of_centre(seed):
    spec = scenario_random_photon(seed)
    basis = spec.basis
    psi = spec.initial_field()
    grid = SpatialGrid.for_basis(basis, 4)
    u = energy_density_on_grid(psi, basis, grid)
    right = grid.points > basis.L / 2
    assert np.sum((u * grid.weights)[right]) < 1e-3 * np.sum(u * grid.weights)


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_builtin_roundtrip(name):
    spec = SCENARIOS[name]()
    text = render_experiment(spec)
    jsonschema.validate(json.loads(text), load_schema())
    assert parse_experiment(text) == spec
    assert render_experiment(parse_experiment(text)) == text


def test_defaults_materialized():
    spec = parse_experiment(json.dumps(MINIMAL))
    bank = spec.banks[0]
    assert bank.gamma == pytest.approx(bank.delta_omega / 400)
    assert bank.t_on == 0.0
    assert spec.atoms[0].schedule == ((0.0, math.inf),)
    assert spec.integrator.backend == "eigh" and spec.integrator.compensate_cutoff_shift
    out = experiment_to_dict(spec)
    assert out["banks"][0]["gamma"] == pytest.approx(40 / 199 / 400)
    assert out["atoms"][0]["schedule"] == [[0.0, None]]
    assert out["outputs"][0]["t_read"] is None
    assert out["integrator"] == {"backend": "eigh", "tol": 1e-8, "dt_max": None, "compensate_cutoff_shift": True}


def test_atom_outside_cavity():
    d = doc(atoms=[{"name": "a", "r": -1.0, "omega0": 100.0, "gamma": 1.0}])
    with pytest.raises(ExperimentValidationError) as e:
        parse_experiment(json.dumps(d))
    assert e.value.field == "atoms[0].r"


def test_unknown_key_rejected():
    d = doc(cavity={"length": 6.28, "n_modes": 400, "colour": "blue"})
    with pytest.raises(ConfigParseError, match="cavity.*colour"):
        parse_experiment(json.dumps(d))


def test_schema_error_names_key():
    d = doc(banks=[{"name": "b", "n_atoms": "many", "omega_min": 80.0, "omega_max": 120.0, "r": 4.0,
                    "t_read": 5.0}])
    with pytest.raises(ConfigParseError, match=r"banks\[0\]\.n_atoms"):
        parse_experiment(json.dumps(d))


def test_malformed_json_reports_line():
    text = json.dumps(MINIMAL, indent=2).replace('"n_modes": 400', '"n_modes": 400,,')
    with pytest.raises(ConfigParseError, match="line 4"):
        parse_experiment(text)


@pytest.mark.parametrize("change,field", [
    (dict(outputs=[]), None),
    (dict(outputs=[{"kind": "analyzer_spectrum", "name": "s", "bank": "nope"}]), "outputs[0].bank"),
    (dict(outputs=[{"kind": "excitation_trace", "atoms": ["ghost"], "t_start": 0, "t_stop": 1}]),
     "outputs[0].atoms"),
    (dict(outputs=[{"kind": "comparison", "name": "c", "analyzer": "x", "mode": "y"}]), "outputs[0].analyzer"),
    (dict(banks=[{"name": "b", "n_atoms": 200, "omega_min": 80.0, "omega_max": 120.0, "r": 9.0,
                  "t_read": 5.0}]), "banks[0].r"),
    (dict(atoms=[{"name": "a", "r": 1.0, "omega0": 250.0, "gamma": 1.0}]), "atoms[0].omega0"),
    (dict(initial_state={"kind": "gaussian", "k0": 190.0, "sigma_k": 6.0, "r0": 2.0}), "initial_state"),
    (dict(atoms=[{"name": "b", "r": 1.0, "omega0": 100.0, "gamma": 1.0}]), "banks[0].name"),
])
def test_physics_validation(change, field):
    with pytest.raises((ExperimentValidationError, ConfigParseError)) as e:
        parse_experiment(json.dumps(doc(**change)))
    if field is not None:
        assert e.value.field == field


def test_seed_serialized():
    spec = scenario_random_photon(77)
    d = json.loads(render_experiment(spec))
    assert d["initial_state"]["seed"] == 77
    assert d["initial_state"]["bounds"] == {"k0_spread": 10.0, "sigma_k": [1.5, 3.0], "r0": [3.0, 6.0]}
