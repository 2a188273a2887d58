import json
import math

import pytest

from cavityspec.experiment import run_experiment, scale_bank_gamma
from cavityspec.scenarios import (scenario_one_atom, scenario_random_photon,
                                  scenario_three_atoms)

# acceptance verdicts, printed at the end of the session
VERDICTS = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(VERDICTS):
        ok, detail = VERDICTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def verdicts():
    return VERDICTS


@pytest.fixture(scope="session")
def one_atom_run():
    return run_experiment(scenario_one_atom())


@pytest.fixture(scope="session")
def three_atoms_run():
    return run_experiment(scenario_three_atoms())


@pytest.fixture(scope="session")
def random_photon_run():
    return run_experiment(scenario_random_photon())


@pytest.fixture(scope="session")
def one_atom_doubled_run():
    return run_experiment(scale_bank_gamma(scenario_one_atom(), 2.0))


MINI = {
    "name": "mini",
    "cavity": {"length": 2 * math.pi, "n_modes": 200},
    "initial_state": {"kind": "gaussian", "k0": 60.0, "sigma_k": 2 * math.pi, "r0": 2.0},
    "atoms": [{"name": "center", "r": math.pi, "omega0": 60.0, "gamma": math.pi}],
    "banks": [{"name": "right", "n_atoms": 40, "omega_min": 50.0, "omega_max": 70.0, "r": 4.5,
               "t_read": 4.0}],
    "outputs": [
        {"kind": "energy_density", "times": [0.0, 2.5]},
        {"kind": "excitation_trace", "atoms": ["center"], "t_start": 0.0, "t_stop": 3.0, "n_samples": 31},
        {"kind": "analyzer_spectrum", "name": "right_analyzer", "bank": "right"},
        {"kind": "mode_spectrum", "name": "right_mode", "filter": {"kind": "boxcar", "r_min": math.pi,
                                                                   "r_max": 2 * math.pi}, "t": 3.0},
        {"kind": "initial_spectrum"},
        {"kind": "comparison", "name": "right", "analyzer": "right_analyzer", "mode": "right_mode",
         "tol": 0.1},
    ],
}


@pytest.fixture
def mini_config(tmp_path):
    p = tmp_path / "mini.json"
    p.write_text(json.dumps(MINI, indent=2))
    return p
