import json
import math

import numpy as np
import pytest
from scipy.signal import find_peaks

from cavityspec.experiment import layout, run_experiment, sample_times
from cavityspec.scenarios import parse_experiment, render_experiment
from cavityspec.spectra import local_maxima

from conftest import MINI


@pytest.fixture(scope="module")
def mini_spec():
    return parse_experiment(json.dumps(MINI))


def test_layout_order(mini_spec):
    atoms, atom_index, bank_offset = layout(mini_spec)
    assert atom_index == {"center": 0}
    assert bank_offset == {"right": 1}
    assert len(atoms) == 41 and atoms[1].role == "analyzer"


def test_sample_times_cover_outputs(mini_spec):
    ts = sample_times(mini_spec)
    assert {0.0, 2.5, 3.0, 4.0} <= set(ts)
    assert len(ts) == len(set(ts)) and ts == sorted(ts)


def test_mini_run(mini_spec):
    res = run_experiment(mini_spec)
    assert set(res.energy_density) == {0.0, 2.5}
    r, u = res.energy_density[2.5]
    assert r.size == 8 * 200 + 1 and u.min() >= 0
    assert set(res.spectra) == {"right_analyzer", "right_mode", "initial"}
    assert res.traces["center"]["center"].shape == (31,)
    assert res.comparisons["right"].metrics.l1 < 0.1
    assert res.absorption["right_analyzer"] < 0.01
    meta = res.metadata()
    assert meta["experiment"] == json.loads(render_experiment(mini_spec))
    assert meta["state_dimension"] == 241
    assert meta["diagnostics"]["norm_drift_rate"] < 1e-8


def test_integrator_overrides_recorded(mini_spec):
    res = run_experiment(mini_spec, backend="rk4", tol=1e-7)
    assert res.spec.integrator.backend == "rk4" and res.spec.integrator.tol == 1e-7
    assert res.diagnostics.backend == "rk4"
    ref = run_experiment(mini_spec)
    a, b = res.spectra["right_analyzer"], ref.spectra["right_analyzer"]
    assert np.max(np.abs(a.values - b.values)) < 1e-9


def test_metadata_complete(one_atom_run):
    meta = one_atom_run.metadata()
    exp = meta["experiment"]
    assert all(b["gamma"] is not None for b in exp["banks"])
    assert exp["integrator"]["compensate_cutoff_shift"] is True
    assert set(meta["comparisons"]) == {"left", "right_total", "right_peak1", "right_peak2"}
    json.dumps(meta)


def test_three_pulses_at_3_8(one_atom_run):
    r, u = one_atom_run.energy_density[3.8]
    h = r[1] - r[0]
    w = int(round(math.pi / 100 / h))
    env = np.convolve(u, np.ones(w) / w, mode="same")
    peaks, _ = find_peaks(env, height=0.05 * env.max(), prominence=0.05 * env.max())
    assert len(peaks) == 3
    assert (r[peaks] < math.pi).sum() == 1


def test_center_atom_excitation_profile(one_atom_run):
    t = one_atom_run.trace_times["center"]
    p = one_atom_run.traces["center"]["center"]
    i = int(np.argmax(p))
    assert p[i] > 0.01 and 0 < t[i] < 3.8
    # after the pulse has passed the atom relaxes monotonically
    tail = p[t >= t[i] + 0.3]
    assert np.all(np.diff(tail) <= 1e-12)
    assert tail[-1] < 1e-3 * p[i]


def test_group_three_bank_single_peak(one_atom_run):
    s = one_atom_run.normalized("right_peak2_analyzer")
    peaks = local_maxima(s, 0.1)
    assert len(peaks) == 1 and peaks[0] == pytest.approx(100.0, abs=0.5)


def test_right_bank_two_peaks_with_dip(one_atom_run):
    s = one_atom_run.normalized("right_total_analyzer")
    peaks = local_maxima(s, 0.1)
    assert len(peaks) == 2 and peaks[0] < 100 < peaks[1]
