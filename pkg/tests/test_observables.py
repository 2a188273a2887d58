import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavityspec.core import (AtomSpec, GaussianPhotonSpec, SingleExcitationState,
                             build_mode_basis, gaussian_photon_state)
from cavityspec.dynamics import evolve, field_energy
from cavityspec.errors import DegenerateFieldError, InvalidArgumentError
from cavityspec.observables import (CorrelationField, SpatialGrid, T_on_grid, corr_B,
                                    corr_E, corr_W, energy_density, energy_density_on_grid,
                                    eval_T, reconstruct_from_T, reconstruct_products_from_W,
                                    sine_projection, sine_synthesis)
from cavityspec.spectra import SpatialFilter, apply_filter


def random_state(n_modes, seed, n_atoms=0):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    return SingleExcitationState(c / np.linalg.norm(c), np.zeros(n_atoms))


@pytest.fixture(scope="module")
def basis():
    return build_mode_basis(2 * math.pi, 400)


@pytest.fixture(scope="module")
def photon(basis):
    return gaussian_photon_state(basis, GaussianPhotonSpec(100.0, 2 * math.pi, 2.0))


@pytest.fixture(scope="module")
def scattered(basis, photon):
    """The one-atom setup at t = 3.8 (field plus one excited-state amplitude)."""
    atoms = [AtomSpec(math.pi, 100.0, math.pi)]
    return evolve(photon.with_atoms(1), basis, atoms, [3.8]).states[0]


def test_T_single_mode_closed_form():
    b = build_mode_basis(math.pi, 3)
    psi = SingleExcitationState([1, 0, 0], [])
    r = np.linspace(0, math.pi, 17)
    np.testing.assert_allclose(eval_T(psi, b, r), math.sqrt(1 / math.pi) * np.sin(r), atol=1e-15)
    assert isinstance(eval_T(psi, b, 0.5), complex)


def test_T_vanishes_at_mirrors(basis):
    psi = random_state(400, 1)
    assert abs(eval_T(psi, basis, 0.0)) < 1e-12
    assert abs(eval_T(psi, basis, basis.L)) < 1e-10


def test_T_synthesis_matches_direct_sum(basis):
    psi = random_state(400, 2)
    grid = SpatialGrid.for_basis(basis, 4)
    np.testing.assert_allclose(T_on_grid(psi, basis, grid), eval_T(psi, basis, grid.points), atol=1e-11)


def test_sine_projection_matches_trapezoid():
    b = build_mode_basis(1.7, 30)
    grid = SpatialGrid.for_basis(b, 4)
    f = np.exp(-((grid.points - 0.6) ** 2) / 0.02) * (1 + 0.3j)
    direct = (b.mode_functions(grid.points) * grid.weights[:, None]).T @ f
    np.testing.assert_allclose(sine_projection(f, grid, 30), direct, atol=1e-13)


def test_sine_transforms_reject_coarse_grid():
    with pytest.raises(InvalidArgumentError):
        sine_synthesis(np.ones(10), SpatialGrid(1.0, 10))
    with pytest.raises(InvalidArgumentError):
        sine_projection(np.ones(10), SpatialGrid(1.0, 10), 10)


def test_grid_checks(basis):
    with pytest.raises(InvalidArgumentError):
        SpatialGrid(1.0, 2)
    with pytest.raises(InvalidArgumentError):
        SpatialGrid(basis.L, 3 * 400).check(basis)
    with pytest.raises(InvalidArgumentError):
        SpatialGrid(1.0, 8 * 400 + 1).check(basis)
    g = SpatialGrid.for_basis(basis)
    assert g.n_points == 3201 and g.points[0] == 0.0 and g.points[-1] == basis.L
    assert g.weights.sum() == pytest.approx(basis.L)


def test_corr_E_properties(basis):
    psi = random_state(400, 3)
    r1, r2 = 1.1, 4.2
    assert corr_E(psi, basis, r1, r2) == pytest.approx(corr_E(psi, basis, r2, r1), abs=1e-15)
    assert corr_E(psi, basis, r1, r1) == pytest.approx(2 * abs(eval_T(psi, basis, r1)) ** 2)
    assert corr_E(psi, basis, r1, r1) >= 0
    b = build_mode_basis(2.0, 5)
    one = SingleExcitationState([1, 0, 0, 0, 0], [])
    w1 = b.omega[0]
    expected = 2 * (w1 / 2.0) * math.sin(b.k[0] * 0.3) * math.sin(b.k[0] * 1.4)
    assert corr_E(one, b, 0.3, 1.4) == pytest.approx(expected, rel=1e-14)


def test_corr_B_properties(basis):
    psi = random_state(400, 4)
    assert corr_B(psi, basis, 2.0, 2.0) == 0
    v = corr_B(psi, basis, 1.0, 3.0)
    assert v == pytest.approx(-corr_B(psi, basis, 3.0, 1.0), abs=1e-15)
    assert abs(v.real) < 1e-15
    real = SingleExcitationState(np.abs(psi.c_mode), [])
    r = np.linspace(0.1, 6.0, 9)
    assert max(abs(corr_B(real, basis, a, b)) for a in r for b in r) < 1e-14


def test_W_views_consistent(basis):
    psi = random_state(400, 5)
    grid = SpatialGrid.for_basis(basis, 4)
    W = corr_W(psi, basis, grid)
    idx = np.random.default_rng(0).integers(0, grid.n_points, size=(20, 2))
    for i, j in idx:
        r1, r2 = grid.points[i], grid.points[j]
        scale = 2 * np.max(np.abs(W.diagonal))
        assert abs(W.E_view[i, j] - corr_E(psi, basis, r1, r2)) < 1e-12 * scale
        assert abs(W.B_view[i, j] - corr_B(psi, basis, r1, r2)) < 1e-12 * scale


def test_W_hermitian_rank_one_and_diagonal(basis, scattered):
    grid = SpatialGrid.for_basis(basis, 4)
    W = corr_W(scattered, basis, grid)
    M = W.values
    assert np.max(np.abs(M - M.conj().T)) == 0.0
    np.testing.assert_allclose(W.diagonal, np.abs(eval_T(scattered, basis, grid.points)) ** 2, atol=1e-10)
    rng = np.random.default_rng(1)
    scale = np.max(np.abs(M)) ** 2
    for _ in range(500):
        i, j = rng.choice(grid.n_points, 2, replace=False)
        k, l = rng.choice(grid.n_points, 2, replace=False)
        minor = M[i, k] * M[j, l] - M[i, l] * M[j, k]
        assert abs(minor) < 1e-10 * scale


def test_correlation_field_needs_data(basis):
    with pytest.raises(InvalidArgumentError):
        CorrelationField(SpatialGrid.for_basis(basis))


def test_energy_density_parseval(basis, photon, scattered):
    grid = SpatialGrid.for_basis(basis)
    for psi in (photon, scattered, random_state(400, 6)):
        u = energy_density_on_grid(psi, basis, grid)
        integral = np.sum(u * grid.weights)
        assert integral == pytest.approx(field_energy(psi, basis), rel=1e-6)
        u2 = energy_density(psi, basis, grid.points[::97])
        np.testing.assert_allclose(u2, u[::97], rtol=1e-9, atol=1e-12)


def test_energy_density_empty_field(basis):
    psi = SingleExcitationState(np.zeros(400), [1.0])
    assert not energy_density_on_grid(psi, basis, SpatialGrid.for_basis(basis)).any()


def test_energy_density_three_pulses(basis, scattered):
    from scipy.signal import find_peaks

    grid = SpatialGrid.for_basis(basis, 8)
    u = energy_density_on_grid(scattered, basis, grid)
    # carrier ripple has period pi/100; average it out over one period
    w = int(round(math.pi / 100 / grid.spacing))
    env = np.convolve(u, np.ones(w) / w, mode="same")
    peaks, _ = find_peaks(env, height=0.05 * env.max(), prominence=0.05 * env.max())
    assert len(peaks) == 3
    left = grid.points[peaks] < math.pi
    assert left.sum() == 1 and (~left).sum() == 2


def test_reconstruct_from_T_roundtrip(basis, photon):
    grid = SpatialGrid.for_basis(basis, 8)
    c = reconstruct_from_T(photon, basis, grid)
    assert np.max(np.abs(c - photon.c_mode)) < 1e-6


def test_reconstruct_from_T_single_mode():
    b = build_mode_basis(math.pi, 8)
    psi = SingleExcitationState(np.eye(8)[5], [])
    c = reconstruct_from_T(psi, b, SpatialGrid.for_basis(b))
    np.testing.assert_allclose(c, psi.c_mode, atol=1e-14)


def test_reconstruction_error_shrinks_with_grid(basis, photon):
    # exact in exact arithmetic for band-limited T, so errors stay at roundoff
    errs = []
    for factor in (4, 8, 16):
        c = reconstruct_from_T(photon, basis, SpatialGrid.for_basis(basis, factor))
        errs.append(np.max(np.abs(c - photon.c_mode)))
    assert all(e < 1e-12 for e in errs)


def test_filtered_quadrature_converges_with_grid(basis, scattered):
    # a smooth window makes the integrand non-band-limited; refining the
    # grid must converge monotonically to the fine-grid limit
    filt = SpatialFilter.gaussian(1.5, 0.4)

    def power(factor):
        grid = SpatialGrid.for_basis(basis, factor)
        f = apply_filter(corr_W(scattered, basis, grid), filt)
        return reconstruct_products_from_W(f, basis).power

    ref = power(64)
    errs = [np.sum(np.abs(power(f) - ref)) for f in (4, 8, 16)]
    assert errs[0] >= errs[1] >= errs[2]
    assert errs[-1] < 1e-6 * ref.sum()


def test_reconstruct_from_W_unit_filter(basis, scattered):
    grid = SpatialGrid.for_basis(basis, 8)
    rec = reconstruct_products_from_W(corr_W(scattered, basis, grid), basis)
    p = np.abs(scattered.c_mode) ** 2
    assert np.sum(np.abs(rec.power - p)) < 1e-6
    assert rec.reference == 0
    assert rec.amplitudes[0].imag == 0 and rec.amplitudes[0].real > 0
    # normalization as a consistency check
    total = rec.power.sum() + np.sum(np.abs(scattered.c_atom) ** 2)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_W_and_T_paths_agree(basis, scattered):
    grid = SpatialGrid.for_basis(basis, 8)
    from_T = np.abs(reconstruct_from_T(scattered, basis, grid)) ** 2
    from_W = reconstruct_products_from_W(corr_W(scattered, basis, grid), basis).power
    assert np.sum(np.abs(from_T - from_W)) < 1e-6


def test_dense_path_matches_factor_path():
    b = build_mode_basis(2 * math.pi, 60)
    psi = gaussian_photon_state(b, GaussianPhotonSpec(15.0, 2.0, 2.0))
    grid = SpatialGrid.for_basis(b, 8)
    W = corr_W(psi, b, grid)
    filt = SpatialFilter.boxcar(1.0, 4.0)
    fast = reconstruct_products_from_W(apply_filter(W, filt), b)
    dense = reconstruct_products_from_W(apply_filter(CorrelationField(grid, dense=W.values), filt), b,
                                        use_factor=False)
    np.testing.assert_allclose(dense.products, fast.products, atol=1e-12)
    full = reconstruct_products_from_W(CorrelationField(grid, dense=W.values), b, use_factor=False)
    assert np.sum(np.abs(full.power - np.abs(psi.c_mode) ** 2)) < 1e-6


def test_dense_path_rejects_non_hermitian():
    b = build_mode_basis(1.0, 4)
    grid = SpatialGrid.for_basis(b, 8)
    M = np.zeros((grid.n_points,) * 2, dtype=complex)
    M[3, 5] = 1.0
    with pytest.raises(InvalidArgumentError):
        reconstruct_products_from_W(CorrelationField(grid, dense=M), b, use_factor=False)


def test_zero_field_is_degenerate(basis):
    grid = SpatialGrid.for_basis(basis, 4)
    zero = SingleExcitationState(np.zeros(400), [1.0])
    with pytest.raises(DegenerateFieldError):
        reconstruct_products_from_W(corr_W(zero, basis, grid), basis)
    dense = CorrelationField(grid, dense=np.zeros((grid.n_points,) * 2, dtype=complex))
    b = build_mode_basis(basis.L, 400)
    with pytest.raises(DegenerateFieldError):
        reconstruct_products_from_W(dense, b, use_factor=False)


def test_reference_promoted_when_mode_one_empty(basis, photon):
    # the Gaussian has |c_1|^2 ~ exp(-250), far below the floor
    rec = reconstruct_products_from_W(corr_W(photon, basis, SpatialGrid.for_basis(basis)), basis)
    assert rec.reference == int(np.argmax(np.abs(photon.c_mode)))
    assert np.sum(np.abs(rec.power - np.abs(photon.c_mode) ** 2)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(phi=st.floats(0, 2 * math.pi), seed=st.integers(0, 10_000))
def test_reconstruction_phase_invariant(phi, seed):
    b = build_mode_basis(3.0, 40)
    psi = random_state(40, seed)
    rotated = SingleExcitationState(psi.c_mode * np.exp(1j * phi), [])
    grid = SpatialGrid.for_basis(b)
    p0 = reconstruct_products_from_W(corr_W(psi, b, grid), b).power
    p1 = reconstruct_products_from_W(corr_W(rotated, b, grid), b).power
    np.testing.assert_allclose(p1, p0, atol=1e-13)
    np.testing.assert_allclose(p0, np.abs(psi.c_mode) ** 2, atol=1e-12)
