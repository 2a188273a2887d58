"""Field-space observables of a single-excitation state.

Everything is built from the complex amplitude

    T(r) = sum_n sqrt(omega_n / L) sin(k_n r) c_n

whose outer product ``W(r1, r2) = conj(T(r1)) T(r2)`` is the combined
normally ordered E/B correlation function.  Normally ordered E and B
correlations are exposed as views of ``W``.

Integrals over the cavity use the composite trapezoid rule on a uniform
grid.  Since every mode function vanishes at both mirrors, the trapezoid
sum of ``sin(k_p r) f(r)`` is a type-I discrete sine transform, which is
how the fast paths evaluate it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.fft import dst

from .core import ModeBasis, SingleExcitationState
from .errors import DegenerateFieldError, InvalidArgumentError

# minimum samples per mode
MIN_GRID_FACTOR = 4
# reference-mode floor relative to the largest mode power
REFERENCE_FLOOR = 1e-12


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform samples of ``[0, L]`` including both mirrors."""

    L: float
    n_points: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_points < 3:
            raise InvalidArgumentError("a spatial grid needs at least 3 points")
        pts = np.linspace(0.0, self.L, self.n_points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def for_basis(cls, basis: ModeBasis, factor: int = 8) -> "SpatialGrid":
        return cls(basis.L, factor * basis.n_modes + 1)

    @property
    def spacing(self) -> float:
        return self.L / (self.n_points - 1)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = self.spacing / 2
        return w

    def check(self, basis: ModeBasis):
        if abs(self.L - basis.L) > 1e-12 * basis.L:
            raise InvalidArgumentError(f"grid length {self.L} does not match cavity length {basis.L}")
        if self.n_points < MIN_GRID_FACTOR * basis.n_modes:
            raise InvalidArgumentError(
                f"grid of {self.n_points} points undersamples {basis.n_modes} modes "
                f"(need at least {MIN_GRID_FACTOR} per mode)"
            )


def _t_coefficients(state, basis):
    return np.sqrt(basis.omega / basis.L) * state.c_mode


def eval_T(state: SingleExcitationState, basis: ModeBasis, r):
    """T-field at arbitrary positions (scalar in, scalar out)."""
    scalar = np.ndim(r) == 0
    vals = basis.mode_functions(r) @ _t_coefficients(state, basis)
    return complex(vals[0]) if scalar else vals


def sine_synthesis(coeffs: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Evaluate ``sum_n coeffs[n] sin(k_n r)`` on every grid point via DST-I."""
    m = grid.n_points - 1
    if coeffs.size > m - 1:
        raise InvalidArgumentError("grid too coarse for the number of modes")
    x = np.zeros(m - 1, dtype=coeffs.dtype)
    x[: coeffs.size] = coeffs
    out = np.zeros(grid.n_points, dtype=np.result_type(coeffs.dtype, float))
    out[1:-1] = dst(x, type=1) / 2
    return out


def sine_projection(values: np.ndarray, grid: SpatialGrid, n_modes: int) -> np.ndarray:
    """Trapezoid integrals ``int sin(k_p r) f(r) dr`` for ``p = 1..n_modes``."""
    m = grid.n_points - 1
    if n_modes > m - 1:
        raise InvalidArgumentError("grid too coarse for the number of modes")
    y = dst(np.asarray(values)[1:-1], type=1) / 2 * grid.spacing
    return y[:n_modes]


def T_on_grid(state: SingleExcitationState, basis: ModeBasis, grid: SpatialGrid) -> np.ndarray:
    grid.check(basis)
    return sine_synthesis(_t_coefficients(state, basis), grid)


def corr_E(state, basis, r1, r2):
    """Normally ordered ``<:E(r1) E(r2):> = 2 Re[conj(T(r1)) T(r2)]``."""
    t1, t2 = eval_T(state, basis, r1), eval_T(state, basis, r2)
    return np.real(2 * np.conj(t1) * t2)


def corr_B(state, basis, r1, r2):
    """Antisymmetric combination ``conj(T(r1)) T(r2) - conj(T(r2)) T(r1)``."""
    t1, t2 = eval_T(state, basis, r1), eval_T(state, basis, r2)
    return np.conj(t1) * t2 - np.conj(t2) * t1


def energy_density(state: SingleExcitationState, basis: ModeBasis, r) -> np.ndarray:
    """Normally ordered field energy density ``2 |T(r)|**2``.

    Integrates over the cavity to ``sum_n omega_n |c_n|**2``.
    """
    return 2 * np.abs(eval_T(state, basis, r)) ** 2


def energy_density_on_grid(state, basis, grid) -> np.ndarray:
    return 2 * np.abs(T_on_grid(state, basis, grid)) ** 2


@dataclass(frozen=True)
class CorrelationField:
    """``W(r_i, r_j)`` sampled on a grid.

    When the field is known to factor as ``conj(f) (x) f`` (true for any
    pure state, and preserved by separable filters) ``factor`` holds ``f``
    and the dense matrix is only built on demand.
    """

    grid: SpatialGrid
    t: float = 0.0
    factor: np.ndarray | None = None
    dense: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.factor is None and self.dense is None:
            raise InvalidArgumentError("a correlation field needs a factor or a dense matrix")

    @cached_property
    def values(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        W = np.outer(np.conj(self.factor), self.factor)
        # complex products round differently in the two triangles; average
        # so the kernel is Hermitian bit for bit
        return (W + W.conj().T) / 2

    @property
    def E_view(self) -> np.ndarray:
        """``<:E(r1) E(r2):>`` on the grid."""
        return 2 * self.values.real

    @property
    def B_view(self) -> np.ndarray:
        """``<:B(r1) B(r2):>`` on the grid."""
        return 2j * self.values.imag

    @property
    def diagonal(self) -> np.ndarray:
        if self.factor is not None:
            return np.abs(self.factor) ** 2
        return np.real(np.diag(self.dense))


def corr_W(state: SingleExcitationState, basis: ModeBasis, grid: SpatialGrid) -> CorrelationField:
    return CorrelationField(grid, state.t, factor=T_on_grid(state, basis, grid))


def reconstruct_from_T(state: SingleExcitationState, basis: ModeBasis, grid: SpatialGrid) -> np.ndarray:
    """Recover mode amplitudes from the T-field by sine projection.

    ``c_m = 2 / sqrt(omega_m L) * int sin(k_m r) T(r) dr``.
    """
    T = T_on_grid(state, basis, grid)
    return 2 / np.sqrt(basis.omega * basis.L) * sine_projection(T, grid, basis.n_modes)


@dataclass(frozen=True)
class ModeReconstruction:
    """Mode amplitudes resolved from a correlation field.

    ``products[p] = conj(c_ref) c_p`` and ``amplitudes`` are fixed by taking
    ``c_ref`` real and positive, so only ``|amplitudes|**2`` is physical.
    """

    products: np.ndarray
    amplitudes: np.ndarray
    reference: int  # 0-based mode index

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _resolve(products, ref, power=None):
    c_ref = np.sqrt(products[ref].real)
    if power is None:
        amps = products / c_ref
    else:
        # magnitudes from the diagonal integrals avoid dividing by a
        # weak reference; phases still come from the products
        amps = np.sqrt(np.clip(power, 0, None)) * np.exp(1j * np.angle(products))
    amps[ref] = c_ref
    return ModeReconstruction(products, amps, ref)


def _pick_reference(power):
    top = np.max(power)
    if not top > 1e-300:
        raise DegenerateFieldError("correlation field is numerically zero")
    if power[0] >= REFERENCE_FLOOR * top:
        return 0
    return int(np.argmax(power))


def reconstruct_products_from_W(field: CorrelationField, basis: ModeBasis,
                                use_factor: bool = True) -> ModeReconstruction:
    """Mode amplitudes from ``W`` through the double sine projection.

    ``conj(c_1) c_p = 4 / (L sqrt(omega_1 omega_p)) * iint sin(k_1 r1) sin(k_p r2) W(r1, r2)``.
    Mode 1 is the reference unless its power is below ``1e-12`` of the
    strongest mode, in which case the strongest mode takes its place.

    With ``use_factor`` and a factorized field the double integral splits
    into single sine projections; otherwise the dense matrix is integrated
    and the magnitudes ``|c_p|`` come from the diagonal (``p = p``)
    integrals, which stay accurate when the reference mode is weak.
    """
    grid = field.grid
    grid.check(basis)
    scale = 4 / (basis.L * np.sqrt(basis.omega))
    if use_factor and field.factor is not None:
        a = 2 / np.sqrt(basis.omega * basis.L) * sine_projection(field.factor, grid, basis.n_modes)
        power = np.abs(a) ** 2
        ref = _pick_reference(power)
        return _resolve(np.conj(a[ref]) * a, ref)

    W = field.values
    if np.max(np.abs(W - W.conj().T)) > 1e-10 * max(np.max(np.abs(W)), 1e-300):
        raise InvalidArgumentError("correlation field is not Hermitian")
    Sw = basis.mode_functions(grid.points) * grid.weights[:, None]
    WS = W.real @ Sw + 1j * (W.imag @ Sw)  # W @ Sw with a real right factor
    power = (np.einsum("ip,ip->p", Sw, WS) * scale / np.sqrt(basis.omega)).real
    ref = _pick_reference(power)
    row = Sw[:, ref] @ WS
    products = row * scale / np.sqrt(basis.omega[ref])
    return _resolve(products, ref, power)
