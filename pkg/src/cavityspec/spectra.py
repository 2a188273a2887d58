"""Local spectra: filtered-correlation mode spectra and analyzer-atom banks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import find_peaks

from .core import AtomSpec, ModeBasis, SingleExcitationState
from .errors import (DegenerateSpectrumError, InvalidArgumentError,
                     InvalidComparisonError)
from .observables import (CorrelationField, SpatialGrid, T_on_grid,
                          reconstruct_products_from_W)

# analyzer decay constant as a fraction of the comb spacing
DEFAULT_GAMMA_FRACTION = 1 / 400
# spectra are excitation probabilities of a unit-norm state; anything below
# this is propagation roundoff
DEGENERATE_FLOOR = 1e-20


@dataclass(frozen=True)
class SpatialFilter:
    """Real window over cavity positions; 2D filters are ``g(r1) g(r2)``.

    kinds: ``"unit"``; ``"gaussian"`` with ``center``/``sigma``
    (normalized Gaussian); ``"boxcar"`` equal to 1 on ``[r_min, r_max]``.
    """

    kind: str = "unit"
    center: float | None = None
    sigma: float | None = None
    r_min: float | None = None
    r_max: float | None = None

    def __post_init__(self):
        if self.kind == "unit":
            return
        if self.kind == "gaussian":
            if self.center is None or self.sigma is None or not self.sigma > 0:
                raise InvalidArgumentError("gaussian filter needs a center and a positive sigma")
        elif self.kind == "boxcar":
            if self.r_min is None or self.r_max is None or not 0 <= self.r_min < self.r_max:
                raise InvalidArgumentError(f"boxcar needs 0 <= r_min < r_max, got [{self.r_min}, {self.r_max}]")
        else:
            raise InvalidArgumentError(f"unknown filter kind {self.kind!r}")

    @classmethod
    def unit(cls):
        return cls("unit")

    @classmethod
    def gaussian(cls, center, sigma):
        return cls("gaussian", center=float(center), sigma=float(sigma))

    @classmethod
    def boxcar(cls, r_min, r_max):
        return cls("boxcar", r_min=float(r_min), r_max=float(r_max))

    @property
    def separable(self) -> bool:
        return True

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "unit":
            return np.ones_like(r)
        if self.kind == "gaussian":
            return np.exp(-((r - self.center) ** 2) / (2 * self.sigma**2)) / math.sqrt(2 * math.pi * self.sigma**2)
        return ((r >= self.r_min) & (r <= self.r_max)).astype(float)

    def check(self, L: float):
        if self.kind == "boxcar" and self.r_max > L * (1 + 1e-12):
            raise InvalidArgumentError(f"boxcar upper edge {self.r_max} beyond the cavity length {L}")

    def describe(self) -> str:
        if self.kind == "unit":
            return "unit"
        if self.kind == "gaussian":
            return f"gaussian(center={self.center:.6g}, sigma={self.sigma:.6g})"
        return f"boxcar({self.r_min:.6g}, {self.r_max:.6g})"


def apply_filter(field: CorrelationField, filt: SpatialFilter) -> CorrelationField:
    """``W_F(r1, r2) = g(r1) g(r2) W(r1, r2)``."""
    filt.check(field.grid.L)
    g = filt(field.grid.points)
    if field.factor is not None:
        return CorrelationField(field.grid, field.t, factor=g * field.factor)
    return CorrelationField(field.grid, field.t, dense=g[:, None] * field.values * g[None, :])


@dataclass(frozen=True)
class Spectrum:
    """Sampled intensity versus angular frequency.

    ``provenance`` is one of ``"analyzer"``, ``"mode-reconstruction"`` or
    ``"initial-state"``; ``source`` names the bank or filter.
    """

    omega: np.ndarray
    values: np.ndarray
    provenance: str
    source: str = ""
    normalized: bool = False

    def __post_init__(self):
        om = np.array(self.omega, dtype=float)
        va = np.array(self.values, dtype=float)
        if om.shape != va.shape or om.ndim != 1:
            raise InvalidArgumentError("omega and values must be 1D arrays of equal length")
        if np.any(np.diff(om) <= 0):
            raise InvalidArgumentError("spectrum frequencies must be strictly increasing")
        if np.any(va < 0):
            raise InvalidArgumentError("spectrum values must be non-negative")
        om.setflags(write=False)
        va.setflags(write=False)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "values", va)

    @property
    def area(self) -> float:
        return float(np.trapezoid(self.values, self.omega))

    def crop(self, lo: float, hi: float) -> "Spectrum":
        sel = (self.omega >= lo - 1e-9) & (self.omega <= hi + 1e-9)
        return replace(self, omega=self.omega[sel], values=self.values[sel], normalized=False)


def normalize_spectrum(s: Spectrum) -> Spectrum:
    """Rescale to unit trapezoid area.

    Raises :class:`DegenerateSpectrumError` when every sample is below
    ``DEGENERATE_FLOOR`` (no light reached the detector).
    """
    area = s.area
    if not (area > 0 and np.max(s.values) > DEGENERATE_FLOOR):
        raise DegenerateSpectrumError(f"spectrum from {s.provenance} {s.source} is numerically zero")
    return replace(s, values=s.values / area, normalized=True)


def filtered_mode_spectrum(state: SingleExcitationState, basis: ModeBasis, filt: SpatialFilter,
                           grid: SpatialGrid | None = None, use_factor: bool = True) -> Spectrum:
    """Mode spectrum ``|c_p|**2`` of the field seen through a spatial window.

    Unnormalized; pass through :func:`normalize_spectrum` for unit area.
    """
    grid = grid or SpatialGrid.for_basis(basis)
    T = T_on_grid(state, basis, grid)
    field = CorrelationField(grid, state.t, factor=T)
    if not use_factor:
        field = CorrelationField(grid, state.t, dense=field.values)
    rec = reconstruct_products_from_W(apply_filter(field, filt), basis, use_factor=use_factor)
    return Spectrum(basis.omega, rec.power, "mode-reconstruction", filt.describe())


def initial_spectrum(state: SingleExcitationState, basis: ModeBasis) -> Spectrum:
    return Spectrum(basis.omega, np.abs(state.c_mode) ** 2, "initial-state", "mode amplitudes")


@dataclass(frozen=True)
class AnalyzerBank:
    """A comb of weakly coupled two-level atoms sharing one position.

    Frequencies are ``omega_min + n * delta_omega`` for ``n = 0..N-1``.
    ``gamma`` defaults to ``delta_omega / 400``.
    """

    n_atoms: int
    omega_min: float
    omega_max: float
    r: float
    t_read: float
    gamma: float | None = None
    t_on: float = 0.0
    name: str = "bank"

    def __post_init__(self):
        if self.n_atoms < 2:
            raise InvalidArgumentError("an analyzer bank needs at least 2 atoms")
        if not self.omega_min < self.omega_max:
            raise InvalidArgumentError("omega_min must be below omega_max")
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.delta_omega * DEFAULT_GAMMA_FRACTION)
        if not 0 < self.gamma <= self.delta_omega / 10:
            raise InvalidArgumentError(
                f"bank {self.name}: gamma={self.gamma} must be positive and at most delta_omega/10"
            )
        if not self.t_on < self.t_read:
            raise InvalidArgumentError(f"bank {self.name}: t_on must precede t_read")

    @property
    def delta_omega(self) -> float:
        return (self.omega_max - self.omega_min) / (self.n_atoms - 1)

    @property
    def comb(self) -> np.ndarray:
        return self.omega_min + self.delta_omega * np.arange(self.n_atoms)


def build_analyzer_bank(bank: AnalyzerBank) -> list[AtomSpec]:
    return [
        AtomSpec(bank.r, float(w), bank.gamma, ((bank.t_on, math.inf),), "analyzer", f"{bank.name}[{i}]")
        for i, w in enumerate(bank.comb)
    ]


def analyzer_spectrum(state: SingleExcitationState, bank: AnalyzerBank, first_atom: int,
                      t_read: float | None = None) -> Spectrum:
    """Excitation probabilities of a bank's atoms against their frequencies.

    ``first_atom`` is the index of the bank's first atom in the state.  The
    state must be at or after the readout time (``bank.t_read`` unless
    overridden).
    """
    t_read = bank.t_read if t_read is None else t_read
    if state.t < t_read - 1e-12:
        raise InvalidArgumentError(f"bank {bank.name} read at t={state.t} before its readout time {t_read}")
    if t_read < bank.t_on:
        raise InvalidArgumentError(f"bank {bank.name} read before it was switched on")
    exc = np.abs(state.c_atom[first_atom:first_atom + bank.n_atoms]) ** 2
    if exc.size != bank.n_atoms:
        raise InvalidArgumentError("state does not hold all atoms of the bank")
    return Spectrum(bank.comb, exc, "analyzer", bank.name)


def absorbed_energy(state: SingleExcitationState, bank: AnalyzerBank, first_atom: int) -> float:
    exc = np.abs(state.c_atom[first_atom:first_atom + bank.n_atoms]) ** 2
    return float(np.sum(bank.comb * exc))


@dataclass(frozen=True)
class ComparisonMetrics:
    l1: float
    linf: float
    peak_shift: float
    overlap: tuple

    def as_dict(self) -> dict:
        return {"l1": self.l1, "linf": self.linf, "peak_shift": self.peak_shift,
                "overlap": list(self.overlap)}


def compare_spectra(a: Spectrum, b: Spectrum) -> ComparisonMetrics:
    """Distances between two spectra on the union of their grids.

    Both are linearly interpolated onto the merged frequency samples of the
    overlap interval; L1 is the trapezoid integral of ``|a - b|``.
    """
    lo = max(a.omega[0], b.omega[0])
    hi = min(a.omega[-1], b.omega[-1])
    if not lo < hi:
        raise InvalidComparisonError(f"spectra share no frequency support ([{lo}, {hi}])")
    grid = np.union1d(a.omega, b.omega)
    grid = grid[(grid >= lo) & (grid <= hi)]
    ya = np.interp(grid, a.omega, a.values)
    yb = np.interp(grid, b.omega, b.values)
    d = np.abs(ya - yb)
    return ComparisonMetrics(
        l1=float(np.trapezoid(d, grid)),
        linf=float(np.max(d)),
        peak_shift=float(abs(a.omega[np.argmax(a.values)] - b.omega[np.argmax(b.values)])),
        overlap=(float(lo), float(hi)),
    )


def compare_normalized(a: Spectrum, b: Spectrum) -> ComparisonMetrics:
    """Crop both spectra to their common frequency range, normalize, compare.

    This is how an analyzer comb is compared with a mode spectrum that
    extends beyond the comb.
    """
    lo = max(a.omega[0], b.omega[0])
    hi = min(a.omega[-1], b.omega[-1])
    if not lo < hi:
        raise InvalidComparisonError(f"spectra share no frequency support ([{lo}, {hi}])")
    return compare_spectra(normalize_spectrum(a.crop(lo, hi)), normalize_spectrum(b.crop(lo, hi)))


def add_spectra(parts, source: str = "sum") -> Spectrum:
    """Sum of unnormalized spectra on a shared frequency grid.

    Adding raw analyzer readings weights each part by its intensity.
    """
    parts = list(parts)
    om = parts[0].omega
    if any(p.omega.shape != om.shape or not np.allclose(p.omega, om) for p in parts):
        raise InvalidArgumentError("spectra must share one frequency grid to be added")
    return Spectrum(om, sum(p.values for p in parts), parts[0].provenance, source)


def local_maxima(s: Spectrum, rel_height: float = 0.0) -> np.ndarray:
    """Frequencies of interior local maxima above ``rel_height * max``."""
    idx, _ = find_peaks(s.values, height=rel_height * np.max(s.values))
    return s.omega[idx]


def local_minima(s: Spectrum, rel_depth: float = 0.0) -> np.ndarray:
    """Frequencies of interior local minima whose prominence exceeds ``rel_depth * max``."""
    idx, _ = find_peaks(-s.values, prominence=rel_depth * np.max(s.values))
    return s.omega[idx]


def fwhm(s: Spectrum, near: float | None = None, dip: bool = False) -> float:
    """Full width at half height of the peak (or dip) closest to ``near``.

    Peaks are measured from zero; dips from the lower of the two flanking
    maxima, with linear interpolation between samples.
    """
    y = -s.values if dip else s.values
    idx, _ = find_peaks(y)
    if idx.size == 0:
        raise InvalidArgumentError("spectrum has no interior extremum")
    i = idx[np.argmin(np.abs(s.omega[idx] - near))] if near is not None else idx[np.argmax(y[idx])]
    if dip:
        top = min(np.max(s.values[:i + 1]), np.max(s.values[i:]))
        level = (top + s.values[i]) / 2
        inside = s.values <= level
    else:
        level = s.values[i] / 2
        inside = s.values >= level
    j = i
    while j > 0 and inside[j - 1]:
        j -= 1
    k = i
    while k < s.values.size - 1 and inside[k + 1]:
        k += 1
    if j == 0 or k == s.values.size - 1:
        raise InvalidArgumentError("feature reaches the edge of the spectrum")

    def cross(i0, i1):
        y0, y1 = s.values[i0], s.values[i1]
        return s.omega[i0] + (level - y0) * (s.omega[i1] - s.omega[i0]) / (y1 - y0)

    return float(cross(k, k + 1) - cross(j - 1, j))
