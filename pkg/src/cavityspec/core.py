"""Mode basis, single-excitation states and initial-state constructors.

Natural units are used throughout: c = eps0 = mu0 = hbar = 1, so a mode's
angular frequency equals its wavenumber.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

# spectral margin (in units of sigma_k) that must stay inside the retained band
BAND_MARGIN = 5.0


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeBasis:
    """Standing-wave sine modes of a closed cavity ``0 <= r <= L``.

    Mode ``n`` (1-based) has wavenumber ``k_n = n*pi/L`` and mode function
    ``sin(k_n r)``.  Arrays are stored 0-based, so ``k[0]`` is ``k_1``.
    """

    L: float
    n_modes: int
    k: np.ndarray = field(init=False, repr=False, compare=False)
    omega: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidArgumentError(f"cavity length must be positive, got {self.L}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise InvalidArgumentError(f"mode count must be a positive integer, got {self.n_modes}")
        k = np.arange(1, self.n_modes + 1) * (np.pi / self.L)
        object.__setattr__(self, "k", _frozen(k))
        object.__setattr__(self, "omega", _frozen(k))

    @property
    def dk(self) -> float:
        return math.pi / self.L

    def mode_functions(self, r) -> np.ndarray:
        """Return ``sin(k_n r)`` with shape ``(len(r), n_modes)``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return np.sin(np.outer(r, self.k))


def build_mode_basis(L: float, n_modes: int) -> ModeBasis:
    return ModeBasis(float(L), int(n_modes))


@dataclass(frozen=True)
class SingleExcitationState:
    """Amplitudes of the one-excitation basis vectors.

    ``c_mode[n]`` multiplies ``|1_n, 0>`` (photon in mode n+1, all atoms
    down) and ``c_atom[j]`` multiplies ``|0, 1_j>``.
    """

    c_mode: np.ndarray
    c_atom: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "c_mode", _frozen(np.asarray(self.c_mode, dtype=complex)))
        object.__setattr__(self, "c_atom", _frozen(np.asarray(self.c_atom, dtype=complex)))
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_vector(cls, vec, n_modes: int, t: float = 0.0) -> "SingleExcitationState":
        vec = np.asarray(vec)
        return cls(vec[:n_modes], vec[n_modes:], t)

    @property
    def vector(self) -> np.ndarray:
        """Concatenated ``[c_mode, c_atom]`` (a fresh writable copy)."""
        return np.concatenate([self.c_mode, self.c_atom])

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.c_mode) ** 2) + np.sum(np.abs(self.c_atom) ** 2)))

    @property
    def n_atoms(self) -> int:
        return self.c_atom.size

    def with_atoms(self, n_atoms: int) -> "SingleExcitationState":
        """Return the same field state with ``n_atoms`` ground-state atoms appended."""
        return SingleExcitationState(self.c_mode, np.concatenate([self.c_atom, np.zeros(n_atoms)]), self.t)


def normalize(state: SingleExcitationState) -> SingleExcitationState:
    n = state.norm
    if not n > 0:
        raise InvalidArgumentError("cannot normalize a zero state vector")
    return SingleExcitationState(state.c_mode / n, state.c_atom / n, state.t)


@dataclass(frozen=True)
class AtomSpec:
    """A two-level atom at a fixed position.

    ``schedule`` lists the half-open intervals ``[t_on, t_off)`` during which
    the dipole coupling is switched on; ``t_off`` may be ``inf``.
    """

    r: float
    omega0: float
    gamma: float
    schedule: tuple = ((0.0, math.inf),)
    role: str = "scatterer"
    name: str = ""

    def __post_init__(self):
        if not self.omega0 > 0:
            raise InvalidArgumentError(f"omega0 must be positive, got {self.omega0}")
        if not self.gamma >= 0:
            raise InvalidArgumentError(f"gamma must be non-negative, got {self.gamma}")
        if self.role not in ("scatterer", "analyzer"):
            raise InvalidArgumentError(f"unknown atom role {self.role!r}")
        sched = tuple((float(a), float(b)) for a, b in self.schedule)
        last = -math.inf
        for a, b in sched:
            if not a < b or a < last:
                raise InvalidArgumentError(f"schedule intervals must be ordered and disjoint: {sched}")
            last = b
        object.__setattr__(self, "schedule", sched)

    @property
    def dipole(self) -> float:
        from .dynamics import dipole_from_gamma

        return dipole_from_gamma(self.gamma, self.omega0)

    def is_active(self, t: float) -> bool:
        return any(a <= t < b for a, b in self.schedule)

    def check_inside(self, L: float):
        if not 0 < self.r < L:
            raise InvalidArgumentError(f"atom position {self.r} outside the cavity (0, {L})")


@dataclass(frozen=True)
class GaussianPhotonSpec:
    """Parameters of a Gaussian one-photon wavepacket.

    The mode amplitudes are ``exp(-i k r0 - (k - k0)**2 / (4 sigma_k**2))`` so
    ``|c_k|**2`` is a Gaussian of standard deviation ``sigma_k`` and the
    packet starts at ``r0`` moving towards larger ``r``.
    """

    k0: float
    sigma_k: float
    r0: float

    def __post_init__(self):
        if not self.sigma_k > 0:
            raise InvalidArgumentError(f"sigma_k must be positive, got {self.sigma_k}")

    @property
    def sigma_x(self) -> float:
        """Standard deviation of the energy-density profile."""
        return 1.0 / (2.0 * self.sigma_k)

    def check_band(self, basis: ModeBasis):
        lo = self.k0 - BAND_MARGIN * self.sigma_k
        hi = self.k0 + BAND_MARGIN * self.sigma_k
        if not (basis.k[0] < lo and hi < basis.k[-1]):
            raise InvalidArgumentError(
                f"photon support [{lo:.4g}, {hi:.4g}] is not inside the retained band "
                f"({basis.k[0]:.4g}, {basis.k[-1]:.4g})"
            )


def _gaussian_amplitudes(basis: ModeBasis, spec: GaussianPhotonSpec) -> np.ndarray:
    k = basis.k
    pref = (2 * np.pi * spec.sigma_k**2) ** -0.25
    return pref * np.exp(-1j * k * spec.r0 - (k - spec.k0) ** 2 / (4 * spec.sigma_k**2))


def gaussian_photon_state(basis: ModeBasis, spec: GaussianPhotonSpec, n_atoms: int = 0) -> SingleExcitationState:
    """Gaussian photon, normalized on the discrete mode grid."""
    spec.check_band(basis)
    if not 0 <= spec.r0 <= basis.L:
        raise InvalidArgumentError(f"r0={spec.r0} outside the cavity")
    return normalize(SingleExcitationState(_gaussian_amplitudes(basis, spec), np.zeros(n_atoms)))


@dataclass(frozen=True)
class MultiGaussianBounds:
    """Ranges for the randomly drawn components of a multi-Gaussian photon.

    ``k0`` is drawn uniformly from ``k_center +- k0_spread``; ``sigma_k``
    and ``r0`` uniformly from their ``(lo, hi)`` ranges.
    """

    k0_spread: float = 10.0
    sigma_k: tuple = (1.5, 3.0)
    r0: tuple = (3.0, 6.0)

    def __post_init__(self):
        object.__setattr__(self, "sigma_k", tuple(float(x) for x in self.sigma_k))
        object.__setattr__(self, "r0", tuple(float(x) for x in self.r0))
        if self.k0_spread < 0 or not 0 < self.sigma_k[0] <= self.sigma_k[1] or self.r0[0] > self.r0[1]:
            raise InvalidArgumentError(f"inconsistent multi-Gaussian bounds {self}")


def draw_multi_gaussian_params(n_components: int, seed: int, k_center: float,
                               bounds: MultiGaussianBounds) -> list[GaussianPhotonSpec]:
    """Draw component parameters from a seeded generator, in (k0, sigma_k, r0) order."""
    if n_components < 1:
        raise InvalidArgumentError("n_components must be at least 1")
    rng = np.random.default_rng(seed)
    specs = []
    for _ in range(n_components):
        k0 = rng.uniform(k_center - bounds.k0_spread, k_center + bounds.k0_spread)
        sigma_k = rng.uniform(*bounds.sigma_k)
        r0 = rng.uniform(*bounds.r0)
        specs.append(GaussianPhotonSpec(float(k0), float(sigma_k), float(r0)))
    return specs


def random_multi_gaussian_state(basis: ModeBasis, n_components: int, seed: int, k_center: float,
                                bounds: MultiGaussianBounds = MultiGaussianBounds(),
                                n_atoms: int = 0) -> SingleExcitationState:
    """Normalized superposition of seeded random right-moving Gaussian photons.

    The bounds are checked as a whole: the widest possible component around
    the extreme centres must fit the band, and every ``r0`` must lie in the
    left half of the cavity.
    """
    worst_lo = k_center - bounds.k0_spread - BAND_MARGIN * bounds.sigma_k[1]
    worst_hi = k_center + bounds.k0_spread + BAND_MARGIN * bounds.sigma_k[1]
    if not (basis.k[0] < worst_lo and worst_hi < basis.k[-1]):
        raise InvalidArgumentError(
            f"bounds allow spectral support [{worst_lo:.4g}, {worst_hi:.4g}] outside the retained band"
        )
    if not (0 < bounds.r0[0] and bounds.r0[1] < basis.L / 2):
        raise InvalidArgumentError(f"r0 range {bounds.r0} must lie in the left half (0, {basis.L / 2})")
    amps = np.zeros(basis.n_modes, dtype=complex)
    for spec in draw_multi_gaussian_params(n_components, seed, k_center, bounds):
        amps += _gaussian_amplitudes(basis, spec)
    return normalize(SingleExcitationState(amps, np.zeros(n_atoms)))
