"""Spectral lineshape discretization and the collective Bloch variables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .params import DomainError, _is_zero_temperature

SHAPES = ("sharp", "lorentzian", "gaussian")
METHODS = ("gauss_legendre", "midpoint", "equal_weight")


@dataclass(frozen=True)
class Lineshape:
    """Normalized spectral density of the resonant atoms.

    ``width`` is the half width at half maximum for a Lorentzian and the
    standard deviation for a Gaussian.  ``center`` is measured from the
    reference resonance, so the default 0 means on resonance.
    """

    kind: str = "sharp"
    width: float = 0.0
    center: float = 0.0

    def __post_init__(self):
        if self.kind not in SHAPES:
            raise DomainError(f"unknown lineshape {self.kind!r}; choose from {SHAPES}")
        if self.kind != "sharp" and not self.width > 0:
            raise DomainError("broadened lineshapes need width > 0")

    def density(self, x: np.ndarray) -> np.ndarray:
        u = np.asarray(x, dtype=float) - self.center
        if self.kind == "lorentzian":
            return self.width / np.pi / (u**2 + self.width**2)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (u / self.width) ** 2) / (self.width * math.sqrt(2 * math.pi))
        raise DomainError("a sharp line has no density function")

    def _quantile(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "lorentzian":
            return self.center + self.width * np.tan(np.pi * (u - 0.5))
        return self.center + self.width * special.ndtri(u)

    def _cdf(self, x: float) -> float:
        u = (x - self.center) / self.width
        if self.kind == "lorentzian":
            return 0.5 + math.atan(u) / math.pi
        return float(stats.norm.cdf(u))


@dataclass(frozen=True)
class FrequencyGrid:
    """Discrete frequency bands: detunings from the reference resonance and weights."""

    detuning: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        det = np.ascontiguousarray(self.detuning, dtype=float)
        w = np.ascontiguousarray(self.weight, dtype=float)
        if det.shape != w.shape or det.ndim != 1 or det.size == 0:
            raise DomainError("detuning and weight must be matching non-empty 1-D arrays")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("band weights must be non-negative and sum to 1")
        object.__setattr__(self, "detuning", det)
        object.__setattr__(self, "weight", w)

    @property
    def n_bands(self) -> int:
        return self.detuning.size

    def moments(self) -> tuple[float, float]:
        m1 = float(np.dot(self.weight, self.detuning))
        return m1, float(np.dot(self.weight, self.detuning**2))

    def to_dict(self) -> dict:
        return {"detuning": self.detuning.tolist(), "weight": self.weight.tolist()}


def discretize_lineshape(
    shape: Lineshape, n_bands: int, cutoff: float = 5.0, method: str = "gauss_legendre"
) -> FrequencyGrid:
    """Quadrature bands for ``shape`` on [center - cutoff*width, center + cutoff*width].

    ``gauss_legendre`` weights the density at Gauss-Legendre nodes,
    ``midpoint`` uses equal-width bins, and ``equal_weight`` places nodes at
    quantile midpoints of the truncated density so every band holds the same
    fraction of atoms (useful when each band carries its own noise).
    """
    if n_bands < 1:
        raise DomainError("n_bands must be >= 1")
    if shape.kind == "sharp":
        return FrequencyGrid(np.array([shape.center]), np.array([1.0]))
    if not cutoff > 0:
        raise DomainError("cutoff must be > 0")
    if method not in METHODS:
        raise DomainError(f"unknown quadrature {method!r}; choose from {METHODS}")
    half = cutoff * shape.width
    if method == "gauss_legendre":
        x, gw = np.polynomial.legendre.leggauss(n_bands)
        x = shape.center + half * x
        w = gw * shape.density(x)
    elif method == "midpoint":
        edges = np.linspace(shape.center - half, shape.center + half, n_bands + 1)
        x = 0.5 * (edges[1:] + edges[:-1])
        w = shape.density(x)
    else:
        lo, hi = shape._cdf(shape.center - half), shape._cdf(shape.center + half)
        u = lo + (hi - lo) * (np.arange(n_bands) + 0.5) / n_bands
        x = shape._quantile(u)
        w = np.ones(n_bands)
    w = w / w.sum()
    # symmetrize rounding so mirror nodes carry identical weight
    if shape.center == 0.0:
        w = 0.5 * (w + w[::-1])
        x = 0.5 * (x - x[::-1])
    w = w / math.fsum(w)
    return FrequencyGrid(x, w)


def doppler_width(beta: float | None, mass_param: float, omega0: float = 1.0) -> float:
    """Gaussian Doppler width omega0*sqrt(1/(beta*mass_param)); zero at zero temperature."""
    if not mass_param > 0:
        raise DomainError("mass_param must be positive")
    if _is_zero_temperature(beta):
        return 0.0
    if not float(beta) > 0:
        raise DomainError("beta must be positive")
    return omega0 * math.sqrt(1.0 / (float(beta) * mass_param))


def combine_gaussian(shape: Lineshape, extra_width: float) -> Lineshape:
    """Fold an extra Gaussian width (e.g. Doppler) into a lineshape."""
    if extra_width <= 0:
        return shape
    if shape.kind == "sharp":
        return Lineshape("gaussian", extra_width, shape.center)
    if shape.kind == "gaussian":
        return Lineshape("gaussian", math.hypot(shape.width, extra_width), shape.center)
    raise DomainError("Doppler broadening of a Lorentzian line is not supported")


@dataclass
class AtomicState:
    """Collective Bloch variables of one spatial cell, one row per band.

    R_plus is an independent phase-space variable, not the conjugate of
    R_minus, and R_z is complex in general.
    """

    R_minus: np.ndarray
    R_plus: np.ndarray
    R_z: np.ndarray
    N_jm: np.ndarray

    @property
    def n_bands(self) -> int:
        return self.R_minus.shape[0]

    def bloch_length(self) -> np.ndarray:
        return np.abs(self.R_minus) ** 2 + self.R_z.real**2

    def copy(self) -> "AtomicState":
        return AtomicState(self.R_minus.copy(), self.R_plus.copy(), self.R_z.copy(), self.N_jm.copy())


def init_ground_state(
    grid: FrequencyGrid, n_tau: int, Rz0: float = -0.5, atoms_per_cell: float = 1000.0
) -> AtomicState:
    """All coherences zero and a uniform inversion Rz0 on an n_bands x n_tau array."""
    shape = (grid.n_bands, n_tau)
    return AtomicState(
        R_minus=np.zeros(shape, complex),
        R_plus=np.zeros(shape, complex),
        R_z=np.full(shape, Rz0, dtype=complex),
        N_jm=atoms_per_cell * grid.weight,
    )
