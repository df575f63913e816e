"""Pulse area, energy, absorption and the normally ordered squeezing ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import FieldState
from .params import DerivedRates


class DegenerateEnsembleError(ValueError):
    """Raised when an ensemble cannot define a squeezing ratio."""


def trapezoid(values: np.ndarray, d_tau: float) -> complex:
    v = np.asarray(values)
    return d_tau * (v.sum(axis=-1) - 0.5 * (v[..., 0] + v[..., -1]))


def pulse_area(field: FieldState, d_tau: float) -> complex:
    """Theta = int Omega dtau (complex when the pulse is detuned)."""
    return complex(trapezoid(field.omega, d_tau))


def area_report(field: FieldState, d_tau: float) -> tuple[complex, float, float]:
    """(complex area, magnitude, phase)."""
    th = pulse_area(field, d_tau)
    return th, abs(th), math.atan2(th.imag, th.real)


def pulse_energy(field: FieldState, d_tau: float) -> complex:
    """M = int Omega_dag Omega dtau; complex in general for a positive-P sample."""
    return complex(trapezoid(field.omega_dag * field.omega, d_tau))


def plus_p_variance(samples: np.ndarray) -> np.ndarray:
    """Normally ordered variance <M^2> - <M>^2 of positive-P samples along axis 0.

    Samples are shifted by the first one before squaring, which is exact
    algebraically and returns precisely 0 for identical samples.
    """
    x = np.asarray(samples)
    d = x - x[0]
    return np.real(np.mean(d * d, axis=0) - np.mean(d, axis=0) ** 2)


def effective_g2(photon_energy: float, v_g: float, L: float) -> float:
    """Coupling g^2 for which 4 g^2 L / v_g equals the energy of one photon."""
    return photon_energy * v_g / (4.0 * L)


def squeezing_from_moments(var: np.ndarray, mean: np.ndarray, photon_energy: float) -> np.ndarray:
    mean = np.real(np.asarray(mean))
    if np.any(~(mean > 0)):
        raise DegenerateEnsembleError("mean energy must be positive")
    return 1.0 + np.asarray(var) / (photon_energy * mean)


def squeezing_ratio(samples: np.ndarray, rates: DerivedRates, g2: float, L: float, mean_M=None) -> np.ndarray:
    """S = 1 + v_g Var_+P[M] / (4 g^2 L <M>) for samples along axis 0."""
    x = np.asarray(samples)
    if x.shape[0] < 2:
        raise DegenerateEnsembleError("need at least two trajectories")
    mean = np.mean(x, axis=0) if mean_M is None else mean_M
    return squeezing_from_moments(plus_p_variance(x), mean, 4.0 * g2 * L / rates.v_g)


def to_db(S) -> np.ndarray:
    return 10.0 * np.log10(S)


def absorption(M_in, M_out, eps: float = 1e-3) -> np.ndarray:
    """Fraction of the input energy lost, (M_in - M_out)/M_in, clipped to [-eps, 1]."""
    M_in = np.real(np.asarray(M_in, dtype=complex))
    if np.any(~(M_in > 0)):
        raise ValueError("M_in must be positive")
    return np.clip((M_in - np.real(M_out)) / M_in, -eps, 1.0)


def atomic_absorption(excitation, L: float, Rz0: float) -> np.ndarray:
    """Fraction of atoms left excited after the pulse, averaged over the length L.

    ``excitation`` is int_0^L sum_m w_m (Rz_end - Rz0) dz; full inversion of
    every atom would give 2 |Rz0| L.
    """
    return np.asarray(excitation) / (2.0 * abs(Rz0) * L)


def uncertainty(samples: np.ndarray, photon_energy: float, n_boot: int = 200, rng=None, min_size: int = 100) -> np.ndarray:
    """Bootstrap standard deviation of the S estimator along axis 0."""
    x = np.asarray(samples)
    n = x.shape[0]
    if n < min_size:
        raise DegenerateEnsembleError(f"bootstrap needs at least {min_size} samples, got {n}")
    rng = np.random.default_rng(0) if rng is None else rng
    boots = []
    for _ in range(n_boot):
        xs = x[rng.integers(0, n, n)]
        boots.append(squeezing_from_moments(plus_p_variance(xs), np.mean(xs, axis=0), photon_energy))
    return np.std(np.array(boots), axis=0, ddof=1)


@dataclass
class SqueezingCurve:
    z: np.ndarray
    S: np.ndarray
    stderr: np.ndarray

    @property
    def S_dB(self) -> np.ndarray:
        return to_db(self.S)

    @property
    def opt_index(self) -> int:
        return int(np.nanargmin(self.S))

    @property
    def S_opt(self) -> float:
        return float(self.S[self.opt_index])

    @property
    def z_opt(self) -> float:
        return float(self.z[self.opt_index])

    @property
    def stderr_opt(self) -> float:
        return float(self.stderr[self.opt_index])
