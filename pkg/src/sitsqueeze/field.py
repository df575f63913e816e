"""Retarded-time grid, field state and input pulses."""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import DerivedRates, DomainError


class ConfigurationError(ValueError):
    """Raised when a grid, pulse or scheme is inconsistent."""


@dataclass(frozen=True)
class TauGrid:
    tau_min: float
    tau_max: float
    n_tau: int

    def __post_init__(self):
        if self.n_tau < 2 or not self.tau_max > self.tau_min:
            raise ConfigurationError("tau grid needs n_tau >= 2 and tau_max > tau_min")

    @classmethod
    def from_step(cls, tau_min: float, tau_max: float, d_tau: float) -> "TauGrid":
        if not d_tau > 0:
            raise ConfigurationError("d_tau must be > 0")
        n = int(round((tau_max - tau_min) / d_tau)) + 1
        return cls(tau_min, tau_min + (n - 1) * d_tau, n)

    @property
    def d_tau(self) -> float:
        return (self.tau_max - self.tau_min) / (self.n_tau - 1)

    @property
    def tau(self) -> np.ndarray:
        return np.linspace(self.tau_min, self.tau_max, self.n_tau)


@dataclass
class FieldState:
    """Rabi frequency and its independent conjugate on the tau grid at position z."""

    omega: np.ndarray
    omega_dag: np.ndarray
    z: float = 0.0

    def copy(self) -> "FieldState":
        return FieldState(self.omega.copy(), self.omega_dag.copy(), self.z)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.omega)) and np.all(np.isfinite(self.omega_dag)))


def soliton_phase(delta: float, A: float, G_rho: float, z: float) -> float:
    return delta / (A**2 + delta**2) * G_rho * z


def sech_soliton(
    grid: TauGrid,
    A: float = 1.0,
    tau0: float = 0.0,
    delta: float = 0.0,
    z: float = 0.0,
    rates: DerivedRates | None = None,
    tail_tol: float = 1e-3,
) -> FieldState:
    """Omega = 2A sech(A(tau - tau0)) exp(i(delta*tau + phi(z))).

    The pulse must fit in the window: the envelope at both edges has to be
    below ``tail_tol`` times the peak and the window must span ten widths.
    """
    if not A > 0:
        raise DomainError("A must be > 0")
    edge = A * min(tau0 - grid.tau_min, grid.tau_max - tau0)
    if edge <= 0 or 1.0 / math.cosh(min(edge, 700.0)) > tail_tol or A * (grid.tau_max - grid.tau_min) < 10:
        raise ConfigurationError(
            f"pulse (A={A}, tau0={tau0}) does not fit the window [{grid.tau_min}, {grid.tau_max}]"
        )
    tau = grid.tau
    G_rho = 0.0 if rates is None else rates.G_rho
    phase = delta * tau + soliton_phase(delta, A, G_rho, z)
    arg = np.clip(A * (tau - tau0), -700.0, 700.0)
    omega = 2.0 * A / np.cosh(arg) * np.exp(1j * phase)
    return FieldState(omega, np.conj(omega), z)


def scale_to_area(field: FieldState, target_area: float, d_tau: float) -> FieldState:
    """Multiply by a real factor so that |pulse area| equals ``target_area``."""
    from .observables import pulse_area

    current = abs(pulse_area(field, d_tau))
    if current == 0.0:
        raise DomainError("cannot rescale a zero field")
    s = target_area / current
    return FieldState(field.omega * s, field.omega_dag * s, field.z)


def shift_in_tau(values: np.ndarray, shift: float, d_tau: float) -> np.ndarray:
    """Sample f(tau - shift) from f on a uniform grid by cubic interpolation, zero outside."""
    from scipy.interpolate import CubicSpline

    n = values.shape[-1]
    x = np.arange(n) * d_tau
    spline = CubicSpline(x, values, axis=-1, extrapolate=False)
    out = spline(x - shift)
    return np.nan_to_num(out, nan=0.0)


_MAGIC = b"SITF"
_VERSION = 1


def write_snapshots(path: str | Path, grid: TauGrid, z: np.ndarray, omega: np.ndarray, omega_dag: np.ndarray, dtype=np.complex128) -> None:
    """Write field snapshots as a small JSON header followed by raw arrays.

    Layout: 4-byte magic, little-endian uint32 header length, UTF-8 JSON
    header, then omega and omega_dag as C-ordered (n_z, n_tau) arrays.
    """
    dtype = np.dtype(dtype).newbyteorder("<")
    header = {
        "version": _VERSION,
        "dtype": dtype.str,
        "tau_min": grid.tau_min,
        "tau_max": grid.tau_max,
        "n_tau": grid.n_tau,
        "z": [float(v) for v in z],
        "arrays": ["omega", "omega_dag"],
    }
    raw = json.dumps(header).encode()
    with open(path, "wb") as f:
        f.write(_MAGIC + struct.pack("<I", len(raw)) + raw)
        f.write(np.ascontiguousarray(omega, dtype).tobytes())
        f.write(np.ascontiguousarray(omega_dag, dtype).tobytes())


def read_snapshots(path: str | Path) -> tuple[TauGrid, np.ndarray, np.ndarray, np.ndarray]:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path} is not a field snapshot file")
        (size,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(size))
        dtype = np.dtype(header["dtype"])
        shape = (len(header["z"]), header["n_tau"])
        count = shape[0] * shape[1]
        omega = np.frombuffer(f.read(count * dtype.itemsize), dtype).reshape(shape)
        omega_dag = np.frombuffer(f.read(count * dtype.itemsize), dtype).reshape(shape)
    grid = TauGrid(header["tau_min"], header["tau_max"], header["n_tau"])
    return grid, np.array(header["z"]), omega.copy(), omega_dag.copy()
