"""Langevin noise: white-noise draws, per-trajectory streams and noise amplitudes."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .field import FieldState
from .medium import AtomicState
from .params import DerivedRates, DomainError

KINDS = ("alpha", "o", "P", "J", "J_dag", "z")
COMPLEX_KINDS = ("alpha", "o", "P")
MODELS = ("consistent", "printed")

RNG_ALGORITHM = "Philox4x64 (numpy), SeedSequence(master_seed, trajectory, kind, block)"
# tau steps per independently seeded block; fixed so results never depend on chunking
BLOCK_STEPS = 64


@dataclass(frozen=True)
class NoiseToggles:
    """Switches for the individual noise channels and the amplitude model.

    ``model='consistent'`` uses amplitudes that reproduce the exact atomic
    moments for either sign convention of Rz0; ``model='printed'`` applies the
    textbook expressions to the variables as they are, and ``symmetrize``
    then restores the factor 2 in the R+ coupling amplitude.  ``scale``
    multiplies every amplitude (1 = physical noise).
    """

    thermal_field: bool = True
    pump: bool = True
    dephasing: bool = True
    coupling: bool = True
    z_channel: bool = True
    model: str = "consistent"
    symmetrize: bool = False
    scale: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"unknown noise model {self.model!r}; choose from {MODELS}")
        if self.scale < 0:
            raise DomainError("noise scale must be >= 0")

    @property
    def atomic_on(self) -> bool:
        return self.scale > 0 and (self.pump or self.dephasing or self.coupling or self.z_channel)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_steps(steps) -> float:
    steps = tuple(float(s) for s in steps)
    if any(not s > 0 for s in steps):
        raise DomainError(f"noise steps must be positive, got {steps}")
    return float(np.prod(steps))


def sample_xi(kind: str, shape, steps, rng: np.random.Generator) -> np.ndarray:
    """White-noise samples on a grid cell of volume prod(steps).

    Real kinds have variance 1/volume.  Complex kinds are circular with
    E|xi|^2 = 1/volume, i.e. 1/(2 volume) per real component, which is the
    discrete form of <xi(t) xi*(t')> = delta(t - t').
    """
    if kind not in KINDS:
        raise DomainError(f"unknown noise kind {kind!r}")
    vol = _check_steps(steps)
    shape = (int(shape),) if np.isscalar(shape) else tuple(shape)
    if kind in COMPLEX_KINDS:
        x = rng.standard_normal((*shape, 2))
        return (x[..., 0] + 1j * x[..., 1]) / np.sqrt(2.0 * vol)
    return rng.standard_normal(shape) / np.sqrt(vol)


class NoiseStreams:
    """Counter-keyed random streams of one trajectory.

    Every block of ``BLOCK_STEPS`` tau steps of every kind has its own Philox
    generator seeded by (master_seed, trajectory, kind, block), so any draw
    is fixed by those indices alone, whatever the scheduling.
    With ``refine = r`` the draws are generated on a grid 2^r times finer in
    both tau and z and summed back, so a run at steps (dtau, dz) sees the same
    Brownian path as an unrefined run at (dtau/2^r, dz/2^r).
    """

    def __init__(self, master_seed: int, trajectory: int, refine: int = 0):
        self.master_seed = int(master_seed)
        self.trajectory = int(trajectory)
        self.refine = int(refine)

    def generator(self, kind: str, block: int) -> np.random.Generator:
        ss = np.random.SeedSequence([self.master_seed, self.trajectory, KINDS.index(kind), int(block)])
        return np.random.Generator(np.random.Philox(ss))

    def unit_block(self, kind: str, block: int, shape: tuple) -> np.ndarray:
        """Unit-variance draws for one block: shape (BLOCK_STEPS, *shape)."""
        rng = self.generator(kind, block)
        if kind in COMPLEX_KINDS:
            x = rng.standard_normal((BLOCK_STEPS, *shape, 2))
            return (x[..., 0] + 1j * x[..., 1]) * np.sqrt(0.5)
        return rng.standard_normal((BLOCK_STEPS, *shape))

    def unit_steps(self, kind: str, i0: int, i1: int, shape: tuple) -> np.ndarray:
        """Unit-variance draws for steps i0 <= i < i1; shape starts with the cell count."""
        if self.refine == 0:
            return self._fine_steps(kind, i0, i1, shape)
        f = 2**self.refine
        nz, rest = shape[0], tuple(shape[1:])
        fine = self._fine_steps(kind, i0 * f, i1 * f, (nz * f, *rest))
        fine = fine.reshape(i1 - i0, f, nz, f, *rest)
        return fine.sum(axis=(1, 3)) / f

    def _fine_steps(self, kind: str, i0: int, i1: int, shape: tuple) -> np.ndarray:
        b0, b1 = i0 // BLOCK_STEPS, (i1 - 1) // BLOCK_STEPS
        parts = [self.unit_block(kind, b, shape) for b in range(b0, b1 + 1)]
        out = np.concatenate(parts, axis=0)
        off = i0 - b0 * BLOCK_STEPS
        return out[off: off + (i1 - i0)]


def field_noise_amplitude(rates: DerivedRates) -> float:
    """Coefficient 2*sqrt(G*kappa*n_bar) of the thermal field noise."""
    return 2.0 * float(np.sqrt(rates.G * rates.kappa * rates.n_bar_field))


def assemble_field_noise(xi_alpha: np.ndarray, rates: DerivedRates) -> np.ndarray:
    """F_Omega = 2 xi_alpha sqrt(G kappa n_bar); the conjugate field takes conj(F_Omega)."""
    amp = field_noise_amplitude(rates)
    if amp == 0.0:
        return np.zeros_like(np.asarray(xi_alpha, dtype=complex))
    return amp * np.asarray(xi_alpha)


def assemble_atomic_noise(
    state: AtomicState,
    field: FieldState,
    rates: DerivedRates,
    draws: dict,
    density_weights: np.ndarray,
    toggles: NoiseToggles = NoiseToggles(),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Atomic Langevin terms (F_R, F_R_dag, F_z) on the band x tau grid.

    ``draws`` maps kinds 'J', 'J_dag', 'z', 'P', 'o' to xi arrays shaped like
    the state (missing kinds count as zero).  Each term is divided by
    sqrt(density_weights) per band, the effective atom density of that band.
    A non-finite state yields non-finite terms, which the caller treats as a
    divergence.
    """
    shape = state.R_minus.shape
    rho = np.asarray(density_weights, dtype=float).reshape(-1, 1)
    if rho.shape[0] != shape[0] or np.any(rho <= 0):
        raise DomainError("density_weights must be positive, one per band")

    def get(kind, dtype):
        x = draws.get(kind)
        if x is None:
            return np.zeros(shape, dtype)
        return np.broadcast_to(np.asarray(x, dtype), shape)

    a = np.broadcast_to(field.omega, shape).astype(complex).ravel()
    b = np.broadcast_to(field.omega_dag, shape).astype(complex).ravel()
    flags = dict(
        model=MODELS.index(toggles.model),
        sym=toggles.symmetrize,
        coupling=toggles.coupling,
        dephasing=toggles.dephasing,
        pump=toggles.pump,
        zchan=toggles.z_channel,
    )
    dm, dp, dz = _kernels.atomic_noise_array(
        state.R_minus.astype(complex).ravel(),
        state.R_plus.astype(complex).ravel(),
        state.R_z.astype(complex).ravel(),
        a,
        b,
        get("J", float).ravel().copy(),
        get("J_dag", float).ravel().copy(),
        get("z", float).ravel().copy(),
        get("P", complex).ravel().copy(),
        get("o", complex).ravel().copy(),
        rates.gamma_p,
        rates.W12,
        rates.gamma_par,
        rates.sigma_ss,
        abs(rates.Rz0),
        flags["model"],
        flags["sym"],
        flags["coupling"],
        flags["dephasing"],
        flags["pump"],
        flags["zchan"],
    )
    s = toggles.scale / np.sqrt(rho)
    return dm.reshape(shape) * s, dp.reshape(shape) * s, dz.reshape(shape) * s
