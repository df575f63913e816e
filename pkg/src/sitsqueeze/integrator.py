"""Stochastic Maxwell-Bloch integration of single trajectories.

``propagate`` marches the whole medium in retarded time with the compiled
kernel.  ``step_atoms`` and ``step_field`` expose the two halves of the
equations separately for a single cell, mainly for checks against closed
forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .field import ConfigurationError, FieldState, TauGrid, shift_in_tau
from .medium import AtomicState, FrequencyGrid
from .noise import MODELS, NoiseStreams, NoiseToggles, field_noise_amplitude
from .params import DerivedRates, PhysicalParams

SCHEMES = {"euler_maruyama": _kernels.SCHEME_EULER, "semi_implicit_midpoint": _kernels.SCHEME_MIDPOINT, "rk4": _kernels.SCHEME_RK4}
DIVERGENCE_THRESHOLD = 1e6
CHUNK_STEPS = 256


@dataclass(frozen=True)
class StepScheme:
    """Drift scheme and step sizes.  Noise is always added as Ito increments."""

    kind: str = "rk4"
    d_tau: float = 0.02
    d_z: float = 0.1
    n_z: int = 10

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.kind!r}; choose from {sorted(SCHEMES)}")
        if not (self.d_tau > 0 and self.d_z > 0) or self.n_z < 1:
            raise ConfigurationError("scheme needs d_tau > 0, d_z > 0 and n_z >= 1")

    @property
    def length(self) -> float:
        return self.d_z * self.n_z

    @classmethod
    def for_length(cls, L: float, d_z: float, d_tau: float, kind: str = "rk4") -> "StepScheme":
        n_z = max(1, int(round(L / d_z)))
        return cls(kind, d_tau, L / n_z, n_z)


def rate_vector(rates: DerivedRates, d_tau: float) -> np.ndarray:
    return np.array(
        [rates.gamma_perp, rates.gamma_par, rates.relax_target, rates.gamma_p, rates.W12, rates.sigma_ss, abs(rates.Rz0), d_tau],
        dtype=float,
    )


def noise_flags(toggles: NoiseToggles | None, scheme: int = _kernels.SCHEME_RK4, field_on: bool = False, store: bool = False) -> np.ndarray:
    t = toggles or NoiseToggles(scale=0.0)
    return np.array(
        [scheme, MODELS.index(t.model), t.symmetrize, t.coupling, t.dephasing, t.pump, t.z_channel, t.atomic_on, field_on, store],
        dtype=np.int64,
    )


def midpoint_values(values: np.ndarray) -> np.ndarray:
    """Values half-way between grid points: 4-point interpolation, linear at the ends."""
    v = np.asarray(values)
    mid = 0.5 * (v[:-1] + v[1:])
    if v.size >= 4:
        mid[1:-1] = (-v[:-3] + 9.0 * v[1:-2] + 9.0 * v[2:-1] - v[3:]) / 16.0
    return mid


def effective_coupling(params: PhysicalParams, d_z: float) -> float:
    """Per-atom coupling G consistent with the atom number used by the noise."""
    return params.G_rho * d_z / params.atoms_per_cell(d_z)


def photon_scale(params: PhysicalParams, d_z: float) -> float:
    """Energy M carried by one photon: nu = 4 |Rz0| G."""
    return 4.0 * abs(params.Rz0) * effective_coupling(params, d_z)


@dataclass
class NoiseDraw:
    """Unit-variance draws for one cell, keyed by kind, each shaped (n_tau, n_bands).

    The multiplicative amplitudes are applied during the step because they
    depend on the evolving state.
    """

    xi: dict
    atoms_per_band: np.ndarray
    toggles: NoiseToggles = dc_field(default_factory=NoiseToggles)


def step_atoms(
    state: AtomicState,
    field: FieldState,
    rates: DerivedRates,
    noise: NoiseDraw | None,
    d_tau: float,
    grid: FrequencyGrid,
    kind: str = "rk4",
) -> AtomicState:
    """Integrate the Bloch equations of one cell over the tau window.

    Column 0 of ``state`` is the initial condition; the returned state holds
    the whole history in the driving ``field``.
    """
    nb, n = state.R_minus.shape
    if field.omega.shape[0] != n:
        raise ConfigurationError("field and atomic state use different tau grids")
    z = np.zeros((n, nb))
    zc = np.zeros((n, nb), complex)
    if noise is not None and noise.toggles.atomic_on:
        sq = noise.toggles.scale * np.sqrt(d_tau / np.asarray(noise.atoms_per_band, float))
        get = lambda k, like: (np.asarray(noise.xi[k]) * sq) if k in noise.xi else like
        xJ, xJd, xz = get("J", z), get("J_dag", z), get("z", z)
        xP, xo = get("P", zc).astype(complex), get("o", zc).astype(complex)
        flags = noise_flags(noise.toggles, SCHEMES[kind])
    else:
        xJ = xJd = xz = z
        xP = xo = zc
        flags = noise_flags(None, SCHEMES[kind])
    om = np.ascontiguousarray(field.omega, complex)
    omd = np.ascontiguousarray(field.omega_dag, complex)
    out = [np.empty((nb, n), complex) for _ in range(3)]
    _kernels.sweep_cell(
        om, omd, midpoint_values(om), midpoint_values(omd), grid.detuning,
        state.R_minus[:, 0].astype(complex), state.R_plus[:, 0].astype(complex), state.R_z[:, 0].astype(complex),
        rate_vector(rates, d_tau), SCHEMES[kind], flags,
        np.ascontiguousarray(xJ, float), np.ascontiguousarray(xJd, float), np.ascontiguousarray(xz, float),
        np.ascontiguousarray(xP), np.ascontiguousarray(xo), out[0], out[1], out[2],
    )
    return AtomicState(out[0], out[1], out[2], state.N_jm.copy())


def step_field(
    field: FieldState,
    state: AtomicState,
    grid: FrequencyGrid,
    rates: DerivedRates,
    xi_alpha: np.ndarray | None,
    d_z: float,
    d_tau: float | None = None,
    advect: bool = False,
    c: float = 1.0,
) -> FieldState:
    """Advance the field across one cell from the cell's polarization history.

    Omega(z + dz) = exp(-kappa dz/2) Omega + dz [G rho sum_m w_m R-_m + F_Omega],
    with Omega_dag updated from R+ and conj(F_Omega).  With ``advect`` the
    residual frame drift (1/c - 1/v_g) d/dtau is applied by upwind
    differencing, which requires |1/c - 1/v_g| dz <= d_tau.
    """
    att = math.exp(-0.5 * rates.kappa * d_z)
    src = rates.G_rho * (grid.weight @ state.R_minus)
    srcd = rates.G_rho * (grid.weight @ state.R_plus)
    om = att * field.omega + d_z * src
    omd = att * field.omega_dag + d_z * srcd
    if xi_alpha is not None:
        F = field_noise_amplitude(rates) * np.asarray(xi_alpha)
        om = om + d_z * F
        omd = omd + d_z * np.conj(F)
    if advect:
        if d_tau is None:
            raise ConfigurationError("advection needs d_tau")
        speed = 1.0 / rates.v_g - 1.0 / c
        cfl = speed * d_z / d_tau
        if cfl > 1.0:
            raise ConfigurationError(f"advection CFL number {cfl:.3g} exceeds 1")
        for arr in (om, omd):
            arr[:-1] += cfl * (arr[1:] - arr[:-1])
    return FieldState(om, omd, field.z + d_z)


@dataclass
class TrajectorySnapshot:
    z: float
    field: FieldState | None
    area: complex
    energy: complex
    excitation: float


@dataclass
class TrajectoryResult:
    """Per-checkpoint observables of one trajectory.

    ``excitation`` is the length integral of the band-weighted residual
    inversion change, int_0^z sum_m w_m (Rz_end - Rz0) dz'.  Entries past a
    divergence are NaN and ``valid`` marks the usable checkpoints.
    """

    z: np.ndarray
    energy: np.ndarray
    area: np.ndarray
    excitation: np.ndarray
    valid: np.ndarray
    diverged: bool = False
    z_diverged: float | None = None
    branch_flips: int = 0
    omega: np.ndarray | None = None
    omega_dag: np.ndarray | None = None

    def snapshots(self) -> list[TrajectorySnapshot]:
        out = []
        for k, z in enumerate(self.z):
            f = None
            if self.omega is not None:
                f = FieldState(self.omega[k], self.omega_dag[k], float(z))
            out.append(TrajectorySnapshot(float(z), f, complex(self.area[k]), complex(self.energy[k]), float(self.excitation[k])))
        return out


def checkpoint_indices(checkpoints, scheme: StepScheme) -> np.ndarray:
    z = np.asarray(checkpoints, dtype=float)
    k = np.rint(z / scheme.d_z).astype(np.int64)
    if np.any(np.abs(k * scheme.d_z - z) > 1e-9 * max(1.0, scheme.length)) or np.any(k < 0) or np.any(k > scheme.n_z):
        raise ConfigurationError("checkpoints must lie on cell boundaries inside the medium")
    if np.any(np.diff(k) <= 0):
        raise ConfigurationError("checkpoints must be strictly increasing")
    return k


def propagate(
    initial: FieldState,
    tau_grid: TauGrid,
    grid: FrequencyGrid,
    params: PhysicalParams,
    rates: DerivedRates,
    scheme: StepScheme,
    checkpoints,
    toggles: NoiseToggles | None = None,
    streams: NoiseStreams | None = None,
    store_fields: bool = False,
    frame: str = "light",
    threshold: float = DIVERGENCE_THRESHOLD,
    noise_sign: float = 1.0,
) -> TrajectoryResult:
    """March one trajectory through the medium; atoms start in the ground state.

    Noise is on when ``toggles`` and ``streams`` are both given.  ``frame``
    selects how stored field snapshots are labelled: 'light' keeps the
    retarded time of the vacuum frame, 'group' re-samples them in the frame
    moving at v_g.  Integrated observables do not depend on the frame.
    ``noise_sign=-1`` flips every draw, giving the antithetic partner of a
    trajectory.
    """
    if frame not in ("light", "group"):
        raise ConfigurationError("frame must be 'light' or 'group'")
    n = tau_grid.n_tau
    nz, nb = scheme.n_z, grid.n_bands
    dtau, dz = tau_grid.d_tau, scheme.d_z
    if abs(dtau - scheme.d_tau) > 1e-9 * dtau:
        raise ConfigurationError("tau grid step and scheme d_tau differ")
    ck = checkpoint_indices(checkpoints, scheme)
    n_cell = params.atoms_per_cell(dz)
    noisy = toggles is not None and streams is not None and toggles.scale > 0
    atomic_on = noisy and toggles.atomic_on
    famp = 0.0
    if noisy and toggles.thermal_field:
        G_eff = effective_coupling(params, dz)
        famp = 2.0 * math.sqrt(G_eff * rates.kappa * rates.n_bar_field) * math.sqrt(dz / dtau) * toggles.scale * noise_sign
    field_on = famp > 0.0
    flags = noise_flags(toggles if atomic_on else None, SCHEMES[scheme.kind], field_on, store_fields)

    om = np.ascontiguousarray(initial.omega, complex)
    omd = np.ascontiguousarray(initial.omega_dag, complex)
    om_mid, omd_mid = midpoint_values(om), midpoint_values(omd)
    sq_b = np.zeros(nb)
    if atomic_on:
        sq_b = noise_sign * toggles.scale * np.sqrt(dtau / (n_cell * grid.weight))

    rm = np.zeros((nz, nb), complex)
    rp = np.zeros((nz, nb), complex)
    rz = np.full((nz, nb), params.Rz0, dtype=complex)
    nck = ck.size
    M = np.zeros(nck, complex)
    A = np.zeros(nck, complex)
    snap = np.zeros((nck, n) if store_fields else (1, 1), complex)
    snapd = np.zeros_like(snap)
    prev = np.zeros((nz, nb, 3), complex)
    status = np.array([nz, -1, 0], dtype=np.int64)
    rv = rate_vector(rates, dtau)
    empty_r = np.zeros((1, 1, 1))
    empty_c = np.zeros((1, 1, 1), complex)
    empty_a = np.zeros((1, 1), complex)
    t = toggles

    for i0 in range(0, n, CHUNK_STEPS):
        i1 = min(n, i0 + CHUNK_STEPS)
        if atomic_on:
            xJ = streams.unit_steps("J", i0, i1, (nz, nb)) if t.coupling else empty_r
            xJd = streams.unit_steps("J_dag", i0, i1, (nz, nb)) if t.coupling else empty_r
            xz = streams.unit_steps("z", i0, i1, (nz, nb))
            xP = streams.unit_steps("P", i0, i1, (nz, nb)) if t.dephasing else empty_c
            xo = streams.unit_steps("o", i0, i1, (nz, nb)) if t.pump else empty_c
        else:
            xJ = xJd = xz = empty_r
            xP = xo = empty_c
        xa = streams.unit_steps("alpha", i0, i1, (nz,)) if field_on else empty_a
        _kernels.march(
            om, omd, om_mid, omd_mid, grid.detuning, grid.weight, sq_b, rv, params.G_rho * dz,
            math.exp(-0.25 * rates.kappa * dz), math.exp(-0.5 * rates.kappa * dz), flags, famp, ck,
            rm, rp, rz, M, A, snap, snapd, prev, status, i0, i1, xJ, xJd, xz, xP, xo, xa, threshold,
        )

    nz_act = int(status[0])
    valid = ck <= nz_act
    exc_cell = (rz.real - params.Rz0) @ grid.weight
    cum = np.concatenate([[0.0], np.cumsum(exc_cell) * dz])
    excitation = np.where(valid, cum[np.minimum(ck, nz)], np.nan)
    energy = np.where(valid, M, np.nan + 0j)
    area = np.where(valid, A, np.nan + 0j)
    z = ck * dz
    result = TrajectoryResult(
        z=z, energy=energy, area=area, excitation=excitation, valid=valid,
        diverged=nz_act < nz, z_diverged=(nz_act * dz if nz_act < nz else None),
        branch_flips=int(status[2]),
    )
    if store_fields:
        snap[~valid] = np.nan
        snapd[~valid] = np.nan
        if frame == "group":
            delay = z * (1.0 / rates.v_g - 1.0 / params.c)
            for k in range(nck):
                if valid[k]:
                    snap[k] = shift_in_tau(snap[k], -delay[k], dtau)
                    snapd[k] = shift_in_tau(snapd[k], -delay[k], dtau)
        result.omega, result.omega_dag = snap, snapd
    return result
