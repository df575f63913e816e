"""Trajectory ensembles: reproducible seeding, statistics and parameter sweeps."""

from __future__ import annotations

import hashlib
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from . import __version__
from .config import RunConfig
from .field import scale_to_area, sech_soliton
from .integrator import TrajectoryResult, effective_coupling, photon_scale, propagate
from .noise import BLOCK_STEPS, RNG_ALGORITHM, NoiseStreams
from .observables import (
    DegenerateEnsembleError,
    absorption,
    atomic_absorption,
    effective_g2,
    plus_p_variance,
    squeezing_ratio,
    to_db,
    uncertainty,
)

SWEEP_AXES = ("theta0", "gamma_par", "beta", "gamma0")
BOOTSTRAP_SEED_OFFSET = 0x5EED


class EnsembleError(RuntimeError):
    """Raised when an ensemble produces no usable trajectory."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class EnsembleStats:
    """Per-checkpoint ensemble statistics.

    ``S`` and ``stderr`` follow the inclusion policy of the run;
    ``S_excluding_diverged`` always drops trajectories that diverged anywhere.
    """

    z: np.ndarray
    area_mean: np.ndarray
    area_phase: np.ndarray
    stderr_area: np.ndarray
    mean_M: np.ndarray
    mean_M_imag: np.ndarray
    stderr_M_imag: np.ndarray
    stderr_M: np.ndarray
    var_plusP: np.ndarray
    S: np.ndarray
    stderr: np.ndarray
    diverged: np.ndarray
    completed: np.ndarray
    n_traj: int
    absorption: np.ndarray
    atomic_absorption: np.ndarray
    excitation: np.ndarray
    S_excluding_diverged: np.ndarray
    photon_energy: float
    g2: float
    manifest: dict = field(default_factory=dict)

    @property
    def S_dB(self) -> np.ndarray:
        return to_db(self.S)

    @property
    def diverged_fraction(self) -> np.ndarray:
        return self.diverged / self.n_traj

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

    def arrays(self) -> dict:
        keys = ("z", "area_mean", "area_phase", "stderr_area", "mean_M", "mean_M_imag", "stderr_M_imag", "stderr_M", "var_plusP",
                "S", "stderr", "diverged", "completed", "absorption", "atomic_absorption", "excitation",
                "S_excluding_diverged")
        return {k: getattr(self, k) for k in keys}

    def identical_to(self, other: "EnsembleStats") -> bool:
        a, b = self.arrays(), other.arrays()
        return all(np.array_equal(a[k], b[k], equal_nan=True) for k in a)


def initial_field(config: RunConfig):
    grid = config.tau_grid
    f = sech_soliton(grid, config.params.A, config.pulse.tau0, config.params.delta, 0.0, config.rates)
    return scale_to_area(f, config.pulse.area_over_pi * math.pi, grid.d_tau)


def run_trajectory(config: RunConfig, index: int, store_fields: bool | None = None) -> TrajectoryResult:
    """Trajectory ``index`` of the ensemble described by ``config``."""
    noisy = not config.deterministic
    streams = None
    sign = 1.0
    if noisy:
        seed_index = index
        if config.run.antithetic:
            seed_index, odd = divmod(index, 2)
            sign = -1.0 if odd else 1.0
        streams = NoiseStreams(config.run.master_seed, seed_index, config.run.noise_refine)
    return propagate(
        initial_field(config),
        config.tau_grid,
        config.frequency_grid,
        config.params,
        config.rates,
        config.step_scheme,
        config.checkpoint_z,
        toggles=config.noise if noisy else None,
        streams=streams,
        store_fields=config.run.store_fields if store_fields is None else store_fields,
        frame=config.run.frame,
        noise_sign=sign,
    )


def _run_range(args) -> list[TrajectoryResult]:
    config, lo, hi = args
    return [run_trajectory(config, i) for i in range(lo, hi)]


def _partition(n: int, parts: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, n, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_trajectories(config: RunConfig, workers: int = 1) -> list[TrajectoryResult]:
    """All trajectories in index order; deterministic runs compute a single one."""
    n = config.run.n_traj
    if config.deterministic:
        one = run_trajectory(config, 0)
        return [one] * n
    workers = max(1, min(int(workers), n))
    if workers == 1:
        return _run_range((config, 0, n))
    # static partition; results are gathered back in trajectory order
    chunks = _partition(n, workers * 4)
    with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("fork")) as pool:
        parts = list(pool.map(_run_range, [(config, lo, hi) for lo, hi in chunks]))
    return [r for part in parts for r in part]


def config_hash(config: RunConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def build_manifest(config: RunConfig, results: list[TrajectoryResult] | None = None, extra: dict | None = None) -> dict:
    sch = config.step_scheme
    grid = config.frequency_grid
    manifest = {
        "package_version": __version__,
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "derived_rates": config.rates.to_dict(),
        "frequency_grid": grid.to_dict(),
        "lineshape": {"kind": config.lineshape_obj.kind, "width": config.lineshape_obj.width},
        "grid": {"n_tau": config.tau_grid.n_tau, "d_tau": config.tau_grid.d_tau, "n_z": sch.n_z, "d_z": sch.d_z},
        "atoms_per_cell": config.params.atoms_per_cell(sch.d_z),
        "effective_G": effective_coupling(config.params, sch.d_z),
        "photon_energy": photon_scale(config.params, sch.d_z),
        "z_unit_m": config.params.z_unit,
        "rng": {"algorithm": RNG_ALGORITHM, "master_seed": config.run.master_seed, "antithetic": config.run.antithetic,
                "noise_refine": config.run.noise_refine, "block_steps": BLOCK_STEPS},
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    if results is not None:
        events = [
            {"trajectory": i, "z_diverged": r.z_diverged, "branch_flips": r.branch_flips}
            for i, r in enumerate(results)
            if r.diverged
        ]
        manifest["events"] = {
            "diverged": events,
            "branch_flips": [r.branch_flips for r in results] if not config.deterministic else [],
        }
    if extra:
        manifest.update(extra)
    return manifest


def _stack(results, attr) -> np.ndarray:
    return np.array([getattr(r, attr) for r in results])


def collect(config: RunConfig, results: list[TrajectoryResult]) -> EnsembleStats:
    """Reduce trajectory results (in index order) to ensemble statistics."""
    n = len(results)
    M = _stack(results, "energy")
    A = _stack(results, "area")
    E = _stack(results, "excitation")
    valid = _stack(results, "valid")
    any_div = np.array([r.diverged for r in results])
    completed = valid.sum(axis=0)
    diverged = n - completed
    z = results[0].z
    if not np.all(completed > 0):
        raise EnsembleError(
            "every trajectory diverged before the last checkpoint",
            {"z": z.tolist(), "completed": completed.tolist(), "n_traj": n},
        )
    sch = config.step_scheme
    nu = photon_scale(config.params, sch.d_z)
    g2 = effective_g2(nu, config.rates.v_g, config.params.L)
    deterministic = config.deterministic or n == 1

    def stats_for(mask):
        k = M.shape[1]
        mean = np.empty(k, complex)
        var = np.empty(k)
        S = np.empty(k)
        err = np.empty(k)
        for c in range(k):
            x = M[mask[:, c], c]
            mean[c] = x.mean() if x.size else np.nan
            if deterministic or x.size < 2:
                var[c], S[c], err[c] = 0.0, 1.0, 0.0
                continue
            var[c] = plus_p_variance(x)
            try:
                S[c] = squeezing_ratio(x, config.rates, g2, config.params.L)
            except DegenerateEnsembleError:
                S[c] = np.nan
            if x.size >= 100 and np.isfinite(S[c]):
                rng = np.random.default_rng([config.run.master_seed, BOOTSTRAP_SEED_OFFSET, c])
                err[c] = uncertainty(x, nu, config.run.n_boot, rng)
            else:
                err[c] = np.nan
        return mean, var, S, err

    mask_all = valid
    mask_excl = valid & ~any_div[:, None]
    mean, var, S, err = stats_for(mask_excl if config.run.exclude_diverged else mask_all)
    if np.any(any_div):
        S_ex = stats_for(mask_excl)[2] if not config.run.exclude_diverged else S.copy()
    else:
        S_ex = S.copy()

    def masked_mean(X, mask):
        out = np.empty(X.shape[1], X.dtype)
        for c in range(X.shape[1]):
            x = X[mask[:, c], c]
            out[c] = x.mean() if x.size else np.nan
        return out

    mask = mask_excl if config.run.exclude_diverged else mask_all
    a_mean = masked_mean(A, mask)
    e_mean = masked_mean(E, mask).real
    def masked_err(X, mask):
        out = np.zeros(X.shape[1])
        for c in range(X.shape[1]):
            x = X[mask[:, c], c]
            if x.size > 1 and not deterministic:
                out[c] = x.std(ddof=1) / math.sqrt(x.size)
        return out

    m_imag_err = masked_err(M.imag, mask)
    m_err = masked_err(M.real, mask)
    a_err = masked_err(np.abs(A), mask)
    return EnsembleStats(
        z=z,
        area_mean=np.abs(a_mean),
        area_phase=np.angle(a_mean),
        stderr_area=a_err,
        mean_M=mean.real,
        mean_M_imag=mean.imag,
        stderr_M_imag=m_imag_err,
        stderr_M=m_err,
        var_plusP=var,
        S=S,
        stderr=err,
        diverged=diverged,
        completed=completed,
        n_traj=n,
        absorption=absorption(mean.real[0], mean.real, eps=np.inf),
        atomic_absorption=np.where(z > 0, atomic_absorption(e_mean, np.where(z > 0, z, 1.0), config.params.Rz0), 0.0),
        excitation=e_mean,
        S_excluding_diverged=S_ex,
        photon_energy=nu,
        g2=g2,
        manifest=build_manifest(config, results),
    )


def run_ensemble(config: RunConfig, workers: int = 1) -> EnsembleStats:
    config.validate()
    return collect(config, run_trajectories(config, workers))


def apply_axis(config: RunConfig, axis: str, value: float) -> RunConfig:
    if axis == "theta0":
        return config.replace_in("pulse", area_over_pi=float(value))
    if axis == "gamma_par":
        return config.replace_in("params", gamma_par=float(value))
    if axis == "beta":
        return config.replace_in("params", beta_field=float(value), beta_atom=float(value))
    if axis == "gamma0":
        return config.replace_in("params", gamma0=float(value))
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


@dataclass
class SweepPoint:
    value: float
    stats: EnsembleStats | None
    error: str | None = None

    def row(self) -> dict:
        if self.stats is None:
            nan = float("nan")
            return {"value": self.value, "S_opt": nan, "S_opt_dB": nan, "z_opt": nan, "stderr": nan,
                    "absorption": nan, "atomic_absorption": nan, "area_out": nan, "error": self.error}
        s = self.stats
        return {
            "value": self.value,
            "S_opt": s.S_opt,
            "S_opt_dB": float(to_db(s.S_opt)),
            "z_opt": s.z_opt,
            "stderr": s.stderr_opt,
            "absorption": float(s.absorption[-1]),
            "atomic_absorption": float(s.atomic_absorption[-1]),
            "area_out": float(s.area_mean[-1] / math.pi),
            "error": None,
        }


def sweep(base: RunConfig, axis: str, values, workers: int = 1) -> list[SweepPoint]:
    """One ensemble per value, sorted by value; failures are recorded per point."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    values = sorted(float(v) for v in values)
    if not values:
        raise ValueError("sweep needs at least one value")
    out = []
    for v in values:
        try:
            out.append(SweepPoint(v, run_ensemble(apply_axis(base, axis, v), workers)))
        except Exception as exc:  # noqa: BLE001 - a failed point must not stop the sweep
            out.append(SweepPoint(v, None, f"{type(exc).__name__}: {exc}"))
    return out
