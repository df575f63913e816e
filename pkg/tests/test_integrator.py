import math

import numpy as np
import pytest

from sitsqueeze import RunConfig
from sitsqueeze.config import load_named
from sitsqueeze.ensemble import initial_field, run_ensemble, run_trajectories, run_trajectory
from sitsqueeze.field import ConfigurationError, FieldState, TauGrid, sech_soliton
from sitsqueeze.integrator import StepScheme, propagate, step_atoms, step_field
from sitsqueeze.medium import FrequencyGrid, Lineshape, discretize_lineshape, init_ground_state
from sitsqueeze.noise import NoiseStreams, NoiseToggles
from sitsqueeze.params import PhysicalParams, derive_rates

SHARP = FrequencyGrid(np.array([0.0]), np.array([1.0]))


def _const_field(n, omega):
    return FieldState(np.full(n, omega + 0j), np.full(n, np.conj(omega) + 0j))


def test_free_evolution_is_identity():
    st = init_ground_state(SHARP, 200)
    st.R_minus[:, 0] = 0.2 + 0.1j
    st.R_plus[:, 0] = 0.2 - 0.1j
    st.R_z[:, 0] = -0.3
    out = step_atoms(st, _const_field(200, 0.0), derive_rates(PhysicalParams()), None, 0.02, SHARP)
    assert np.all(out.R_minus == 0.2 + 0.1j) and np.all(out.R_z == -0.3)


def test_transverse_decay():
    rates = derive_rates(PhysicalParams(gamma0=0.1))
    n, dt = 501, 0.02
    st = init_ground_state(SHARP, n)
    st.R_minus[:, 0] = 0.3
    out = step_atoms(st, _const_field(n, 0.0), rates, None, dt, SHARP)
    tau = np.arange(n) * dt
    assert np.allclose(out.R_minus[0], 0.3 * np.exp(-rates.gamma_perp * tau), rtol=1e-9, atol=0)


@pytest.mark.parametrize("kind", ["rk4", "semi_implicit_midpoint"])
def test_rabi_oscillation(kind):
    omega, dt = 1.0, 0.02
    n = int(round(2 * math.pi / omega * 10 / dt)) + 1
    st = init_ground_state(SHARP, n)
    out = step_atoms(st, _const_field(n, omega), derive_rates(PhysicalParams()), None, dt, SHARP, kind)
    tau = np.arange(n) * dt
    err = max(abs(out.R_z[0] - (-0.5 * np.cos(omega * tau))).max(), abs(out.R_minus[0] - (-0.5 * np.sin(omega * tau))).max())
    tol = 1e-4 if kind == "rk4" else 5e-3
    assert err / 0.5 < tol


def test_bloch_length_conserved_without_damping():
    grid = TauGrid.from_step(-15, 15, 0.02)
    f = sech_soliton(grid, 1.0)
    st = init_ground_state(SHARP, grid.n_tau)
    out = step_atoms(st, f, derive_rates(PhysicalParams()), None, grid.d_tau, SHARP)
    drift = abs(out.bloch_length()[0] - 0.25).max()
    assert drift / (grid.tau_max - grid.tau_min) < 1e-6


def test_field_step_vacuum_and_loss():
    grid = TauGrid.from_step(-10, 10, 0.05)
    f = sech_soliton(grid, 1.0)
    st = init_ground_state(SHARP, grid.n_tau)
    same = step_field(f, st, SHARP, derive_rates(PhysicalParams()), None, 0.1)
    assert np.array_equal(same.omega, f.omega)
    rates = derive_rates(PhysicalParams(kappa=0.3, G=0.0))
    g = f
    for _ in range(20):
        g = step_field(g, st, SHARP, rates, None, 0.1)
    assert np.allclose(abs(g.omega), abs(f.omega) * math.exp(-0.3 * 2.0 / 2), rtol=1e-12)


def test_advection_cfl_guard():
    grid = TauGrid.from_step(-10, 10, 0.05)
    f = sech_soliton(grid, 1.0)
    st = init_ground_state(SHARP, grid.n_tau)
    rates = derive_rates(PhysicalParams(G=1e-4, rho=1e4))
    with pytest.raises(ConfigurationError):
        step_field(f, st, SHARP, rates, None, 1.0, d_tau=0.05, advect=True)
    # in the group frame the drift term advances the pulse to earlier tau
    moved = f
    for _ in range(20):
        moved = step_field(moved, st, SHARP, rates, None, 0.05, d_tau=0.05, advect=True)
    shift = (np.argmax(abs(f.omega)) - np.argmax(abs(moved.omega))) * 0.05
    assert shift == pytest.approx(20 * 0.05 * (1 / rates.v_g - 1), abs=0.1)


def _broadened(theta, L):
    return load_named("default").with_overrides(["n_traj=1", "noise=false", f"L={L}", f"area_over_pi={theta}"])


@pytest.mark.parametrize("theta,L,direction", [(2.5, 3.0, -1), (1.8, 3.0, 1), (3.2, 1.5, 1)])
def test_area_moves_monotonically_toward_attractor(theta, L, direction):
    s = run_ensemble(_broadened(theta, L))
    a = s.area_mean / math.pi
    assert np.all(direction * np.diff(a) > 0)


def test_energy_bookkeeping():
    c = RunConfig().with_overrides(["n_traj=1", "noise=false", "L=2.0", "area_over_pi=2.5", "tau_max=60"])
    s = run_ensemble(c)
    G_rho = c.params.G_rho
    total = s.mean_M + 2 * G_rho * s.excitation
    assert np.max(abs(total - s.mean_M[0])) / s.mean_M[0] < 1e-4


def test_disabled_noise_matches_deterministic_bit_for_bit():
    c = load_named("default").with_overrides(["L=0.3", "n_bands=4", "tau_max=15"])
    grid = c.tau_grid
    args = (initial_field(c), grid, c.frequency_grid, c.params, c.rates, c.step_scheme, c.checkpoint_z)
    det = propagate(*args)
    off = NoiseToggles(thermal_field=False, pump=False, dephasing=False, coupling=False, z_channel=False)
    quiet = propagate(*args, toggles=off, streams=NoiseStreams(1, 0))
    zero = propagate(*args, toggles=NoiseToggles(scale=0.0), streams=NoiseStreams(1, 0))
    for r in (quiet, zero):
        assert np.array_equal(r.energy, det.energy) and np.array_equal(r.area, det.area)


def test_chunking_does_not_change_a_trajectory(monkeypatch):
    from sitsqueeze import integrator

    c = load_named("default").with_overrides(["L=0.2", "n_bands=4", "tau_max=15"])
    a = run_trajectory(c, 3)
    monkeypatch.setattr(integrator, "CHUNK_STEPS", 37)
    b = run_trajectory(c, 3)
    assert np.array_equal(a.energy, b.energy)


def test_ito_consistency_in_noise_scale():
    """Antithetic pairs cancel the O(s) part of each path, so the pair mean
    deviates from the deterministic run at O(s^2) with O(s^2) scatter."""
    base = RunConfig().with_overrides([
        'lineshape.kind="gaussian"', "lineshape.width=0.5", "n_bands=4", 'method="equal_weight"', "d_tau=0.025",
        "tau_min=-8", "tau_max=15", "L=0.3", "area_over_pi=2.5", "antithetic=true", "n_traj=200", "rho=1e3",
    ])
    det = run_trajectories(base.with_overrides(["noise=false", "n_traj=1"]))[0].energy[-1].real
    slope, err = [], []
    for s in (0.125, 0.25, 0.5):
        M = np.array([r.energy[-1].real for r in run_trajectories(base.with_overrides([f"noise.scale={s}"]))])
        P = 0.5 * (M[0::2] + M[1::2]) - det
        slope.append(P.mean() / s**2)
        err.append(P.std(ddof=1) / math.sqrt(P.size) / s**2)
    # scatter / s^2 is scale independent, and so is the mean within errors
    assert max(err) / min(err) < 1.5
    for k in range(2):
        assert abs(slope[k] - slope[k + 1]) < 3 * math.hypot(err[k], err[k + 1])


@pytest.mark.parametrize("frame", ["light", "group"])
def test_frames_share_integrated_observables(frame):
    c = RunConfig().with_overrides(["n_traj=1", "noise=false", "L=1.0", "tau_max=20", f"frame=\"{frame}\""])
    r = run_trajectory(c, 0, store_fields=True)
    ref = run_trajectory(c.with_overrides(['frame="light"']), 0)
    assert np.array_equal(r.energy, ref.energy)
    assert r.omega.shape == (len(r.z), c.tau_grid.n_tau)


def test_group_frame_shifts_the_peak():
    c = RunConfig().with_overrides(["n_traj=1", "noise=false", "L=2.0", "tau_min=-10", "tau_max=40", "area_over_pi=2.0"])
    lt = run_trajectory(c, 0, store_fields=True)
    gr = run_trajectory(c.with_overrides(['frame="group"']), 0, store_fields=True)
    d_tau = c.tau_grid.d_tau
    delay = 2.0 * (1 / c.rates.v_g - 1)
    shift = (np.argmax(abs(lt.omega[-1])) - np.argmax(abs(gr.omega[-1]))) * d_tau
    assert shift == pytest.approx(delay, abs=2 * d_tau)
