import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sitsqueeze.field import (
    ConfigurationError,
    FieldState,
    TauGrid,
    read_snapshots,
    scale_to_area,
    sech_soliton,
    shift_in_tau,
    soliton_phase,
    write_snapshots,
)
from sitsqueeze.observables import pulse_area, pulse_energy
from sitsqueeze.params import PhysicalParams, derive_rates

GRID = TauGrid.from_step(-20.0, 20.0, 0.02)


def test_peak_and_reality_at_centre():
    f = sech_soliton(GRID, 1.0, 0.0)
    i = np.argmin(abs(GRID.tau))
    assert f.omega[i] == pytest.approx(2.0)
    assert np.all(f.omega.imag == 0)
    assert np.array_equal(f.omega_dag, np.conj(f.omega))


def test_resonant_phase_independent_of_z():
    rates = derive_rates(PhysicalParams())
    a = sech_soliton(GRID, 1.0, 0.0, 0.0, 0.0, rates)
    b = sech_soliton(GRID, 1.0, 0.0, 0.0, 3.7, rates)
    assert np.array_equal(a.omega, b.omega)


def test_detuned_phase():
    assert soliton_phase(0.5, 1.0, 1.0, 2.0) == pytest.approx(0.8)
    rates = derive_rates(PhysicalParams(G=1e-4, rho=1e4, delta=0.5))
    f = sech_soliton(GRID, 1.0, 0.0, 0.5, 2.0, rates)
    i = np.argmin(abs(GRID.tau))
    assert np.angle(f.omega[i]) == pytest.approx(0.8, abs=1e-12)


def test_area_and_energy_of_sech():
    f = sech_soliton(GRID, 1.0)
    assert abs(abs(pulse_area(f, GRID.d_tau)) - 2 * math.pi) < 1e-6
    assert pulse_energy(f, GRID.d_tau).real == pytest.approx(8.0, rel=1e-6)


def test_scale_to_area():
    f = sech_soliton(GRID, 1.0)
    g = scale_to_area(f, 2.5 * math.pi, GRID.d_tau)
    assert np.max(abs(g.omega)) / np.max(abs(f.omega)) == pytest.approx(1.25, rel=1e-6)
    assert abs(pulse_area(g, GRID.d_tau)) == pytest.approx(2.5 * math.pi, rel=1e-10)
    h = scale_to_area(f, abs(pulse_area(f, GRID.d_tau)), GRID.d_tau)
    assert np.allclose(h.omega, f.omega, rtol=1e-14, atol=0)


@settings(max_examples=40, deadline=None)
@given(delta=st.floats(-1, 1), target=st.floats(0.2, 5.0))
def test_scaling_changes_modulus_only(delta, target):
    rates = derive_rates(PhysicalParams(delta=delta))
    f = sech_soliton(GRID, 1.0, 0.0, delta, 0.5, rates)
    g = scale_to_area(f, target * math.pi, GRID.d_tau)
    big = abs(f.omega) > 1e-8
    assert np.allclose(np.angle(g.omega[big]), np.angle(f.omega[big]), atol=1e-9)
    assert abs(pulse_area(g, GRID.d_tau)) == pytest.approx(target * math.pi, rel=1e-10)


def test_pulse_must_fit_window():
    with pytest.raises(ConfigurationError):
        sech_soliton(TauGrid.from_step(-2.0, 20.0, 0.02), 1.0)
    with pytest.raises(ConfigurationError):
        sech_soliton(GRID, 1.0, tau0=19.5)


def test_shift_in_tau():
    f = sech_soliton(GRID, 1.0)
    g = shift_in_tau(f.omega.real, 1.0, GRID.d_tau)
    want = sech_soliton(GRID, 1.0, tau0=1.0).omega.real
    assert np.max(abs(g - want)) < 1e-6


def test_snapshot_round_trip(tmp_path):
    f = sech_soliton(GRID, 1.0)
    om = np.stack([f.omega, 1.1 * f.omega])
    z = np.array([0.0, 0.5])
    path = tmp_path / "fields.sitf"
    write_snapshots(path, GRID, z, om, np.conj(om))
    grid, z2, om2, omd2 = read_snapshots(path)
    assert grid == GRID and np.array_equal(z2, z)
    assert np.array_equal(om2, om) and np.array_equal(omd2, np.conj(om))
