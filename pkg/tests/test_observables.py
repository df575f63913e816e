import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sitsqueeze.field import FieldState, TauGrid, scale_to_area, sech_soliton
from sitsqueeze.observables import (
    DegenerateEnsembleError,
    SqueezingCurve,
    absorption,
    atomic_absorption,
    effective_g2,
    plus_p_variance,
    pulse_area,
    pulse_energy,
    squeezing_from_moments,
    squeezing_ratio,
    to_db,
    uncertainty,
)
from sitsqueeze.params import PhysicalParams, derive_rates

GRID = TauGrid.from_step(-20, 20, 0.02)
RATES = derive_rates(PhysicalParams())
NU = 2e-4
G2 = effective_g2(NU, RATES.v_g, 1.0)


def test_area_examples():
    z = FieldState(np.zeros(GRID.n_tau, complex), np.zeros(GRID.n_tau, complex))
    assert pulse_area(z, GRID.d_tau) == 0
    f = sech_soliton(GRID, 1.0)
    scaled = FieldState(1.15 * f.omega, 1.15 * f.omega_dag)
    assert abs(pulse_area(scaled, GRID.d_tau)) == pytest.approx(2.3 * math.pi, rel=1e-6)


def test_energy_examples():
    f = sech_soliton(GRID, 1.0)
    assert pulse_energy(f, GRID.d_tau).real == pytest.approx(8.0, rel=1e-6)
    g = FieldState(1.7 * f.omega, 1.7 * f.omega_dag)
    assert pulse_energy(g, GRID.d_tau) == pytest.approx(1.7**2 * pulse_energy(f, GRID.d_tau), rel=1e-14)


def test_normalisation_links_g2_and_photon_energy():
    assert 4 * G2 * 1.0 / RATES.v_g == pytest.approx(NU)


def test_zero_variance_is_shot_noise():
    x = np.full(50, 8.0 + 0j)
    assert plus_p_variance(x) == 0.0
    assert squeezing_ratio(x, RATES, G2, 1.0) == 1.0


def test_squeezing_ratio_formula(rng):
    x = 8.0 + 0.05 * rng.standard_normal(1000)
    want = 1 + x.var() / (NU * x.mean())
    assert squeezing_ratio(x, RATES, G2, 1.0) == pytest.approx(want, rel=1e-10)


def test_degenerate_ensembles():
    with pytest.raises(DegenerateEnsembleError):
        squeezing_ratio(np.array([1.0]), RATES, G2, 1.0)
    with pytest.raises(DegenerateEnsembleError):
        squeezing_from_moments(np.array([0.1]), np.array([0.0]), NU)
    with pytest.raises(DegenerateEnsembleError):
        uncertainty(np.ones(10), NU)


samples = arrays(np.complex128, st.integers(2, 60),
                 elements=st.complex_numbers(min_magnitude=0.0, max_magnitude=0.5, allow_nan=False, allow_infinity=False))


@settings(max_examples=80, deadline=None)
@given(d=samples, phase=st.floats(0, 2 * math.pi))
def test_global_phase_rotation_invariance(d, phase):
    om = 1.0 + d  # one tau sample per trajectory is enough to build M
    rot = np.exp(1j * phase)
    M = np.conj(om) * om
    M_rot = np.conj(om * rot) * (om * rot)
    assert np.allclose(squeezing_ratio(M_rot, RATES, G2, 1.0), squeezing_ratio(M, RATES, G2, 1.0), rtol=1e-9)


@settings(max_examples=80, deadline=None)
@given(x=arrays(np.float64, st.integers(2, 80), elements=st.floats(5.0, 10.0)))
def test_duplicated_ensemble_gives_same_S(x):
    assert squeezing_ratio(np.repeat(x, 2), RATES, G2, 1.0) == pytest.approx(squeezing_ratio(x, RATES, G2, 1.0), rel=1e-9)


def test_constant_samples_have_zero_stderr():
    assert uncertainty(np.full(200, 8.0), NU) == 0.0


def test_bootstrap_scaling_and_delta_method(rng):
    mu, sigma, n = 8.0, 0.05, 4000
    x = mu + sigma * rng.standard_normal(n)
    full = uncertainty(x, NU, 400, np.random.default_rng(1))
    quarter = uncertainty(x[: n // 4], NU, 400, np.random.default_rng(2))
    assert quarter / full == pytest.approx(2.0, rel=0.25)
    # delta method for S = 1 + v/(nu m) with Gaussian samples
    v = sigma**2
    delta = math.sqrt(2 * v**2 / (n * NU**2 * mu**2) + v**3 / (n * NU**2 * mu**4))
    assert full == pytest.approx(delta, rel=0.2)


def test_absorption_examples():
    assert absorption(8.0, 8.0) == 0.0
    assert absorption(8.0, 6.0) == pytest.approx(0.25)
    assert absorption(8.0, 9.0) == -1e-3  # clipped
    with pytest.raises(ValueError):
        absorption(0.0, 1.0)
    assert atomic_absorption(0.5, 1.0, -0.5) == pytest.approx(0.5)


def test_curve_summary():
    c = SqueezingCurve(np.array([0, 0.5, 1.0]), np.array([1.0, 0.6, 0.8]), np.array([0, 0.02, 0.03]))
    assert c.S_opt == 0.6 and c.z_opt == 0.5 and c.stderr_opt == 0.02
    assert c.S_dB[1] == pytest.approx(10 * math.log10(0.6))
    assert to_db(1.0) == 0.0
