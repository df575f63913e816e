import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from sitsqueeze.params import (
    DomainError,
    PhysicalParams,
    derive_rates,
    dipole_coupling,
    forced_rates,
    group_velocity,
    thermal_occupation,
)


def test_zero_temperature_occupation_is_exactly_zero():
    assert thermal_occupation(None) == 0.0
    assert thermal_occupation(math.inf) == 0.0


def test_occupation_at_ln2_is_one():
    assert thermal_occupation(math.log(2.0)) == pytest.approx(1.0, rel=1e-14)


def test_occupation_in_optimal_window_matches_extended_precision():
    beta = 4e7
    mpmath.mp.dps = 50
    exact = 1 / (mpmath.exp(beta) - 1)
    series = mpmath.exp(-beta) * (1 + mpmath.exp(-beta))
    assert abs(exact - series) < 1e-30 * abs(series) + mpmath.mpf(10) ** -400000
    assert thermal_occupation(beta) == float(exact) == 0.0


@pytest.mark.parametrize("beta", [0.01, 0.5, 3.0, 40.0])
def test_occupation_against_mpmath(beta):
    mpmath.mp.dps = 40
    assert thermal_occupation(beta) == pytest.approx(float(1 / (mpmath.exp(beta) - 1)), rel=1e-13)


@pytest.mark.parametrize("beta", [0.0, -1.0])
def test_nonpositive_beta_is_a_domain_error(beta):
    with pytest.raises(DomainError):
        thermal_occupation(beta)


def test_zero_temperature_rates():
    r = derive_rates(PhysicalParams(gamma0=0.1))
    assert (r.W21, r.W12, r.gamma_par, r.gamma_p) == pytest.approx((0.1, 0.0, 0.1, 0.3))
    assert r.gamma_perp == pytest.approx(0.35)
    assert r.sigma_ss == -1.0


def test_forced_symmetric_rates_give_zero_steady_state():
    r = forced_rates(derive_rates(PhysicalParams(gamma0=0.1)), 0.2, 0.2)
    assert r.sigma_ss == 0.0


def test_vacuum_group_velocity():
    assert derive_rates(PhysicalParams(G=0.0)).v_g == 1.0
    assert group_velocity(0.0, 1.0, 0.0, 2.0) == 2.0


def test_group_velocity_formula():
    r = derive_rates(PhysicalParams(G=1e-4, rho=1e4, A=2.0, delta=1.0))
    assert 1 / r.v_g == pytest.approx(1 + 0.5 * 1.0 / 5.0)


def test_gamma_par_override_keeps_ratio():
    r = derive_rates(PhysicalParams(gamma0=1e-4, gamma_par=1e-6, beta_atom=math.log(2.0)))
    assert r.gamma_par == pytest.approx(1e-6)
    assert r.W21 / r.W12 == pytest.approx(2.0)


def test_dipole_coupling():
    assert dipole_coupling(0.0, 1.0, 1.0)[0] == 0.0
    g2a, Ga = dipole_coupling(1e-4, 0.8, 2.0)
    g2b, Gb = dipole_coupling(1e-4, 0.8, 4.0)
    assert g2b == pytest.approx(g2a / 2) and Gb == pytest.approx(Ga)


def test_dipole_coupling_symbolic():
    g0, lam, V, c = sp.symbols("gamma0 lambda0 V c", positive=True)
    g2 = 3 * g0 * c * lam**2 / (4 * V)
    vals = {g0: sp.Rational(1, 10000), lam: sp.Rational(8, 10), V: 2, c: 1}
    want_g2, want_G = float(g2.subs(vals)), float((V * g2 / c).subs(vals))
    got = dipole_coupling(1e-4, 0.8, 2.0)
    assert got == pytest.approx((want_g2, want_G), rel=1e-14)


@pytest.mark.parametrize("field", [{"gamma0": -1}, {"kappa": -1}, {"rho": 0}, {"A": 0}, {"L": 0}, {"N_cell": 0.5}])
def test_invalid_params_rejected(field):
    with pytest.raises(DomainError):
        PhysicalParams(**field)


@settings(max_examples=200, deadline=None)
@given(
    gamma0=st.floats(0, 1), beta=st.one_of(st.none(), st.floats(1e-3, 1e3)),
)
def test_steady_state_bounds(gamma0, beta):
    r = derive_rates(PhysicalParams(gamma0=gamma0, beta_atom=beta))
    assert -1.0 <= r.sigma_ss <= 0.0
    assert r.W21 >= r.W12
    if r.n_bar_atom == 0:
        assert r.sigma_ss == -1.0
    elif gamma0 > 0 and r.n_bar_atom > 1e-12:
        assert r.sigma_ss > -1.0


@settings(max_examples=200, deadline=None)
@given(g1=st.floats(0, 10), g2=st.floats(0, 10), a=st.floats(0.1, 5), d=st.floats(-3, 3))
def test_group_velocity_monotone(g1, g2, a, d):
    lo, hi = sorted((g1, g2))
    assert group_velocity(hi, a, d) <= group_velocity(lo, a, d) <= 1.0
    assert group_velocity(hi, a * 1.5, d) >= group_velocity(hi, a, d)


def test_derive_rates_is_pure():
    p = PhysicalParams(gamma0=0.3, beta_atom=0.7, beta_field=1.1, kappa=0.01)
    assert derive_rates(p) == derive_rates(p)


def test_params_round_trip():
    p = PhysicalParams(gamma0=0.3, beta_atom=0.7, N_cell=500)
    assert PhysicalParams.from_dict(p.to_dict()) == p
    assert PhysicalParams().atoms_per_cell(0.1) == pytest.approx(1000.0)
