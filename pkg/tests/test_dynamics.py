"""Orbit integration against the elliptic-integral predictions."""

import math
from fractions import Fraction as F

import numpy as np
import pytest

from pendinv.actions import period_T_numeric, rotation_W_numeric
from pendinv.dynamics import (PhaseState, geometry_report,
                              initial_condition, integrate, orbits_at_energy,
                              periodic_orbit_search, rotation_number_measured,
                              vector_field)
from pendinv.elliptic import EnergyMomentum


def test_vector_field_equilibria():
    for r in ([0.0, 0.0, 1.0], [0.0, 0.0, -1.0]):
        state = PhaseState(np.array(r), np.zeros(3))
        dr, dp = vector_field(state)
        assert np.allclose(dr, 0) and np.allclose(dp, 0)


def test_energy_conserved_along_field():
    rng = np.random.default_rng(0)
    for _ in range(8):
        r = rng.normal(size=3)
        r /= np.linalg.norm(r)
        p = rng.normal(size=3)
        p -= (r @ p) * r
        state = PhaseState(r, p)
        dr, dp = vector_field(state)
        eps = 1e-6
        plus = PhaseState(r + eps * dr, p + eps * dp).energy
        minus = PhaseState(r - eps * dr, p - eps * dp).energy
        assert abs(plus - minus) / (2 * eps) < 1e-9


def test_constraints_conserved_along_field():
    rng = np.random.default_rng(1)
    for _ in range(8):
        r = rng.normal(size=3)
        r /= np.linalg.norm(r)
        p = rng.normal(size=3)
        p -= (r @ p) * r
        dr, dp = vector_field(PhaseState(r, p))
        assert abs(2 * r @ dr) < 1e-14          # d(r.r)/dt
        assert abs(dr @ p + r @ dp) < 1e-14     # d(r.p)/dt


def test_small_oscillation_period():
    amp = 0.02
    state = PhaseState(np.array([math.sin(amp), 0.0, -math.cos(amp)]),
                       np.zeros(3))
    rec = integrate(state, 20.0, tol=1e-12)
    # z-maxima repeat every half oscillation; the full period carries the
    # classical amplitude correction 2 pi (1 + amp^2/16 + ...)
    assert len(rec.turning_times) >= 3
    period = 2 * float(np.mean(np.diff(rec.turning_times)))
    assert period == pytest.approx(2 * math.pi * (1 + amp ** 2 / 16), rel=1e-6)


@pytest.mark.slow
def test_drift_bounds_hundred_periods():
    em = EnergyMomentum(0.1, 0.15)
    state = initial_condition(em)
    t_end = 100 * period_T_numeric(em)
    tol = 1e-11
    rec = integrate(state, t_end, tol=tol)
    assert rec.energy_drift <= 10 * tol * t_end
    assert rec.j2_drift <= 10 * tol * t_end
    assert rec.constraint_drift <= 10 * tol * t_end


def test_time_reversal():
    em = EnergyMomentum(0.05, 0.2)
    state = initial_condition(em)
    t_end = 7.0
    tol = 1e-11
    fwd = integrate(state, t_end, tol=tol)
    y_end = fwd.states[-1]
    back = integrate(PhaseState(y_end[:3], -y_end[3:]), t_end, tol=tol)
    y_back = back.states[-1]
    recovered = np.concatenate([y_back[:3], -y_back[3:]])
    assert np.linalg.norm(recovered - fwd.states[0]) < 1e-7


def test_tolerance_validation():
    state = initial_condition(EnergyMomentum(0.1, 0.1))
    with pytest.raises(ValueError):
        integrate(state, 1.0, tol=1e-3)


def test_rotation_number_matches_elliptic():
    for (h, j2) in [(0.1, 0.1), (0.05, 0.3), (-0.2, 0.25)]:
        em = EnergyMomentum(h, j2)
        w_meas, rec = rotation_number_measured(em, n_periods=2, tol=1e-12)
        assert w_meas == pytest.approx(rotation_W_numeric(em), abs=1e-6)
        t_meas = float(np.mean(np.diff(rec.turning_times)))
        assert t_meas == pytest.approx(period_T_numeric(em), abs=1e-6)


def test_reduced_period_at_reference_point():
    em = EnergyMomentum(0.1, 0.1)
    _, rec = rotation_number_measured(em, n_periods=3, tol=1e-12)
    t_meas = float(np.mean(np.diff(rec.turning_times)))
    assert abs(t_meas - period_T_numeric(em)) < 1e-6


def test_periodic_orbit_three_quarters():
    res = periodic_orbit_search(F(3, 4), 0.75, tol=1e-12)
    assert res.closure_error < 1e-6
    # measured winding over q periods closes to the target
    assert res.record.rotation_number == pytest.approx(0.75, abs=1e-7)


def test_rotation_target_limits_small_radius():
    # the angle solving W = 3/4 tends to zero with the circle radius
    s_small = periodic_orbit_search(F(3, 4), 0.05, tol=1e-11).s
    s_large = periodic_orbit_search(F(3, 4), 0.5, tol=1e-11).s
    assert abs(s_small) < 0.12
    assert abs(s_small) < abs(s_large)


def test_unattainable_target_raises():
    from pendinv.elliptic import DomainError

    with pytest.raises(DomainError):
        periodic_orbit_search(F(1, 3), 0.3)


def test_two_orbits_same_rotation_number():
    pair = orbits_at_energy(0.05, F(5, 6))
    assert len(pair) == 2
    assert pair[0].j2 < pair[1].j2
    for em in pair:
        w_meas, _ = rotation_number_measured(em, n_periods=4, tol=1e-12)
        assert w_meas == pytest.approx(5 / 6, abs=1e-6)


def test_stereographic_trace_window():
    res = periodic_orbit_search(F(3, 4), 0.75, tol=1e-11)
    uv = res.record.stereographic_trace()
    assert uv.shape[1] == 2
    assert np.max(np.abs(uv)) < 8.0   # the standard display window


def test_geometry_report_polar_axis():
    rep = geometry_report(0.75, 0.0)
    assert rep.excluded_radius == pytest.approx(rep.excluded_radius_asymptotic,
                                                rel=0.2)
    assert rep.outer_size == pytest.approx(rep.outer_size_asymptotic, rel=0.2)


def test_geometry_report_pole_access():
    # s -> +pi/2: both pole distances vanish (j2 -> 0 with h > 0)
    rep = geometry_report(0.3, math.pi / 2 - 1e-4)
    assert rep.theta_min < 0.01
    assert math.pi - rep.theta_max < 0.05
    # s -> -pi/2: the upper pole stays excluded
    rep2 = geometry_report(0.3, -math.pi / 2 + 1e-4)
    assert rep2.theta_min > 0.5
