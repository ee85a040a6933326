import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relrocket import (
    DomainError,
    Model,
    RocketParams,
    SpeedLimitError,
    classical_accel,
    classical_mass,
    mass_ratio_from_velocity,
    proper_time_rate,
    rel_accel,
    rel_accel_mass_form,
    velocity_from_mass_ratio,
)
from relrocket.dynamics import SPEED_OF_LIGHT_SI

mp.mp.dps = 40


def mp_rel_accel(v, u, c, vbar, m0):
    """High-precision velocity form, evaluated directly from the power formula."""
    v, u, c, vbar, m0 = (mp.mpf(x) for x in (v, u, c, vbar, m0))
    ratio = ((c - v) / (c + v)) ** (c / (2 * vbar))
    gamma3 = (1 - v**2 / c**2) ** mp.mpf(-1.5)
    return -vbar * u / (m0 * ratio * gamma3)


def classical(vbar=1.0, m0=2.0):
    return RocketParams(m0=m0, vbar=vbar, model=Model.CLASSICAL)


# ---------------------------------------------------------------- params


def test_params_defaults_and_derived_exponent():
    p = RocketParams.natural(m0=3.0, vbar=0.25)
    assert p.c == 1.0 and p.m_dry == 0.0 and p.model is Model.RELATIVISTIC
    assert p.half_exponent == 2.0
    assert p.b == -0.25 / 3.0


def test_photon_forces_vbar_equal_c():
    p = RocketParams.photon(m0=2.0, c=3.0)
    assert p.vbar == 3.0 and p.model is Model.PHOTON
    assert RocketParams(m0=1.0, vbar=None, model="photon").vbar == 1.0
    with pytest.raises(DomainError, match="photon"):
        RocketParams(m0=1.0, vbar=0.5, model="photon")


@pytest.mark.parametrize("kwargs", [
    {"m0": 1.0, "vbar": 1.5},            # vbar > c
    {"m0": 1.0, "vbar": 0.0},            # vbar <= 0
    {"m0": 1.0, "vbar": 0.5, "c": -1},   # c <= 0
    {"m0": 1.0, "vbar": 0.5, "m_dry": 1.0},
    {"m0": 1.0, "vbar": 0.5, "m_dry": -0.1},
    {"m0": math.nan, "vbar": 0.5},
    {"m0": 1.0, "vbar": None},
])
def test_params_invariants_rejected(kwargs):
    with pytest.raises(DomainError):
        RocketParams(**kwargs)


def test_si_constructor():
    p = RocketParams.si(m0=1000.0, vbar=4500.0)
    assert p.c == SPEED_OF_LIGHT_SI == 299792458.0


# ---------------------------------------------------------------- classical


def test_classical_accel_examples():
    assert classical_accel(0.0, 0.0, classical()) == 0.0
    assert classical_accel(0.0, -1.0, classical(vbar=1.0, m0=2.0)) == 0.5
    assert classical_accel(math.log(2.0), -1.0, classical(vbar=1.0, m0=2.0)) == pytest.approx(
        1.0, rel=1e-15)


def test_classical_mass_examples():
    p = classical(vbar=0.5, m0=3.0)
    assert classical_mass(0.0, p) == 3.0
    assert classical_mass(0.5, p) == pytest.approx(3.0 / math.e, rel=1e-15)
    assert classical_mass(0.5 * math.log(2.0), p) == pytest.approx(1.5, rel=1e-15)


def test_classical_ops_need_classical_model(unit_params):
    with pytest.raises(DomainError):
        classical_accel(0.0, -1.0, unit_params)
    with pytest.raises(DomainError):
        classical_mass(0.0, unit_params)
    with pytest.raises(DomainError):
        classical_accel(math.inf, -1.0, classical())


# ---------------------------------------------------------------- relativistic


def test_rel_accel_examples(unit_params):
    assert rel_accel(0.0, -1.0, unit_params) == 1.0
    # 0.5 * 1.953125 = 0.9765625, so a = 1/0.9765625 = 1.024
    assert rel_accel(0.6, -1.0, unit_params) == pytest.approx(1.024, rel=1e-14)
    assert rel_accel(0.3, 0.0, unit_params) == 0.0


@pytest.mark.parametrize("v, vbar", [(0.6, 1.0), (0.9, 1.0), (0.3, 0.5), (-0.7, 0.25),
                                     (0.999, 1.0), (-0.5, 0.01)])
def test_rel_accel_matches_high_precision(v, vbar):
    p = RocketParams.natural(m0=1.5, vbar=vbar)
    expected = float(mp_rel_accel(v, -0.7, 1.0, vbar, 1.5))
    assert rel_accel(v, -0.7, p) == pytest.approx(expected, rel=1e-13)


def test_rel_accel_chemical_exhaust_si():
    # exponent c/(2 vbar) ~ 3.3e4: a direct pow underflows, log space does not
    p = RocketParams.si(m0=1000.0, vbar=4500.0)
    v = 3.0e4
    expected = float(mp_rel_accel(v, -1.0, p.c, 4500.0, 1000.0))
    assert rel_accel(v, -1.0, p) == pytest.approx(expected, rel=1e-9)


def test_rel_accel_speed_guard(unit_params):
    for v in (1.0, -1.0, 1.5, 1.0 - 1e-13):
        with pytest.raises(SpeedLimitError):
            rel_accel(v, -1.0, unit_params)
    assert math.isfinite(rel_accel(1.0 - 1e-11, -1.0, unit_params))
    with pytest.raises(DomainError):
        rel_accel(0.1, -1.0, classical())


def test_mass_form_examples(unit_params):
    assert rel_accel_mass_form(1.0, -1.0, unit_params) == 1.0
    assert rel_accel_mass_form(1.0, 0.0, unit_params) == 0.0
    # m = 0.5 pairs with v = 0.6: bracket 0.5 + 2 = 2.5, 8 / (0.5 * 15.625) = 1.024
    v = velocity_from_mass_ratio(0.5, unit_params)
    assert rel_accel_mass_form(0.5, -1.0, unit_params) == pytest.approx(
        rel_accel(v, -1.0, unit_params), rel=1e-14)
    assert rel_accel_mass_form(0.5, -1.0, unit_params) == pytest.approx(1.024, rel=1e-14)


@pytest.mark.parametrize("m", [0.0, -1.0, 1.5])
def test_mass_form_domain(unit_params, m):
    with pytest.raises(DomainError):
        rel_accel_mass_form(m, -1.0, unit_params)


def test_velocity_from_mass_ratio_examples(unit_params):
    assert velocity_from_mass_ratio(1.0, unit_params) == 0.0
    assert velocity_from_mass_ratio(0.5, unit_params) == pytest.approx(0.6, rel=1e-15)
    half = RocketParams.natural(m0=1.0, vbar=0.5)
    assert velocity_from_mass_ratio(0.5, half) == pytest.approx(1.0 / 3.0, rel=1e-15)
    with pytest.raises(DomainError):
        velocity_from_mass_ratio(0.0, unit_params)
    with pytest.raises(DomainError):
        velocity_from_mass_ratio(-0.5, unit_params)


def test_velocity_from_mass_ratio_extended_to_mass_gain(unit_params):
    # ratio 2 is the mirror image of ratio 1/2
    assert velocity_from_mass_ratio(2.0, unit_params) == pytest.approx(-0.6, rel=1e-15)


def test_mass_ratio_from_velocity_examples(unit_params):
    assert mass_ratio_from_velocity(0.0, unit_params) == 1.0
    assert mass_ratio_from_velocity(0.6, unit_params) == pytest.approx(0.5, rel=1e-15)
    v = 0.9
    back = velocity_from_mass_ratio(mass_ratio_from_velocity(v, unit_params), unit_params)
    assert back == pytest.approx(v, rel=1e-12)
    with pytest.raises(SpeedLimitError):
        mass_ratio_from_velocity(1.0, unit_params)


def test_proper_time_rate_examples():
    assert proper_time_rate(0.0, 1.0) == 1.0
    assert proper_time_rate(0.6, 1.0) == pytest.approx(0.8, rel=1e-15)
    assert proper_time_rate(0.8, 1.0) == pytest.approx(0.6, rel=1e-15)
    assert proper_time_rate(-0.6 * SPEED_OF_LIGHT_SI, SPEED_OF_LIGHT_SI) == pytest.approx(0.8)
    with pytest.raises(SpeedLimitError):
        proper_time_rate(1.0, 1.0)
    with pytest.raises(DomainError):
        proper_time_rate(0.0, 0.0)


# ---------------------------------------------------------------- properties

speeds = st.floats(min_value=-0.999, max_value=0.999)
exhaust = st.sampled_from([1.0, 0.5, 0.1, 0.01])


@given(v=speeds, vbar=exhaust)
def test_bijection_velocity_side(v, vbar):
    p = RocketParams.natural(m0=1.0, vbar=vbar)
    back = velocity_from_mass_ratio(mass_ratio_from_velocity(v, p), p)
    # absolute scale c: near rest a float ratio cannot resolve v more finely
    assert abs(back - v) <= 1e-15 + 1e-12 * abs(v)


@given(ratio=st.floats(min_value=1e-3, max_value=1.0), vbar=st.sampled_from([1.0, 0.5]))
def test_bijection_ratio_side(ratio, vbar):
    p = RocketParams.natural(m0=1.0, vbar=vbar)
    back = mass_ratio_from_velocity(velocity_from_mass_ratio(ratio, p), p)
    assert back == pytest.approx(ratio, rel=1e-12)


@given(frac=st.floats(min_value=1e-6, max_value=1.0), vbar=exhaust,
       u=st.floats(min_value=-10, max_value=10).filter(lambda x: abs(x) > 1e-6))
def test_form_equivalence(frac, vbar, u):
    p = RocketParams.natural(m0=2.0, vbar=vbar)
    m = 2.0 * frac
    v = velocity_from_mass_ratio(frac, p)
    if abs(v) >= p.speed_limit:
        return
    assert rel_accel_mass_form(m, u, p) == pytest.approx(rel_accel(v, u, p), rel=1e-10)


@given(beta=st.floats(min_value=-1e-3, max_value=1e-3), vbar=st.sampled_from([1.0, 1e-3, 1e-4]))
def test_classical_limit(beta, vbar):
    if beta / vbar > 10.0 or beta == 0.0:
        return
    p = RocketParams.natural(m0=1.0, vbar=vbar)
    a_rel = rel_accel(beta, -1.0, p)
    a_cl = classical_accel(beta, -1.0, p.with_model(Model.CLASSICAL))
    assert abs(a_rel - a_cl) <= 1e-4 * abs(a_cl)


@given(v=speeds, vbar=exhaust, u=st.floats(min_value=-5, max_value=-1e-3))
def test_mass_ejection_accelerates_forward(v, vbar, u):
    p = RocketParams.natural(m0=1.0, vbar=vbar)
    a = rel_accel(v, u, p)
    # far from rest at small vbar the gain can underflow to zero, never negative
    assert a >= 0.0
    if abs(v) < 0.5:
        assert a > 0.0
    assert classical_accel(v, u, p.with_model(Model.CLASSICAL)) > 0.0


@settings(max_examples=200)
@given(a=st.floats(min_value=1e-6, max_value=1.0), b=st.floats(min_value=1e-6, max_value=1.0))
def test_monotonicity(a, b):
    p = RocketParams.natural(m0=1.0, vbar=0.5)
    lo, hi = sorted((a, b))
    if lo < hi:
        assert velocity_from_mass_ratio(lo, p) > velocity_from_mass_ratio(hi, p)
    v_lo, v_hi = sorted((a * 0.999, b * 0.999))
    if v_lo < v_hi:
        assert proper_time_rate(v_lo, 1.0) >= proper_time_rate(v_hi, 1.0)
