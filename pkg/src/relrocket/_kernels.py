"""Scalar dynamics kernels and the fixed-step closed-loop integrator.

Every function here is plain numba-compatible Python and carries no
validation; the public modules check arguments before calling in.

Plant codes
-----------
CLASSICAL     Newtonian rocket, input is dm/dt.
RELATIVISTIC  relativistic rocket (photon rocket is vbar == c), input dm/dtau.
LINEAR        the double integrator dv/dt = b*w with unit compensator.

Virtual-law layout (float64[LAW_SIZE])
--------------------------------------
w(t, p, v, I) = offset + ramp*t + amp*sin(omega*t + phase)
                + k_pos*p + k_vel*v + k_int*I,      I = integral of (r0 + r1*t - p)
and w = 0 once t exceeds ``active_until`` or the current RK4 step starts at or
after it (so a cutoff on the grid acts as a clean right limit). A nonzero ``direct`` entry applies the
law value as the mass rate u itself, bypassing the compensator.
"""

import math

import numpy as np

from ._jit import jit

CLASSICAL = 0
RELATIVISTIC = 1
LINEAR = 2

EVENT_NONE = 0
EVENT_SPEED = 1
EVENT_MASS = 2

LAW_OFFSET = 0
LAW_RAMP = 1
LAW_SIN_AMP = 2
LAW_SIN_OMEGA = 3
LAW_SIN_PHASE = 4
LAW_K_POS = 5
LAW_K_VEL = 6
LAW_K_INT = 7
LAW_REF = 8
LAW_REF_RATE = 9
LAW_ACTIVE_UNTIL = 10
LAW_INTEGRAL_LIMIT = 11
LAW_DIRECT = 12
LAW_SIZE = 13

# output columns of ``integrate``
COL_T, COL_TAU, COL_P, COL_V, COL_M, COL_U, COL_W, COL_GAIN = range(8)
N_COLS = 8


@jit
def log_ratio_power(v, c, half_exp):
    """ln [(c - v)/(c + v)]^half_exp, evaluated as -2*half_exp*atanh(v/c)."""
    return -2.0 * half_exp * math.atanh(v / c)


@jit
def log_one_minus_beta_sq(v, c):
    """ln(1 - v^2/c^2), accurate both near 0 and near |v| = c."""
    beta = v / c
    return math.log1p(-beta) + math.log1p(beta)


@jit
def log_compensator(v, model, c, vbar, half_exp):
    """Logarithm of the gain g in u = g*w."""
    if model == CLASSICAL:
        return -v / vbar
    if model == LINEAR:
        return 0.0
    return log_ratio_power(v, c, half_exp) - 1.5 * log_one_minus_beta_sq(v, c)


@jit
def acceleration(v, u, model, c, vbar, m0, half_exp):
    # b*u/g with b = -vbar/m0; exp(-ln g) avoids forming g when it under/overflows
    return -(vbar / m0) * u * math.exp(-log_compensator(v, model, c, vbar, half_exp))


@jit
def proper_rate(v, model, c):
    if model == RELATIVISTIC:
        beta = v / c
        return math.sqrt((1.0 - beta) * (1.0 + beta))
    return 1.0


@jit
def rhs(v, u, model, c, vbar, m0, half_exp):
    """Return (dv/dt, dm/dt, dtau/dt); dp/dt is v itself."""
    dv = acceleration(v, u, model, c, vbar, m0, half_exp)
    rate = proper_rate(v, model, c)
    if model == LINEAR:
        return dv, 0.0, 1.0
    return dv, u * rate, rate


@jit
def log_mass_ratio(v, model, c, vbar, half_exp):
    """ln m/m0 on the closed-form mass-velocity curve of the plant."""
    if model == CLASSICAL:
        return -v / vbar
    if model == LINEAR:
        return 0.0
    return log_ratio_power(v, c, half_exp)


@jit
def residuals(v, m, v_init, m_init, model, c, vbar, half_exp):
    out = np.empty(v.shape[0])
    ref = log_mass_ratio(v_init, model, c, vbar, half_exp)
    for i in range(v.shape[0]):
        out[i] = m[i] / m_init - math.exp(log_mass_ratio(v[i], model, c, vbar, half_exp) - ref)
    return out


@jit
def law_virtual(law, t, p, v, integral, t_step, slack):
    cutoff = law[LAW_ACTIVE_UNTIL]
    if t > cutoff + slack or t_step > cutoff - slack:
        return 0.0
    w = law[LAW_OFFSET] + law[LAW_RAMP] * t
    w += law[LAW_K_POS] * p + law[LAW_K_VEL] * v + law[LAW_K_INT] * integral
    if law[LAW_SIN_AMP] != 0.0:
        w += law[LAW_SIN_AMP] * math.sin(law[LAW_SIN_OMEGA] * t + law[LAW_SIN_PHASE])
    return w


@jit
def clamp_integral(integral, limit):
    if integral > limit:
        return limit
    if integral < -limit:
        return -limit
    return integral


@jit
def stage_input(law, t, p, v, integral, t_step, model, c, vbar, half_exp, physical, slack):
    """Commanded mass rate at one RK4 stage; returns (u, gain, clamped)."""
    w = law_virtual(law, t, p, v, clamp_integral(integral, law[LAW_INTEGRAL_LIMIT]), t_step,
                    slack)
    gain = math.exp(log_compensator(v, model, c, vbar, half_exp))
    u = w if law[LAW_DIRECT] != 0.0 else gain * w
    if physical and u > 0.0:
        return 0.0, gain, True
    return u, gain, False


@jit
def tracking_error(law, t, p):
    return law[LAW_REF] + law[LAW_REF_RATE] * t - p


@jit
def integrate(state0, law, n_steps, dt, model, c, vbar, m0, half_exp,
              m_dry, physical, eps_c, zoh_every, out, clamped):
    """Fixed-step RK4 of (p, v, m, tau, I) under a virtual law.

    ``I`` is the integral of the tracking error, carried as an RK4 state so
    integral action keeps the scheme fourth order. ``state0`` is
    (t0, tau0, p0, v0, m_now). Rows of ``out`` receive t, tau, p, v, m, u, w,
    gain per sample; ``clamped[n]`` flags that the physical-mode clamp bound
    during step n. Returns (samples_written, event_code, event_time).
    """
    vmax = c * (1.0 - eps_c)
    rel = model == RELATIVISTIC
    slack = 0.25 * dt
    hold = zoh_every > 0
    lim = law[LAW_INTEGRAL_LIMIT]
    t0 = state0[0]
    tau = state0[1]
    p = state0[2]
    v = state0[3]
    m = state0[4]
    z = 0.0
    h2 = 0.5 * dt
    u_hold = 0.0

    if rel and abs(v) >= vmax:
        return 0, EVENT_SPEED, t0

    for n in range(n_steps + 1):
        t = t0 + n * dt
        u1, g1, k1c = stage_input(law, t, p, v, z, t, model, c, vbar, half_exp, physical, slack)
        if hold:
            if n % zoh_every == 0:
                u_hold = u1
            else:
                u1 = u_hold
                k1c = False
        out[n, COL_T] = t
        out[n, COL_TAU] = tau
        out[n, COL_P] = p
        out[n, COL_V] = v
        out[n, COL_M] = m
        out[n, COL_U] = u1
        out[n, COL_W] = u1 / g1
        out[n, COL_GAIN] = g1
        if n == n_steps:
            return n + 1, EVENT_NONE, t

        any_clamp = k1c
        a1, dm1, dtau1 = rhs(v, u1, model, c, vbar, m0, half_exp)
        e1 = tracking_error(law, t, p)

        ts = t + h2
        p2 = p + h2 * v
        v2 = v + h2 * a1
        z2 = z + h2 * e1
        if rel and abs(v2) >= vmax:
            return n + 1, EVENT_SPEED, ts
        if hold:
            u2 = u_hold
        else:
            u2, g2, c2 = stage_input(law, ts, p2, v2, z2, t, model, c, vbar, half_exp,
                                     physical, slack)
            any_clamp = any_clamp or c2
        a2, dm2, dtau2 = rhs(v2, u2, model, c, vbar, m0, half_exp)
        e2 = tracking_error(law, ts, p2)

        p3 = p + h2 * v2
        v3 = v + h2 * a2
        z3 = z + h2 * e2
        if rel and abs(v3) >= vmax:
            return n + 1, EVENT_SPEED, ts
        if hold:
            u3 = u_hold
        else:
            u3, g3, c3 = stage_input(law, ts, p3, v3, z3, t, model, c, vbar, half_exp,
                                     physical, slack)
            any_clamp = any_clamp or c3
        a3, dm3, dtau3 = rhs(v3, u3, model, c, vbar, m0, half_exp)
        e3 = tracking_error(law, ts, p3)

        te = t + dt
        p4 = p + dt * v3
        v4 = v + dt * a3
        z4 = z + dt * e3
        if rel and abs(v4) >= vmax:
            return n + 1, EVENT_SPEED, te
        if hold:
            u4 = u_hold
        else:
            u4, g4, c4 = stage_input(law, te, p4, v4, z4, t, model, c, vbar, half_exp,
                                     physical, slack)
            any_clamp = any_clamp or c4
        a4, dm4, dtau4 = rhs(v4, u4, model, c, vbar, m0, half_exp)
        e4 = tracking_error(law, te, p4)

        sixth = dt / 6.0
        p_new = p + sixth * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v_new = v + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        m_new = m + sixth * (dm1 + 2.0 * dm2 + 2.0 * dm3 + dm4)
        tau_new = tau + sixth * (dtau1 + 2.0 * dtau2 + 2.0 * dtau3 + dtau4)
        z_new = clamp_integral(z + sixth * (e1 + 2.0 * e2 + 2.0 * e3 + e4), lim)
        clamped[n] = any_clamp

        t_next = t0 + (n + 1) * dt
        if rel and abs(v_new) >= vmax:
            return n + 1, EVENT_SPEED, t_next
        if m_new <= m_dry:
            return n + 1, EVENT_MASS, t_next
        p, v, m, tau, z = p_new, v_new, m_new, tau_new, z_new

    return n_steps + 1, EVENT_NONE, t0 + n_steps * dt
