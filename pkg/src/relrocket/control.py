"""Control laws designed on the linearized plant and mapped back through g(v).

Every law computes a virtual input w for the double integrator and commands
the mass rate u = g(v) * w. Laws are evaluated with the Earth-frame state and
their output is read as dm/dtau at the rocket's current proper time
(instantaneous, co-located measurement).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .dynamics import KinematicState, Model, RocketParams, _finite, check_speed
from .errors import DomainError, UncontrollableError, UnreachableStateError
from .linearization import compensator_gain, to_physical


@dataclass(frozen=True)
class GainVector:
    """State-feedback gain K = [k1, k2] acting as w = -K x."""

    k1: float
    k2: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.k1, self.k2]])

    def virtual(self, x: KinematicState) -> float:
        return -(self.k1 * x.p + self.k2 * x.v)


@dataclass(frozen=True)
class PIDGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0

    @classmethod
    def critically_damped(cls, params: RocketParams, rate: float) -> "PIDGains":
        """Gains giving a triple closed-loop pole at ``-rate`` on the linear plant.

        With derivative action on the measurement the loop polynomial is
        s^3 + b*kd*s^2 + b*kp*s + b*ki, matched against (s + rate)^3.
        """
        b = _input_gain(params)
        return cls(kp=3.0 * rate**2 / b, ki=rate**3 / b, kd=3.0 * rate / b)


@dataclass(frozen=True)
class PIDState:
    """Controller memory threaded through :func:`pid_control` by the caller.

    ``prev_error`` is None until the first sample arrives; ``integral_limit``
    enables an optional symmetric clamp on the integral (off by default).
    """

    integral: float = 0.0
    prev_error: float | None = None
    reference: float = 0.0
    integral_limit: float = math.inf

    def reset(self) -> "PIDState":
        return replace(self, integral=0.0, prev_error=None)


@dataclass(frozen=True)
class SteeringPlan:
    """Open-loop minimum-energy virtual input on [t0, T].

    w(s) = B^T exp(A^T (T - s)) lam = b * ((T - s) * lam[0] + lam[1]).
    """

    t0: float
    T: float
    b: float
    lam: tuple[float, float]

    def w(self, s):
        s = np.asarray(s, dtype=float)
        out = self.b * ((self.T - s) * self.lam[0] + self.lam[1])
        return float(out) if out.ndim == 0 else out

    @property
    def coefficients(self) -> tuple[float, float]:
        """(a0, a1) with w(s) = a0 + a1 * s."""
        a1 = -self.b * self.lam[0]
        a0 = self.b * (self.T * self.lam[0] + self.lam[1])
        return a0, a1


def _input_gain(params: RocketParams) -> float:
    b = params.b
    if b == 0 or not math.isfinite(b):
        raise UncontrollableError(f"input gain b = -vbar/m0 must be finite and nonzero, got {b}")
    return b


def place_poles(params: RocketParams, poles) -> GainVector:
    """Gain placing the eigenvalues of A - B K at ``poles``.

    A - B K has characteristic polynomial s^2 + b k2 s + b k1, so matching
    s^2 - (p1 + p2) s + p1 p2 gives k1 = p1 p2 / b and k2 = -(p1 + p2) / b.
    """
    b = _input_gain(params)
    p1, p2 = (complex(p) for p in poles)
    total, product = p1 + p2, p1 * p2
    scale = max(1.0, abs(p1), abs(p2))
    if abs(total.imag) > 1e-12 * scale or abs(product.imag) > 1e-12 * scale**2:
        raise DomainError(f"poles must be closed under conjugation, got {p1}, {p2}")
    return GainVector(k1=product.real / b, k2=-total.real / b)


def state_feedback(x: KinematicState, K: GainVector, params: RocketParams) -> float:
    """Mass rate of the state-feedback law u = g(v) * (-K x)."""
    return to_physical(K.virtual(x), x.v, params)


def output_feedback(y: float, ydot: float, law: Callable[[float], float],
                    params: RocketParams) -> float:
    """Mass rate u = g(dy/dt) * l(y); ``ydot`` is the state velocity."""
    ydot = check_speed(ydot, params)
    return compensator_gain(ydot, params).g * _finite(law(_finite(y, "y")), "l(y)")


def proportional_output_law(kp: float, reference: float = 0.0) -> Callable[[float], float]:
    """l(y) = kp * (reference - y)."""

    def law(y):
        return kp * (reference - y)

    return law


def pd_output_law(kp: float, kd: float, ydot: Callable[[], float],
                  reference: float = 0.0) -> Callable[[float], float]:
    """l(y) = kp * (reference - y) - kd * dy/dt, with dy/dt read from ``ydot()``."""

    def law(y):
        return kp * (reference - y) - kd * ydot()

    return law


def pid_control(e: float, state: PIDState, e_dot: float, gains: PIDGains, dt: float,
                params: RocketParams, reference_rate: float = 0.0) -> tuple[float, PIDState]:
    """One PID evaluation through the compensator.

    ``e_dot`` is the exact error rate, e_dot = r_dot - v, never a finite
    difference. The compensator is evaluated at the velocity the error rate
    implies, v = r_dot - e_dot; for a constant reference that is
    [(c + e_dot)/(c - e_dot)]^(c/2vbar) * (1 - e_dot^2/c^2)^(-3/2).
    The integral advances by the trapezoidal rule over ``dt`` before use.

    Returns the mass rate and the updated controller state.
    """
    e = _finite(e, "e")
    e_dot = _finite(e_dot, "e_dot")
    dt = _finite(dt, "dt")
    if dt < 0:
        raise DomainError(f"dt must be non-negative, got {dt}")
    gain = compensator_gain(_finite(reference_rate, "reference_rate") - e_dot, params).g
    prev = e if state.prev_error is None else state.prev_error
    integral = state.integral + 0.5 * (prev + e) * dt
    lim = state.integral_limit
    integral = min(max(integral, -lim), lim)
    w = gains.kp * e + gains.ki * integral + gains.kd * e_dot
    return gain * w, replace(state, integral=integral, prev_error=e)


def controllability_gramian(params: RocketParams, t0: float, T: float) -> np.ndarray:
    """W = b^2 [[D^3/3, D^2/2], [D^2/2, D]] with D = T - t0."""
    b = _input_gain(params)
    d = _finite(T, "T") - _finite(t0, "t0")
    if d <= 0:
        raise DomainError(f"horizon must satisfy T > t0, got t0={t0}, T={T}")
    return b * b * np.array([[d**3 / 3.0, d**2 / 2.0], [d**2 / 2.0, d]])


def is_relativistically_reachable(x: KinematicState, params: RocketParams) -> bool:
    """True iff |v| < c; every finite state is reachable classically."""
    if not math.isfinite(x.v) or not math.isfinite(x.p):
        return False
    if params.model is Model.CLASSICAL:
        return True
    return abs(x.v) < params.speed_limit


def min_energy_steering(x0: KinematicState, xT: KinematicState, t0: float, T: float,
                        params: RocketParams) -> SteeringPlan:
    """Minimum-energy virtual input steering the double integrator x0 -> xT.

    lam = W^-1 (xT - exp(A (T - t0)) x0). The returned plan is open loop in
    linear coordinates; driving the plant through the compensator tracks it
    exactly as long as the velocity stays below c along the way.
    """
    for name, x in (("x0", x0), ("xT", xT)):
        if not is_relativistically_reachable(x, params):
            raise UnreachableStateError(
                f"{name} = ({x.p}, {x.v}) is not reachable: |v| must stay below c = {params.c}"
            )
    W = controllability_gramian(params, t0, T)
    d = T - t0
    drift = np.array([x0.p + d * x0.v, x0.v])
    lam = np.linalg.solve(W, np.array([xT.p, xT.v]) - drift)
    return SteeringPlan(t0=float(t0), T=float(T), b=params.b, lam=(float(lam[0]), float(lam[1])))
