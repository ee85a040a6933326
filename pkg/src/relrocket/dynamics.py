"""Physical parameters and closed-form rocket dynamics.

Classical plant (Earth time t, input dm/dt)::

    dv/dt = -exp(v/vbar) * (vbar/m0) * dm/dt,      m = m0 * exp(-v/vbar)

Relativistic plant (input dm/dtau in the rocket frame)::

    dv/dt = -vbar * dm/dtau / (m0 * R(v) * (1 - v^2/c^2)^(-3/2))
    R(v)  = m/m0 = [(c - v)/(c + v)]^(c/(2 vbar))

Fractional powers are evaluated in log space; for chemical exhaust speeds the
exponent c/(2 vbar) reaches 1e4 and a direct ``pow`` underflows.

Proper time is closed with the special-relativistic rate
dtau/dt = sqrt(1 - v^2/c^2). This conversion is an assumption of the model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from . import _kernels as K
from .errors import DomainError, SpeedLimitError

SPEED_OF_LIGHT_SI = 299_792_458.0

#: velocities with |v| >= c * (1 - SPEED_GUARD) are rejected
SPEED_GUARD = 1e-12


class Model(str, enum.Enum):
    CLASSICAL = "classical"
    RELATIVISTIC = "relativistic"
    PHOTON = "photon"

    @property
    def is_relativistic(self) -> bool:
        return self is not Model.CLASSICAL


@dataclass(frozen=True)
class RocketParams:
    """Physical constants of a one-dimensional rocket.

    Parameters
    ----------
    m0 : float
        Initial total mass m(0).
    vbar : float or None
        Exhaust speed relative to the rocket, measured in the rocket frame.
        May be omitted for the photon model, where it is forced to ``c``.
    c : float
        Speed of light in the chosen units.
    m_dry : float
        Minimum admissible mass.
    model : Model
        Which plant the parameters describe.
    """

    m0: float
    vbar: float | None
    c: float = 1.0
    m_dry: float = 0.0
    model: Model = Model.RELATIVISTIC
    half_exponent: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        model = Model(self.model)
        object.__setattr__(self, "model", model)
        c = _finite(self.c, "c")
        if c <= 0:
            raise DomainError(f"c must be positive, got {c}")
        vbar = c if (model is Model.PHOTON and self.vbar is None) else self.vbar
        if vbar is None:
            raise DomainError("vbar is required unless model is photon")
        vbar = _finite(vbar, "vbar")
        if model is Model.PHOTON and vbar != c:
            raise DomainError(f"photon rocket requires vbar == c exactly, got vbar={vbar}, c={c}")
        if not 0 < vbar <= c:
            raise DomainError(f"vbar must satisfy 0 < vbar <= c, got vbar={vbar}, c={c}")
        m0 = _finite(self.m0, "m0")
        m_dry = _finite(self.m_dry, "m_dry")
        if not m0 > m_dry >= 0:
            raise DomainError(f"masses must satisfy m0 > m_dry >= 0, got m0={m0}, m_dry={m_dry}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "vbar", vbar)
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "m_dry", m_dry)
        object.__setattr__(self, "half_exponent", c / (2.0 * vbar))

    @classmethod
    def natural(cls, m0=1.0, vbar=None, m_dry=0.0, model=Model.RELATIVISTIC):
        """Parameters in natural units (c = 1)."""
        return cls(m0=m0, vbar=vbar, c=1.0, m_dry=m_dry, model=model)

    @classmethod
    def si(cls, m0, vbar=None, m_dry=0.0, model=Model.RELATIVISTIC):
        """Parameters in SI units (c = 299 792 458 m/s)."""
        return cls(m0=m0, vbar=vbar, c=SPEED_OF_LIGHT_SI, m_dry=m_dry, model=model)

    @classmethod
    def photon(cls, m0=1.0, c=1.0, m_dry=0.0):
        return cls(m0=m0, vbar=c, c=c, m_dry=m_dry, model=Model.PHOTON)

    def with_model(self, model) -> "RocketParams":
        return replace(self, model=Model(model))

    @property
    def b(self) -> float:
        """Second entry of the input matrix, -vbar/m0."""
        return -self.vbar / self.m0

    @property
    def speed_limit(self) -> float:
        return self.c * (1.0 - SPEED_GUARD)

    @property
    def kernel_model(self) -> int:
        return K.RELATIVISTIC if self.model.is_relativistic else K.CLASSICAL


@dataclass(frozen=True)
class KinematicState:
    """Earth-frame position and velocity x = [p, v]."""

    p: float
    v: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.p, self.v)


@dataclass(frozen=True)
class FrameClock:
    """Earth time ``t`` and rocket proper time ``tau``."""

    t: float = 0.0
    tau: float = 0.0


def _finite(x, name="value") -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x}")
    return x


def _below_light(v, c) -> float:
    v = _finite(v, "v")
    if abs(v) >= c * (1.0 - SPEED_GUARD):
        raise SpeedLimitError(f"|v| = {abs(v)!r} is not below c*(1 - {SPEED_GUARD}) for c = {c}")
    return v


def check_speed(v: float, params: RocketParams) -> float:
    """Validate ``v`` against the light-speed guard; classical passes through."""
    if params.model.is_relativistic:
        return _below_light(v, params.c)
    return _finite(v, "v")


def _require_classical(params: RocketParams):
    if params.model is not Model.CLASSICAL:
        raise DomainError(f"operation needs the classical model, got {params.model.value}")


def _require_relativistic(params: RocketParams):
    if not params.model.is_relativistic:
        raise DomainError("operation needs the relativistic or photon model")


def classical_accel(v: float, mdot: float, params: RocketParams) -> float:
    """Acceleration of the classical rocket for an Earth-time mass rate ``mdot``."""
    _require_classical(params)
    v = _finite(v, "v")
    mdot = _finite(mdot, "mdot")
    return -math.exp(v / params.vbar) * (params.vbar / params.m0) * mdot


def classical_mass(v: float, params: RocketParams) -> float:
    """Mass on the classical mass law m0*exp(-v/vbar)."""
    _require_classical(params)
    return params.m0 * math.exp(-_finite(v, "v") / params.vbar)


def rel_accel(v: float, mdot_tau: float, params: RocketParams) -> float:
    """Earth-frame acceleration for a proper-time mass rate ``mdot_tau``.

    Velocity form of the relativistic rocket equation.
    """
    _require_relativistic(params)
    v = check_speed(v, params)
    mdot_tau = _finite(mdot_tau, "mdot_tau")
    return K.acceleration(v, mdot_tau, K.RELATIVISTIC, params.c, params.vbar, params.m0,
                          params.half_exponent)


def rel_accel_mass_form(m: float, mdot_tau: float, params: RocketParams) -> float:
    """Mass form: -8 vbar mdot / (m [(m/m0)^(vbar/c) + (m/m0)^(-vbar/c)]^3)."""
    _require_relativistic(params)
    m = _finite(m, "m")
    mdot_tau = _finite(mdot_tau, "mdot_tau")
    if not 0 < m <= params.m0:
        raise DomainError(f"mass must satisfy 0 < m <= m0 = {params.m0}, got {m}")
    s = (params.vbar / params.c) * math.log(m / params.m0)
    bracket = math.exp(s) + math.exp(-s)
    return -8.0 * params.vbar * mdot_tau / (m * bracket**3)


def velocity_from_mass_ratio(ratio: float, params: RocketParams) -> float:
    """Velocity reached from rest once the mass ratio m/m0 equals ``ratio``.

    v/c = (1 - q)/(1 + q) with q = ratio^(2 vbar/c). Ratios above one (mass
    gain, which the ideal plant permits) give negative velocities.
    """
    ratio = _finite(ratio, "ratio")
    if ratio <= 0:
        raise DomainError(f"mass ratio must be positive, got {ratio}")
    x = (2.0 * params.vbar / params.c) * math.log(ratio)
    em1 = math.expm1(x)  # q - 1
    return params.c * (-em1) / (2.0 + em1)


def mass_ratio_from_velocity(v: float, params: RocketParams) -> float:
    """m/m0 = [(c - v)/(c + v)]^(c/(2 vbar))."""
    v = _below_light(v, params.c)
    return math.exp(K.log_ratio_power(v, params.c, params.half_exponent))


def proper_time_rate(v: float, c: float) -> float:
    """dtau/dt = sqrt(1 - v^2/c^2)."""
    c = _finite(c, "c")
    if c <= 0:
        raise DomainError(f"c must be positive, got {c}")
    v = _below_light(v, c)
    return K.proper_rate(v, K.RELATIVISTIC, c)
