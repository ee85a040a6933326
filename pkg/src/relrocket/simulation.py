"""Fixed-step closed-loop simulation in Earth time.

The integrated state is (p, v, m, tau), plus the error integral for laws with
integral action. Controllers are re-evaluated at every
RK4 stage unless a zero-order-hold period is configured. Laws expressible as
a virtual law (state feedback, PID, output feedback presets, open-loop
schedules, steering plans) run through the compiled kernel; any other
callable ``controller(t, state) -> u`` runs through the Python stepper.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from . import _kernels as K
from .control import (
    GainVector,
    PIDGains,
    PIDState,
    SteeringPlan,
    is_relativistically_reachable,
    output_feedback,
    pid_control,
    state_feedback,
)
from .dynamics import (
    FrameClock,
    KinematicState,
    Model,
    RocketParams,
    check_speed,
)
from .errors import ConfigError, DomainError, MassDepletedError, SpeedLimitError
from .linearization import log_compensator_gain, to_physical


class Mode(str, enum.Enum):
    IDEAL = "ideal"
    PHYSICAL = "physical"


class EventKind(str, enum.Enum):
    SPEED_LIMIT_ABORT = "SpeedLimitAbort"
    MASS_DEPLETED = "MassDepleted"
    INPUT_CLAMPED = "InputClamped"

    @property
    def terminal(self) -> bool:
        return self is not EventKind.INPUT_CLAMPED


@dataclass(frozen=True)
class Event:
    time: float
    kind: EventKind


@dataclass(frozen=True)
class Tolerances:
    """Thresholds used by the invariant monitors."""

    residual: float = 1e-8
    round_trip: float = 1e-12
    classical_limit: float = 1e-4
    linearization: float = 1e-8
    order_low: float = 12.0
    order_high: float = 20.0
    # terminal errors below this are rounding noise, too small to show an order
    roundoff_floor: float = 1e-10


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``abort_eps`` is the relative margin below c at which a relativistic run
    ends with a SpeedLimitAbort; ``zoh_period`` (a multiple of ``dt``)
    switches the controller to zero-order hold.
    """

    dt: float = 1e-3
    horizon: float = 1.0
    mode: Mode = Mode.IDEAL
    abort_eps: float = 1e-9
    zoh_period: float | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt}", "sim.dt")
        if not (math.isfinite(self.horizon) and self.horizon >= self.dt):
            raise ConfigError(f"horizon must be >= dt, got {self.horizon}", "sim.horizon")
        if not 0 < self.abort_eps <= 1e-6:
            raise ConfigError(f"abort_eps must lie in (0, 1e-6], got {self.abort_eps}",
                              "sim.abort_eps")
        if self.zoh_period is not None:
            ratio = self.zoh_period / self.dt
            if ratio < 1 or abs(ratio - round(ratio)) > 1e-9 * ratio:
                raise ConfigError(f"zoh_period must be a positive multiple of dt, got "
                                  f"{self.zoh_period}", "sim.zoh_period")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def zoh_every(self) -> int:
        return 0 if self.zoh_period is None else int(round(self.zoh_period / self.dt))


@dataclass(frozen=True)
class SimState:
    clock: FrameClock
    kin: KinematicState
    m: float

    @classmethod
    def make(cls, t=0.0, tau=0.0, p=0.0, v=0.0, m=1.0) -> "SimState":
        return cls(FrameClock(float(t), float(tau)), KinematicState(float(p), float(v)), float(m))

    @property
    def t(self) -> float:
        return self.clock.t

    @property
    def tau(self) -> float:
        return self.clock.tau

    @property
    def p(self) -> float:
        return self.kin.p

    @property
    def v(self) -> float:
        return self.kin.v


def initial_state(params: RocketParams, p=0.0, v=0.0, m=None, t=0.0) -> SimState:
    """Start state; the mass defaults to the closed-form value for ``v``."""
    v = check_speed(v, params)
    if m is None:
        log_ratio = K.log_mass_ratio(v, params.kernel_model, params.c, params.vbar,
                                     params.half_exponent)
        m = params.m0 * math.exp(log_ratio)
    return SimState.make(t=t, tau=0.0, p=p, v=v, m=m)


# --------------------------------------------------------------------------
# plant


def derivatives(state: SimState, u: float, params: RocketParams):
    """(dp/dt, dv/dt, dm/dt, dtau/dt) for a commanded mass rate ``u``.

    Relativistic plants read ``u`` as dm/dtau and convert it to Earth time
    with dtau/dt; the classical plant reads it as dm/dt.
    """
    v = check_speed(state.v, params)
    dv, dm, dtau = K.rhs(v, float(u), params.kernel_model, params.c, params.vbar,
                         params.m0, params.half_exponent)
    return v, dv, dm, dtau


def consistency_residual(state: SimState, params: RocketParams, v_initial: float,
                         m_initial: float) -> float:
    """m/m_initial minus the closed-form mass ratio between v_initial and v."""
    km = params.kernel_model
    ref = K.log_mass_ratio(v_initial, km, params.c, params.vbar, params.half_exponent)
    now = K.log_mass_ratio(state.v, km, params.c, params.vbar, params.half_exponent)
    return state.m / m_initial - math.exp(now - ref)


class Controller(Protocol):
    def __call__(self, t: float, state: SimState) -> float: ...


def _speed_bound(params: RocketParams, abort_eps: float) -> float:
    return params.c * (1.0 - abort_eps) if params.model.is_relativistic else math.inf


def _rk4(state, z, input_fn, error_fn, dt, params, vmax, limit=math.inf, held=None):
    """One RK4 step of (p, v, m, tau) plus the error integral ``z``.

    ``input_fn(t, state, z, t_step) -> (u, clamped)`` where ``t_step`` is the
    start of the step; with ``held`` set every stage uses that mass rate
    instead. Returns (new_state, new_z, clamped).
    """
    km, c, vbar, m0, he = (params.kernel_model, params.c, params.vbar, params.m0,
                           params.half_exponent)
    t, p, v, m, tau = state.t, state.p, state.v, state.m, state.tau
    h2 = 0.5 * dt

    def stage(ts, ps, vs, ms, taus, zs):
        if abs(vs) >= vmax:
            exc = SpeedLimitError(f"|v| reached the abort threshold at t = {ts}")
            exc.time = ts
            raise exc
        s = SimState.make(ts, taus, ps, vs, ms)
        if held is None:
            u, clamped = input_fn(ts, s, min(max(zs, -limit), limit), t)
        else:
            u, clamped = held, False
        dv, dm, dtau = K.rhs(vs, u, km, c, vbar, m0, he)
        return clamped, vs, dv, dm, dtau, error_fn(ts, s)

    c1, dp1, dv1, dm1, dt1, e1 = stage(t, p, v, m, tau, z)
    c2, dp2, dv2, dm2, dt2, e2 = stage(t + h2, p + h2 * dp1, v + h2 * dv1, m + h2 * dm1,
                                       tau + h2 * dt1, z + h2 * e1)
    c3, dp3, dv3, dm3, dt3, e3 = stage(t + h2, p + h2 * dp2, v + h2 * dv2, m + h2 * dm2,
                                       tau + h2 * dt2, z + h2 * e2)
    c4, dp4, dv4, dm4, dt4, e4 = stage(t + dt, p + dt * dp3, v + dt * dv3, m + dt * dm3,
                                       tau + dt * dt3, z + dt * e3)
    sixth = dt / 6.0
    new = SimState.make(
        t=t + dt,
        tau=tau + sixth * (dt1 + 2.0 * dt2 + 2.0 * dt3 + dt4),
        p=p + sixth * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4),
        v=v + sixth * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4),
        m=m + sixth * (dm1 + 2.0 * dm2 + 2.0 * dm3 + dm4),
    )
    z_new = z + sixth * (e1 + 2.0 * e2 + 2.0 * e3 + e4)
    return new, min(max(z_new, -limit), limit), c1 or c2 or c3 or c4


def _no_error(t, state):
    return 0.0


def _input_fn(controller, mode):
    """Wrap a controller as ``(t, state, z, t_step) -> (u, clamped)``.

    Controllers needing the error integral or the step start expose
    ``command(t, state, z, t_step)`` (and ``error(t, state)`` for the
    integrand); anything else is called as ``controller(t, state)``.
    """
    command = getattr(controller, "command", None)
    physical = Mode(mode) is Mode.PHYSICAL

    def input_fn(t, state, z, t_step):
        if command is not None:
            u = float(command(t, state, z, t_step))
        else:
            u = float(controller(t, state))
        if physical and u > 0.0:
            return 0.0, True
        return u, False

    return input_fn


def step_rk4(state: SimState, controller: Controller, dt: float, params: RocketParams,
             mode: Mode = Mode.IDEAL, abort_eps: float = 1e-9) -> tuple[SimState, bool]:
    """Advance one RK4 step with the controller evaluated at every stage.

    Returns the new state and whether the physical-mode clamp bound.

    Raises
    ------
    SpeedLimitError
        A stage or the result reached |v| >= c (1 - abort_eps).
    MassDepletedError
        The result has m <= m_dry.
    """
    vmax = _speed_bound(params, abort_eps)
    new, _, clamped = _rk4(state, 0.0, _input_fn(controller, mode), _no_error, dt, params, vmax)
    if abs(new.v) >= vmax:
        raise SpeedLimitError(f"|v| reached the abort threshold at t = {new.t}")
    if new.m <= params.m_dry:
        raise MassDepletedError(f"mass {new.m} fell to the dry-mass floor {params.m_dry}")
    return new, clamped


# --------------------------------------------------------------------------
# controller specifications


def _law_array(**kw) -> np.ndarray:
    law = np.zeros(K.LAW_SIZE)
    law[K.LAW_ACTIVE_UNTIL] = math.inf
    law[K.LAW_INTEGRAL_LIMIT] = math.inf
    names = {
        "offset": K.LAW_OFFSET, "ramp": K.LAW_RAMP, "amplitude": K.LAW_SIN_AMP,
        "omega": K.LAW_SIN_OMEGA, "phase": K.LAW_SIN_PHASE, "k_pos": K.LAW_K_POS,
        "k_vel": K.LAW_K_VEL, "k_int": K.LAW_K_INT, "reference": K.LAW_REF,
        "reference_rate": K.LAW_REF_RATE, "active_until": K.LAW_ACTIVE_UNTIL,
        "integral_limit": K.LAW_INTEGRAL_LIMIT, "direct": K.LAW_DIRECT,
    }
    for key, value in kw.items():
        law[names[key]] = value
    return law


class _Stateless:
    def __init__(self, fn):
        self._fn = fn

    def __call__(self, t, state):
        return self._fn(t, state)


@dataclass(frozen=True)
class StateFeedbackLaw:
    K: GainVector

    def law_array(self):
        return _law_array(k_pos=-self.K.k1, k_vel=-self.K.k2)

    def controller(self, params, dt):
        return _Stateless(lambda t, s: state_feedback(s.kin, self.K, params))


@dataclass(frozen=True)
class OutputFeedbackLaw:
    """Output feedback w = l(y).

    ``preset`` is ``"proportional"`` (l = kp (r - y)), ``"pd"``
    (l = kp (r - y) - kd dy/dt) or ``None`` with a user map ``law(y)``.
    """

    preset: str | None = "proportional"
    kp: float = 0.0
    kd: float = 0.0
    reference: float = 0.0
    law: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.preset not in ("proportional", "pd", None):
            raise ConfigError(f"unknown output-feedback preset {self.preset!r}", "controller.preset")
        if self.preset is None and self.law is None:
            raise ConfigError("a custom output-feedback law is required when preset is None")

    def law_array(self):
        if self.preset is None:
            return None
        kd = self.kd if self.preset == "pd" else 0.0
        return _law_array(offset=self.kp * self.reference, k_pos=-self.kp, k_vel=-kd)

    def controller(self, params, dt):
        if self.preset is None:
            law = self.law
            return _Stateless(lambda t, s: output_feedback(s.p, s.v, law, params))
        kd = self.kd if self.preset == "pd" else 0.0

        def fn(t, s):
            return output_feedback(s.p, s.v, lambda y: self.kp * (self.reference - y) - kd * s.v,
                                   params)

        return _Stateless(fn)


@dataclass(frozen=True)
class PIDLaw:
    """PID on e = r(t) - y with r(t) = reference + reference_rate * t."""

    gains: PIDGains
    reference: float = 0.0
    reference_rate: float = 0.0
    integral_limit: float = math.inf

    def law_array(self):
        g, r0, r1 = self.gains, self.reference, self.reference_rate
        return _law_array(offset=g.kp * r0 + g.kd * r1, ramp=g.kp * r1, k_pos=-g.kp,
                          k_vel=-g.kd, k_int=g.ki, reference=r0, reference_rate=r1,
                          integral_limit=self.integral_limit)

    def controller(self, params, dt):
        return _PIDController(self, params)


class _PIDController:
    """Python-engine PID; the error integral is supplied by the integrator."""

    def __init__(self, law: PIDLaw, params: RocketParams):
        self.law = law
        self.params = params
        self.integral_limit = law.integral_limit

    def error(self, t, s):
        return self.law.reference + self.law.reference_rate * t - s.p

    def command(self, t, s, integral, t_step=None):
        r_dot = self.law.reference_rate
        e = self.error(t, s)
        memory = PIDState(integral=integral, prev_error=e, reference=self.law.reference,
                          integral_limit=self.integral_limit)
        u, _ = pid_control(e, memory, r_dot - s.v, self.law.gains, 0.0, self.params,
                           reference_rate=r_dot)
        return u


@dataclass(frozen=True)
class OpenLoopLaw:
    """Open-loop schedule s(t) = offset + ramp t + amplitude sin(omega t + phase).

    By default s(t) is the virtual input w and passes through the
    compensator; with ``direct=True`` it is the mass rate u itself. A callable
    ``schedule(t)`` replaces the built-in form when given.
    """

    offset: float = 0.0
    ramp: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    direct: bool = False
    schedule: Callable[[float], float] | None = None

    def w(self, t: float) -> float:
        if self.schedule is not None:
            return float(self.schedule(t))
        out = self.offset + self.ramp * t
        if self.amplitude != 0.0:
            out += self.amplitude * math.sin(self.omega * t + self.phase)
        return out

    def law_array(self):
        if self.schedule is not None:
            return None
        return _law_array(offset=self.offset, ramp=self.ramp, amplitude=self.amplitude,
                          omega=self.omega, phase=self.phase, direct=float(self.direct))

    def controller(self, params, dt):
        if self.direct:
            return _Stateless(lambda t, s: self.w(t))
        return _Stateless(lambda t, s: to_physical(self.w(t), s.v, params))


@dataclass(frozen=True)
class SteeringLaw:
    """Follows a minimum-energy plan on [t0, T], then coasts with w = 0."""

    plan: SteeringPlan

    def law_array(self):
        a0, a1 = self.plan.coefficients
        return _law_array(offset=a0, ramp=a1, active_until=self.plan.T)

    def controller(self, params, dt):
        return _SteeringController(self.plan, params, 0.25 * dt)


class _SteeringController:
    """Plan on [t0, T]; zero for stages past T and for steps starting at T."""

    def __init__(self, plan: SteeringPlan, params: RocketParams, slack: float):
        self.plan, self.params, self.slack = plan, params, slack

    def command(self, t, s, integral=0.0, t_step=None):
        T = self.plan.T
        t_step = t if t_step is None else t_step
        active = t <= T + self.slack and t_step <= T - self.slack
        return to_physical(self.plan.w(t) if active else 0.0, s.v, self.params)


@dataclass(frozen=True)
class ZeroLaw:
    def law_array(self):
        return _law_array()

    def controller(self, params, dt):
        return _Stateless(lambda t, s: 0.0)


# --------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Sample:
    state: SimState
    u: float
    w: float
    gain: float
    residual: float


COLUMNS = ("t", "tau", "p", "v", "m", "u", "w", "gain", "residual")


@dataclass
class Trajectory:
    """Column-oriented record of a run.

    ``data`` has one row per sample and the columns named in ``COLUMNS``.
    """

    data: np.ndarray
    events: list[Event]
    dt: float

    def __len__(self):
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, COLUMNS.index(name)]

    def __getattr__(self, name):
        if name in COLUMNS:
            return self.column(name)
        raise AttributeError(name)

    def sample(self, i: int) -> Sample:
        t, tau, p, v, m, u, w, g, r = (float(x) for x in self.data[i])
        return Sample(SimState.make(t, tau, p, v, m), u, w, g, r)

    @property
    def samples(self) -> list[Sample]:
        return [self.sample(i) for i in range(len(self))]

    @property
    def terminal_state(self) -> SimState:
        return self.sample(len(self) - 1).state

    @property
    def terminal_event(self) -> Event | None:
        for ev in self.events:
            if ev.kind.terminal:
                return ev
        return None


def _events_from_flags(times, flags, n_written):
    events = []
    previous = False
    for n in range(max(n_written - 1, 0)):
        flag = bool(flags[n])
        if flag and not previous:
            events.append(Event(float(times[n]), EventKind.INPUT_CLAMPED))
        previous = flag
    return events


_KERNEL_EVENTS = {K.EVENT_SPEED: EventKind.SPEED_LIMIT_ABORT, K.EVENT_MASS: EventKind.MASS_DEPLETED}


def _finish(params, rows, flags, n_written, event_code, event_time, dt, initial):
    data = np.empty((n_written, len(COLUMNS)))
    data[:, :K.N_COLS] = rows[:n_written]
    data[:, -1] = K.residuals(data[:, 3].copy(), data[:, 4].copy(), initial.v, initial.m,
                              params.kernel_model, params.c, params.vbar, params.half_exponent)
    events = _events_from_flags(data[:, 0], flags, n_written)
    if event_code != K.EVENT_NONE:
        events.append(Event(float(event_time), _KERNEL_EVENTS[event_code]))
    return Trajectory(data, events, dt)


def _run_kernel(params, initial, law, config, model=None):
    n = config.n_steps
    rows = np.zeros((n + 1, K.N_COLS))
    flags = np.zeros(n + 1, dtype=np.bool_)
    state0 = np.array([initial.t, initial.tau, initial.p, initial.v, initial.m])
    km = params.kernel_model if model is None else model
    written, code, when = K.integrate(
        state0, law, n, config.dt, km, params.c, params.vbar, params.m0, params.half_exponent,
        params.m_dry, config.mode is Mode.PHYSICAL, config.abort_eps, config.zoh_every,
        rows, flags)
    return rows, flags, int(written), int(code), float(when)


def _run_python(params, initial, controller, config):
    n = config.n_steps
    dt = config.dt
    vmax = _speed_bound(params, config.abort_eps)
    rows = np.zeros((n + 1, K.N_COLS))
    flags = np.zeros(n + 1, dtype=np.bool_)
    input_fn = _input_fn(controller, config.mode)
    error_fn = getattr(controller, "error", _no_error)
    limit = getattr(controller, "integral_limit", math.inf)
    every = config.zoh_every
    held = 0.0

    state = initial
    z = 0.0
    if abs(state.v) >= vmax:
        return rows, flags, 0, K.EVENT_SPEED, state.t
    t0 = initial.t
    for k in range(n + 1):
        t = t0 + k * dt
        state = SimState.make(t, state.tau, state.p, state.v, state.m)
        try:
            if every and k % every != 0:
                u0, clamp0 = held, False
            else:
                u0, clamp0 = input_fn(t, state, z, t)
                held = u0
        except SpeedLimitError:
            return rows, flags, k, K.EVENT_SPEED, t
        gain = math.exp(log_compensator_gain(state.v, params))
        rows[k] = (t, state.tau, state.p, state.v, state.m, u0, u0 / gain, gain)
        if k == n:
            return rows, flags, n + 1, K.EVENT_NONE, t
        try:
            new, z, clamped = _rk4(state, z, input_fn, error_fn, dt, params, vmax, limit,
                                   held=held if every else None)
        except SpeedLimitError as exc:
            return rows, flags, k + 1, K.EVENT_SPEED, getattr(exc, "time", t)
        flags[k] = clamped or clamp0
        t_next = t0 + (k + 1) * dt
        if abs(new.v) >= vmax:
            return rows, flags, k + 1, K.EVENT_SPEED, t_next
        if new.m <= params.m_dry:
            return rows, flags, k + 1, K.EVENT_MASS, t_next
        state = new
    return rows, flags, n + 1, K.EVENT_NONE, t0 + n * dt


def run_closed_loop(params: RocketParams, initial: SimState, controller, config: SimConfig,
                    engine: str = "auto") -> Trajectory:
    """Simulate the plant under ``controller`` for ``config.horizon``.

    ``controller`` is a law specification (``StateFeedbackLaw``, ``PIDLaw``,
    ``OpenLoopLaw``, ...) or any callable ``(t, state) -> u``. ``engine`` is
    ``"auto"``, ``"kernel"`` or ``"python"``; the kernel needs a law with a
    virtual-law form. Terminal events end the run and are recorded in the
    trajectory rather than raised.
    """
    if not is_relativistically_reachable(initial.kin, params):
        raise SpeedLimitError(f"initial velocity {initial.v} is not reachable (c = {params.c})")
    if not initial.m > params.m_dry:
        raise DomainError(f"initial mass {initial.m} must exceed m_dry = {params.m_dry}")
    law = controller.law_array() if hasattr(controller, "law_array") else None
    if engine not in ("auto", "kernel", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "kernel" and law is None:
        raise ValueError("this controller has no virtual-law form; use engine='python'")
    if law is not None and engine != "python":
        rows, flags, n, code, when = _run_kernel(params, initial, law, config)
    else:
        fn = controller.controller(params, config.dt) if hasattr(controller, "controller") \
            else controller
        rows, flags, n, code, when = _run_python(params, initial, fn, config)
    return _finish(params, rows, flags, n, code, when, config.dt, initial)


def run_linear_reference(params: RocketParams, initial: SimState, controller,
                         config: SimConfig) -> Trajectory:
    """Run a virtual law on the double integrator dv/dt = b w (no compensator).

    The mass and proper-time columns are meaningless for this plant.
    """
    law = controller.law_array()
    if law is None:
        raise ValueError("controller has no virtual-law form")
    linear_cfg = SimConfig(dt=config.dt, horizon=config.horizon, mode=Mode.IDEAL,
                           abort_eps=config.abort_eps, zoh_period=config.zoh_period,
                           tolerances=config.tolerances)
    classical = params.with_model(Model.CLASSICAL)
    rows, flags, n, code, when = _run_kernel(classical, initial, law, linear_cfg, model=K.LINEAR)
    data = np.empty((n, len(COLUMNS)))
    data[:, :K.N_COLS] = rows[:n]
    data[:, -1] = 0.0
    return Trajectory(data, [], config.dt)
