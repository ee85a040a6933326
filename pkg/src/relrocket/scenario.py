"""Scenario documents: JSON in, validated run description out.

A scenario names the rocket, its initial state, one controller, the
integration settings and where the trajectory goes::

    {
      "params": {"m0": 1.0, "vbar": 1.0},
      "controller": {"type": "pid", "critical_rate": 1.0, "reference": 1.0},
      "sim": {"horizon": 10.0}
    }

Unknown keys are rejected. Units are natural (c = 1) unless
``params.si_units`` is true, which sets c = 299 792 458 m/s.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import jsonschema

from .control import (
    GainVector,
    PIDGains,
    SteeringPlan,
    is_relativistically_reachable,
    min_energy_steering,
    place_poles,
)
from .dynamics import SPEED_OF_LIGHT_SI, KinematicState, Model, RocketParams
from .errors import ConfigError, DomainError
from .simulation import (
    Mode,
    OpenLoopLaw,
    OutputFeedbackLaw,
    PIDLaw,
    SimConfig,
    SimState,
    StateFeedbackLaw,
    SteeringLaw,
    Tolerances,
    initial_state,
)

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_POLE = {"oneOf": [_NUM, _PAIR]}


def _controller_case(kind: str, properties: dict, required=()) -> dict:
    props = {"type": {"const": kind}, **properties}
    return {
        "if": {"properties": {"type": {"const": kind}}, "required": ["type"]},
        "then": {"properties": props, "required": list(required), "additionalProperties": False},
    }


CONTROLLER_TYPES = ("state_feedback", "output_feedback", "pid", "open_loop", "steering")

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "relrocket scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["params", "controller"],
    "properties": {
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m0"],
            "properties": {
                "m0": _POS,
                "vbar": _POS,
                "c": _POS,
                "si_units": {"type": "boolean"},
                "m_dry": {"type": "number", "minimum": 0},
                "model": {"enum": [m.value for m in Model]},
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"p": _NUM, "v": _NUM, "m": _POS, "t": _NUM},
        },
        "controller": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": list(CONTROLLER_TYPES)}},
            "allOf": [
                _controller_case("state_feedback", {
                    "K": _PAIR,
                    "poles": {"type": "array", "items": _POLE, "minItems": 2, "maxItems": 2},
                }),
                _controller_case("output_feedback", {
                    "preset": {"enum": ["proportional", "pd"]},
                    "kp": _NUM, "kd": _NUM, "reference": _NUM,
                }, required=["kp"]),
                _controller_case("pid", {
                    "kp": _NUM, "ki": _NUM, "kd": _NUM, "critical_rate": _POS,
                    "reference": _NUM, "reference_rate": _NUM, "integral_limit": _POS,
                }),
                _controller_case("open_loop", {
                    "offset": _NUM, "ramp": _NUM, "amplitude": _NUM, "omega": _NUM,
                    "phase": _NUM, "direct": {"type": "boolean"},
                }),
                _controller_case("steering", {
                    "x0": _PAIR, "xT": _PAIR, "T": _NUM, "t0": _NUM,
                }, required=["xT", "T"]),
            ],
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": _POS,
                "horizon": _POS,
                "mode": {"enum": [m.value for m in Mode]},
                "abort_eps": _POS,
                "zoh_period": _POS,
                "tolerances": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {name: _POS for name in Tolerances.__dataclass_fields__},
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": "string"}, "format": {"enum": ["csv", "json"]}},
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


# --------------------------------------------------------------------------
# controller variants


@dataclass(frozen=True)
class StateFeedbackSpec:
    K: tuple[float, float] | None = None
    poles: tuple[complex, complex] | None = None

    def design(self, params: RocketParams, initial: SimState):
        gains = GainVector(*self.K) if self.K is not None else place_poles(params, self.poles)
        return StateFeedbackLaw(gains), {"K": [gains.k1, gains.k2]}


@dataclass(frozen=True)
class OutputFeedbackSpec:
    preset: str = "proportional"
    kp: float = 0.0
    kd: float = 0.0
    reference: float = 0.0

    def design(self, params, initial):
        law = OutputFeedbackLaw(preset=self.preset, kp=self.kp, kd=self.kd,
                                reference=self.reference)
        return law, {"preset": self.preset, "kp": self.kp, "kd": self.kd}


@dataclass(frozen=True)
class PIDSpec:
    """Explicit gains, or ``critical_rate`` for a critically damped triple pole."""

    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    critical_rate: float | None = None
    reference: float = 0.0
    reference_rate: float = 0.0
    integral_limit: float = math.inf

    def design(self, params, initial):
        if self.critical_rate is not None:
            gains = PIDGains.critically_damped(params, self.critical_rate)
        else:
            gains = PIDGains(self.kp, self.ki, self.kd)
        law = PIDLaw(gains, reference=self.reference, reference_rate=self.reference_rate,
                     integral_limit=self.integral_limit)
        return law, {"kp": gains.kp, "ki": gains.ki, "kd": gains.kd}


@dataclass(frozen=True)
class OpenLoopSpec:
    offset: float = 0.0
    ramp: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    direct: bool = False

    def design(self, params, initial):
        law = OpenLoopLaw(self.offset, self.ramp, self.amplitude, self.omega, self.phase,
                          self.direct)
        return law, {}


@dataclass(frozen=True)
class SteeringSpec:
    x0: tuple[float, float]
    xT: tuple[float, float]
    T: float
    t0: float

    def plan(self, params) -> SteeringPlan:
        return min_energy_steering(KinematicState(*self.x0), KinematicState(*self.xT), self.t0,
                                   self.T, params)

    def design(self, params, initial):
        plan = self.plan(params)
        a0, a1 = plan.coefficients
        info = {"t0": plan.t0, "T": plan.T, "lambda": list(plan.lam), "w_offset": a0,
                "w_slope": a1}
        return SteeringLaw(plan), info


ControllerSpec = StateFeedbackSpec | OutputFeedbackSpec | PIDSpec | OpenLoopSpec | SteeringSpec


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class Scenario:
    params: RocketParams
    initial: SimState
    controller: ControllerSpec
    sim: SimConfig
    output: OutputSpec = field(default_factory=OutputSpec)

    def design(self):
        """(law, design summary) for the configured controller."""
        return self.controller.design(self.params, self.initial)


# --------------------------------------------------------------------------
# parsing


def _reject_constant(name):
    raise ValueError(f"non-finite literal {name} is not allowed")


def _load(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _dotted(path) -> str:
    return ".".join(str(part) for part in path) or "<document>"


def _validate(doc: Any) -> None:
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: (list(map(str, e.path)), e.message))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(err.message, _dotted(err.absolute_path))


def _pole(item) -> complex:
    return complex(item[0], item[1]) if isinstance(item, list) else complex(item)


def _params(doc: dict) -> RocketParams:
    si = doc.get("si_units", False)
    if si and "c" in doc:
        raise ConfigError("c is fixed to 299792458 m/s when si_units is true", "params.c")
    c = SPEED_OF_LIGHT_SI if si else float(doc.get("c", 1.0))
    model = Model(doc.get("model", Model.RELATIVISTIC.value))
    vbar = doc.get("vbar")
    m0 = float(doc["m0"])
    m_dry = float(doc.get("m_dry", 0.0))
    if model is Model.PHOTON:
        if vbar is not None and float(vbar) != c:
            raise ConfigError(f"a photon rocket requires vbar == c, got vbar={vbar}, c={c}",
                              "params.vbar")
    elif vbar is None:
        raise ConfigError("vbar is required unless model is photon", "params.vbar")
    elif not float(vbar) <= c:
        raise ConfigError(f"vbar must not exceed c = {c}, got {vbar}", "params.vbar")
    if not m0 > m_dry:
        raise ConfigError(f"m_dry must be below m0 = {m0}, got {m_dry}", "params.m_dry")
    try:
        return RocketParams(m0=m0, vbar=None if vbar is None else float(vbar), c=c,
                            m_dry=m_dry, model=model)
    except DomainError as exc:
        raise ConfigError(str(exc), "params") from None


def _controller(doc: dict, initial: SimState) -> ControllerSpec:
    kind = doc["type"]
    if kind == "state_feedback":
        if ("K" in doc) == ("poles" in doc):
            raise ConfigError("give exactly one of K or poles", "controller")
        if "K" in doc:
            return StateFeedbackSpec(K=tuple(float(k) for k in doc["K"]))
        return StateFeedbackSpec(poles=tuple(_pole(p) for p in doc["poles"]))
    if kind == "output_feedback":
        return OutputFeedbackSpec(preset=doc.get("preset", "proportional"), kp=doc["kp"],
                                  kd=doc.get("kd", 0.0), reference=doc.get("reference", 0.0))
    if kind == "pid":
        explicit = any(k in doc for k in ("kp", "ki", "kd"))
        if explicit == ("critical_rate" in doc):
            raise ConfigError("give either gains (kp, ki, kd) or critical_rate", "controller")
        return PIDSpec(kp=doc.get("kp", 0.0), ki=doc.get("ki", 0.0), kd=doc.get("kd", 0.0),
                       critical_rate=doc.get("critical_rate"),
                       reference=doc.get("reference", 0.0),
                       reference_rate=doc.get("reference_rate", 0.0),
                       integral_limit=doc.get("integral_limit", math.inf))
    if kind == "open_loop":
        return OpenLoopSpec(**{k: v for k, v in doc.items() if k != "type"})
    # steering: x0 and t0 default to the initial state
    x0 = tuple(float(x) for x in doc.get("x0", (initial.p, initial.v)))
    if x0 != (initial.p, initial.v):
        raise ConfigError(f"x0 = {list(x0)} differs from the initial state "
                          f"{[initial.p, initial.v]}", "controller.x0")
    t0 = float(doc.get("t0", initial.t))
    if t0 != initial.t:
        raise ConfigError(f"t0 = {t0} differs from the initial time {initial.t}", "controller.t0")
    T = float(doc["T"])
    if not T > t0:
        raise ConfigError(f"T must exceed t0 = {t0}, got {T}", "controller.T")
    return SteeringSpec(x0=x0, xT=tuple(float(x) for x in doc["xT"]), T=T, t0=t0)


def _initial(doc: dict, controller_doc: dict, params: RocketParams) -> SimState:
    if controller_doc.get("type") == "steering" and "x0" in controller_doc:
        doc = {"p": controller_doc["x0"][0], "v": controller_doc["x0"][1], **doc}
    v = float(doc.get("v", 0.0))
    if not is_relativistically_reachable(KinematicState(0.0, v), params):
        raise ConfigError(f"|v| must be below c = {params.c}, got {v}", "initial.v")
    m = doc.get("m")
    if m is not None and not float(m) > params.m_dry:
        raise ConfigError(f"m must exceed m_dry = {params.m_dry}, got {m}", "initial.m")
    return initial_state(params, p=float(doc.get("p", 0.0)), v=v,
                         m=None if m is None else float(m), t=float(doc.get("t", 0.0)))


def _sim(doc: dict, controller: ControllerSpec) -> SimConfig:
    if "horizon" in doc:
        horizon = doc["horizon"]
    elif isinstance(controller, SteeringSpec):
        horizon = controller.T - controller.t0
    else:
        raise ConfigError("horizon is required", "sim.horizon")
    tolerances = Tolerances(**doc.get("tolerances", {}))
    return SimConfig(dt=doc.get("dt", 1e-3), horizon=horizon, mode=Mode(doc.get("mode", "ideal")),
                     abort_eps=doc.get("abort_eps", 1e-9), zoh_period=doc.get("zoh_period"),
                     tolerances=tolerances)


def scenario_from_dict(doc: Any) -> Scenario:
    """Validate an already-decoded document; see :func:`parse_scenario`."""
    _validate(doc)
    params = _params(doc["params"])
    initial = _initial(doc.get("initial", {}), doc["controller"], params)
    controller = _controller(doc["controller"], initial)
    sim = _sim(doc.get("sim", {}), controller)
    output = OutputSpec(**doc.get("output", {}))
    scenario = Scenario(params, initial, controller, sim, output)
    # run the design once so unplaceable poles or unreachable targets fail here
    try:
        scenario.design()
    except DomainError as exc:
        raise ConfigError(str(exc), "controller") from None
    return scenario


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a JSON scenario document.

    Raises
    ------
    ConfigError
        With ``location`` set to ``line L, column C`` for malformed JSON or to
        the dotted field path for schema and invariant violations.
    """
    return scenario_from_dict(_load(text))


def schema_text() -> str:
    return json.dumps(SCHEMA, indent=2) + "\n"
