"""Scenario execution and the invariant report.

:func:`execute` designs the controller, runs the simulation and checks the
trajectory against the model's invariants. :func:`verify` adds the
pointwise checks (coordinate round trips and the classical limit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .dynamics import (
    Model,
    classical_accel,
    mass_ratio_from_velocity,
    rel_accel,
    velocity_from_mass_ratio,
)
from .errors import RocketError
from .io import write_trajectory
from .linearization import to_physical, to_virtual
from .scenario import OpenLoopSpec, Scenario
from .simulation import (
    EventKind,
    Event,
    Mode,
    SimState,
    Trajectory,
    run_closed_loop,
    run_linear_reference,
)

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EVENT = 2


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    measured: float | None = None
    threshold: float | None = None
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "status": self.status, "measured": self.measured,
                "threshold": self.threshold, "detail": self.detail}


@dataclass
class RunReport:
    """Outcome of one scenario run.

    ``checks`` lists every invariant with a verdict; ``design`` holds the
    designed gains or steering plan.
    """

    command: str
    model: str
    terminal_state: SimState | None
    events: list[Event] = field(default_factory=list)
    checks: list[CheckResult] = field(default_factory=list)
    design: dict[str, Any] = field(default_factory=dict)
    n_samples: int = 0
    output_path: str | None = None

    @property
    def terminal_event(self) -> Event | None:
        return next((ev for ev in self.events if ev.kind.terminal), None)

    @property
    def failed(self) -> list[CheckResult]:
        return [c for c in self.checks if c.status == FAIL]

    @property
    def terminal_norm(self) -> float | None:
        s = self.terminal_state
        return None if s is None else math.hypot(s.p, s.v)

    @property
    def exit_code(self) -> int:
        if self.terminal_event is not None:
            return EXIT_EVENT
        if self.command == "verify" and self.failed:
            return EXIT_EVENT
        return EXIT_OK

    def to_dict(self) -> dict[str, Any]:
        s = self.terminal_state
        terminal = None if s is None else {"t": s.t, "tau": s.tau, "p": s.p, "v": s.v, "m": s.m}
        return {
            "command": self.command,
            "model": self.model,
            "exit_code": self.exit_code,
            "samples": self.n_samples,
            "terminal_state": terminal,
            "terminal_norm": self.terminal_norm,
            "events": [{"time": ev.time, "kind": ev.kind.value} for ev in self.events],
            "design": self.design,
            "checks": [c.to_dict() for c in self.checks],
            "output": self.output_path,
        }

    def to_text(self) -> str:
        lines = [f"{self.command}: model={self.model} samples={self.n_samples}"]
        for key, value in self.design.items():
            lines.append(f"  design {key} = {value}")
        s = self.terminal_state
        if s is not None:
            lines.append(f"  terminal t={s.t:.6g} tau={s.tau:.6g} p={s.p:.6g} v={s.v:.6g} "
                         f"m={s.m:.6g} |x|={self.terminal_norm:.3e}")
        for ev in self.events:
            lines.append(f"  event {ev.kind.value} at t={ev.time:.6g}")
        for c in self.checks:
            measured = "" if c.measured is None else f" measured={c.measured:.3e}"
            threshold = "" if c.threshold is None else f" threshold={c.threshold:.3e}"
            detail = f" ({c.detail})" if c.detail else ""
            lines.append(f"  [{c.status.upper():7s}] {c.name}{measured}{threshold}{detail}")
        if self.output_path:
            lines.append(f"  trajectory written to {self.output_path}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# invariant checks


def _verdict(name, measured, threshold, ok, detail=""):
    return CheckResult(name, PASS if ok else FAIL, float(measured), threshold, detail)


def check_speed_limit(sc: Scenario, traj: Trajectory) -> CheckResult:
    if not sc.params.model.is_relativistic:
        return CheckResult("speed_limit", SKIPPED, detail="relativistic models only")
    peak = float(np.max(np.abs(traj.v))) / sc.params.c
    return _verdict("speed_limit", peak, 1.0, peak < 1.0, "max |v|/c over samples")


def check_consistency(sc: Scenario, traj: Trajectory) -> CheckResult:
    tol = sc.sim.tolerances.residual
    worst = float(np.max(np.abs(traj.residual)))
    law = "mass-velocity law" if sc.params.model.is_relativistic else "classical mass law"
    return _verdict("consistency_residual", worst, tol, worst <= tol, f"max |residual|, {law}")


def check_mass_monotonicity(sc: Scenario, traj: Trajectory) -> CheckResult:
    if sc.sim.mode is not Mode.PHYSICAL:
        return CheckResult("mass_monotonicity", SKIPPED, detail="physical mode only")
    m = traj.m
    rise = float(np.max(np.diff(m), initial=0.0))
    above_floor = bool(np.all(m > sc.params.m_dry))
    return _verdict("mass_monotonicity", rise, 0.0, rise <= 0.0 and above_floor,
                    "max increase of m between samples")


def check_proper_time(sc: Scenario, traj: Trajectory) -> CheckResult:
    if not sc.params.model.is_relativistic:
        return CheckResult("proper_time_lag", SKIPPED, detail="relativistic models only")
    elapsed = traj.t - traj.t[0]
    lead = traj.tau - elapsed
    worst = float(np.max(lead))
    slack = 1e-12 * max(1.0, float(np.max(np.abs(elapsed))))
    ok = worst <= slack
    # equality may only hold while the rocket has been at rest
    moved = np.cumsum(np.abs(traj.v)) > 0
    if np.any(moved):
        first = int(np.argmax(moved))
        ok = ok and bool(np.all(lead[first + 1:] <= slack))
    return _verdict("proper_time_lag", worst, slack, ok, "max of tau - (t - t0)")


def _linear_skip_reason(sc: Scenario, traj: Trajectory) -> str | None:
    if sc.sim.zoh_period is not None:
        return "zero-order hold holds u, not w"
    if isinstance(sc.controller, OpenLoopSpec) and sc.controller.direct:
        return "direct mass-rate schedule bypasses the compensator"
    if any(ev.kind is EventKind.INPUT_CLAMPED for ev in traj.events):
        return "physical-mode clamping altered the input"
    return None


def check_linearization(sc: Scenario, traj: Trajectory, law) -> CheckResult:
    reason = _linear_skip_reason(sc, traj)
    if reason:
        return CheckResult("linearization_exactness", SKIPPED, detail=reason)
    ref = run_linear_reference(sc.params, sc.initial, law, sc.sim)
    n = len(traj)
    gap = max(float(np.max(np.abs(traj.p - ref.p[:n]))), float(np.max(np.abs(traj.v - ref.v[:n]))))
    tol = sc.sim.tolerances.linearization
    return _verdict("linearization_exactness", gap, tol, gap <= tol,
                    "max |x - x_linear| over samples")


def _terminal(traj: Trajectory) -> np.ndarray:
    return traj.data[-1, 1:5]


def check_convergence(sc: Scenario, traj: Trajectory, law) -> CheckResult:
    """Halve dt and compare terminal-state errors against a dt/16 reference."""
    tol = sc.sim.tolerances
    cfg = sc.sim
    n = cfg.n_steps
    horizon = n * cfg.dt
    if traj.terminal_event is not None:
        return CheckResult("convergence_order", SKIPPED, detail=(
            f"run ended early with {traj.terminal_event.kind.value}"))
    runs = []
    for div in (1, 2, 16):
        sub = replace(cfg, dt=cfg.dt / div, horizon=horizon)
        run = traj if div == 1 else run_closed_loop(sc.params, sc.initial, law, sub)
        if run.terminal_event is not None:
            return CheckResult("convergence_order", FAIL, detail=(
                f"run with dt/{div} ended with {run.terminal_event.kind.value}"))
        runs.append(_terminal(run))
    coarse = float(np.linalg.norm(runs[0] - runs[2]))
    fine = float(np.linalg.norm(runs[1] - runs[2]))
    if coarse <= tol.roundoff_floor:
        return CheckResult("convergence_order", PASS, coarse, tol.roundoff_floor,
                           "error at dt already below the roundoff floor")
    ratio = coarse / fine if fine > 0 else math.inf
    ok = tol.order_low <= ratio <= tol.order_high
    return CheckResult("convergence_order", PASS if ok else FAIL, ratio, tol.order_low,
                       f"error ratio dt vs dt/2, accepted [{tol.order_low:g}, "
                       f"{tol.order_high:g}]; error at dt {coarse:.3e}")


def check_round_trip(sc: Scenario, traj: Trajectory) -> list[CheckResult]:
    tol = sc.sim.tolerances.round_trip
    params = sc.params
    worst = 0.0
    for v, w in zip(traj.v, traj.w):
        back = to_virtual(to_physical(w, v, params), v, params)
        worst = max(worst, abs(back - w) / max(abs(w), 1e-300))
    out = [_verdict("round_trip_compensator", worst, tol, worst <= tol,
                    "max relative |w - to_virtual(to_physical(w))|")]
    if not params.model.is_relativistic:
        out.append(CheckResult("round_trip_mass_velocity", SKIPPED,
                               detail="relativistic models only"))
        return out
    # scaled by c: near rest a float mass ratio cannot resolve v to relative precision
    worst = 0.0
    for v in traj.v:
        back = velocity_from_mass_ratio(mass_ratio_from_velocity(v, params), params)
        worst = max(worst, abs(back - v) / params.c)
    out.append(_verdict("round_trip_mass_velocity", worst, tol, worst <= tol,
                        "max |v - v(m(v))| / c"))
    return out


def check_classical_limit(sc: Scenario) -> CheckResult:
    params = sc.params
    if not params.model.is_relativistic:
        return CheckResult("classical_limit", SKIPPED, detail="relativistic models only")
    classical = params.with_model(Model.CLASSICAL)
    tol = sc.sim.tolerances.classical_limit
    worst = 0.0
    for beta in (1e-4, 1e-3):
        for sign in (1.0, -1.0):
            v = sign * beta * params.c
            if abs(v) > 10.0 * params.vbar:
                continue
            a_rel = rel_accel(v, -1.0, params)
            a_cl = classical_accel(v, -1.0, classical)
            worst = max(worst, abs(a_rel - a_cl) / abs(a_cl))
    return _verdict("classical_limit", worst, tol, worst <= tol,
                    "relative accel gap at v/c = 1e-4, 1e-3")


# --------------------------------------------------------------------------
# entry points


def design(scenario: Scenario) -> RunReport:
    _, info = scenario.design()
    return RunReport("design", scenario.params.model.value, None, design=info)


def _run(scenario: Scenario, command: str) -> tuple[RunReport, Trajectory, Any]:
    law, info = scenario.design()
    traj = run_closed_loop(scenario.params, scenario.initial, law, scenario.sim)
    checks = [
        check_speed_limit(scenario, traj),
        check_consistency(scenario, traj),
        check_mass_monotonicity(scenario, traj),
        check_proper_time(scenario, traj),
        check_linearization(scenario, traj, law),
        check_convergence(scenario, traj, law),
    ]
    report = RunReport(command, scenario.params.model.value, traj.terminal_state,
                       list(traj.events), checks, info, len(traj))
    return report, traj, law


def execute(scenario: Scenario, out: str | Path | None = None,
            fmt: str | None = None) -> tuple[RunReport, Trajectory]:
    """Design, simulate and check; writes the trajectory when a path is known.

    ``out`` and ``fmt`` override the scenario's output settings.
    """
    report, traj, _ = _run(scenario, "simulate")
    path = out if out is not None else scenario.output.path
    if path is not None:
        try:
            written = write_trajectory(traj, path, fmt or scenario.output.format)
        except OSError as exc:
            raise RocketError(f"cannot write trajectory to {path}: {exc.strerror or exc}") from None
        report.output_path = str(written)
    return report, traj


def verify(scenario: Scenario) -> RunReport:
    """Run the scenario and report every invariant plus the pointwise checks."""
    report, traj, _ = _run(scenario, "verify")
    report.checks.extend(check_round_trip(scenario, traj))
    report.checks.append(check_classical_limit(scenario))
    return report

