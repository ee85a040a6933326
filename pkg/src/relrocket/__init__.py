"""Classical and relativistic rocket dynamics with exact feedback linearization."""

from ._jit import NUMBA_ENABLED
from .control import (
    GainVector,
    PIDGains,
    PIDState,
    SteeringPlan,
    controllability_gramian,
    is_relativistically_reachable,
    min_energy_steering,
    output_feedback,
    pid_control,
    place_poles,
    state_feedback,
)
from .dynamics import (
    SPEED_OF_LIGHT_SI,
    FrameClock,
    KinematicState,
    Model,
    RocketParams,
    classical_accel,
    classical_mass,
    mass_ratio_from_velocity,
    proper_time_rate,
    rel_accel,
    rel_accel_mass_form,
    velocity_from_mass_ratio,
)
from .errors import (
    ConfigError,
    DomainError,
    MassDepletedError,
    SpeedLimitError,
    UncontrollableError,
    UnreachableStateError,
)
from .linearization import (
    CompensatorGain,
    LinearStateSpace,
    compensator_gain,
    linearized_system,
    to_physical,
    to_virtual,
)
from .simulation import (
    Event,
    EventKind,
    Mode,
    OpenLoopLaw,
    OutputFeedbackLaw,
    PIDLaw,
    SimConfig,
    SimState,
    StateFeedbackLaw,
    SteeringLaw,
    Tolerances,
    Trajectory,
    ZeroLaw,
    consistency_residual,
    derivatives,
    initial_state,
    run_closed_loop,
    run_linear_reference,
    step_rk4,
)
from .io import (
    read_trajectory,
    trajectory_from_csv,
    trajectory_from_json,
    trajectory_to_csv,
    trajectory_to_json,
    write_trajectory,
)
from .runner import CheckResult, RunReport, execute, verify
from .scenario import Scenario, parse_scenario

__version__ = "0.1.0"
