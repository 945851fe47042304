"""Front tracking for Temple-class systems on a strip with boundary controls."""

from .control import SynthesisPlan, backward_phase, forward_phase, horizon, profiles_match, synthesize
from .decay import (
    DecayConstants,
    calibrate_constants,
    check_k_rho,
    default_constants,
    oleinik_report,
    rho_for_time,
    spreading_report,
)
from .exceptions import *  # noqa: F401,F403
from .profile import (
    GridLevel,
    Profile,
    l1_distance,
    partition,
    quantize,
    read_profile_csv,
    satisfies_rarefcond,
    total_variation,
    write_profile_csv,
)
from .riemann import Front, solve_backward_riemann, solve_boundary_riemann, solve_riemann
from .system import SpeedBounds, SystemSpec, diag2, diagonal_affine, rh_speed, system_from_config, validate_system
from .tracking import BoundaryControl, Event, Trajectory, init_forward, next_event, run_forward

__version__ = "0.1.0"
