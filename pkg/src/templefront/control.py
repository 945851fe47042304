"""Boundary-control synthesis.

A target profile is reached in two parts.  On ``[0, 3T/4]`` the initial data
are flushed out and replaced by a constant state ``omega`` in three stages;
on ``[3T/4, tau]`` the fronts of the target, traced backward in time until
they leave the strip, are re-injected through the boundaries.  Here
``T = 4 (b - a) / lambda_min``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .decay import DecayConstants, check_k_rho, default_constants, rho_for_time
from .exceptions import HorizonTooShortError, NotAttainableError, NotBackwardSolvableError, PreconditionError
from .profile import GridLevel, Profile, l1_distance, on_grid, quantize, satisfies_rarefcond
from .riemann import check_on_grid, solve_backward_riemann
from .system import SpeedBounds, SystemSpec, speed_bounds
from .tracking import BoundaryControl, SimState, Trajectory, advance, run_forward

__all__ = [
    "horizon",
    "BackwardResult",
    "ForwardPlan",
    "SynthesisPlan",
    "backward_phase",
    "forward_phase",
    "synthesize",
    "profiles_match",
]

DEFAULT_NU = 6


def horizon(bounds: SpeedBounds, a, b):
    """``T = 4 (b - a) / lambda_min``."""
    return 4 * (b - a) / bounds.lambda_min


def _horizon(spec: SystemSpec, bounds: SpeedBounds, a, b):
    return 4 * (spec.num(b) - spec.num(a)) / spec.num(bounds.lambda_min)


def profiles_match(p: Profile, q: Profile, tol: float = 1e-9) -> bool:
    """Same grid values and breakpoints equal within ``tol``."""
    if p.a != q.a or p.b != q.b or p.breakpoints.size != q.breakpoints.size:
        return False
    if not np.array_equal(p.values, q.values):
        return False
    return bool(np.all(np.abs(p.breakpoints - q.breakpoints) <= tol))


@dataclass(frozen=True)
class BackwardResult:
    """Output of :func:`backward_phase`; controls live on ``[start, tau]``."""

    omega: tuple
    start: object
    control_a: BoundaryControl
    control_b: BoundaryControl
    trajectory: Trajectory


def _check_grid_target(spec, target, grid, rho_p):
    for w in target.values:
        check_on_grid(spec, tuple(w), grid, what="target value")
    if not satisfies_rarefcond(target, grid):
        raise NotBackwardSolvableError("target has an upward jump of more than one quantum")
    if rho_p is not None:
        rep = check_k_rho(target, rho_p, spec.p, mode="grid")
        if not rep.member:
            raise PreconditionError(
                f"target fails the grid attainability test: needs rho={rep.required_rho:.6g} > {rho_p:.6g} "
                f"(witness {rep.witness})"
            )


def backward_phase(
    spec: SystemSpec,
    target: Profile,
    tau,
    grid: GridLevel,
    rho_prime: float | None = None,
    bounds: SpeedBounds | None = None,
    max_events: int = 10**6,
) -> BackwardResult:
    """Trace the target's fronts backward from ``tau`` until the strip is constant.

    Fronts leaving through ``x = a`` or ``x = b`` in reversed time become
    forward-time control jumps.  Passing ``rho_prime`` also enforces the grid
    attainability test.

    Raises
    ------
    NotBackwardSolvableError
        If an upward jump exceeds one quantum.
    PreconditionError
        If the attainability test fails or fronts survive to ``3T/4``.
    """
    _check_grid_target(spec, target, grid, rho_prime)
    bounds = speed_bounds(spec) if bounds is None else bounds
    a, b, tau = spec.num(target.a), spec.num(target.b), spec.num(tau)
    start = 3 * _horizon(spec, bounds, target.a, target.b) / 4
    if not tau > start:
        raise HorizonTooShortError("tau must exceed 3T/4 for the backward construction")
    fronts = []
    for x, wl, wr in zip(target.breakpoints, target.values[:-1], target.values[1:]):
        fronts.extend(solve_backward_riemann(spec, tuple(wl), tuple(wr), grid, x0=spec.num(float(x)), t0=tau))
    state = SimState(
        spec=spec,
        grid=grid,
        a=a,
        b=b,
        time=tau,
        fronts=[],
        left_state=tuple(map(float, target.left_value)),
        right_state=tuple(map(float, target.right_value)),
        direction=-1,
        resolver=solve_backward_riemann,
        shock_counts=[0] * spec.n,
    )
    state.fronts = [replace(f, uid=state.new_uid()) for f in fronts]
    intervals = []
    advance(state, start, max_events, (), intervals.append)
    if state.fronts:
        raise PreconditionError(f"{len(state.fronts)} fronts still inside the strip at t=3T/4")
    omega = state.left_state
    left_steps, right_steps = [], []
    for t, side, removed in reversed(state.exits):
        if side == "left":
            left_steps.append((t, removed[0].w_left))
        else:
            right_steps.append((t, removed[-1].w_right))
    control_a = BoundaryControl.from_steps([(start, omega)] + left_steps)
    control_b = BoundaryControl.from_steps([(start, omega)] + right_steps)
    traj = Trajectory(
        spec=spec,
        grid=grid,
        a=target.a,
        b=target.b,
        t_start=tau,
        t_end=start,
        times=(),
        profiles=(),
        events=tuple(state.event_log),
        intervals=tuple(intervals),
        shock_counts=tuple(state.shock_counts),
        exits=tuple(state.exits),
        final_left_state=state.left_state,
        final_fronts=(),
    )
    return BackwardResult(omega, start, control_a, control_b, traj)


@dataclass(frozen=True)
class ForwardPlan:
    """Controls on ``[0, 3T/4]`` driving the initial data to the constant ``omega``."""

    omega: tuple
    omega_prime: tuple
    omega_tilde: tuple
    control_a: BoundaryControl
    control_b: BoundaryControl
    T: object


def forward_phase(
    spec: SystemSpec,
    initial: Profile,
    omega,
    grid: GridLevel,
    bounds: SpeedBounds | None = None,
    max_events: int = 10**6,
) -> ForwardPlan:
    """Three-stage preparation.

    Stage 1 holds the boundary traces of ``initial`` until ``T/4``, when the
    strip is constant ``omega'``; at ``T/4`` the right control switches to
    ``omega~ = (omega_1..p, omega'_{p+1..n})`` and at ``T/2`` the left one to
    ``omega``.  The stage-1 endpoint is found by simulation.
    """
    bounds = speed_bounds(spec) if bounds is None else bounds
    T = _horizon(spec, bounds, initial.a, initial.b)
    omega = tuple(float(v) for v in omega)
    check_on_grid(spec, omega, grid, what="omega")
    ua, ub = tuple(map(float, initial.left_value)), tuple(map(float, initial.right_value))
    hold = (BoundaryControl.constant(ua, spec.num(0)), BoundaryControl.constant(ub, spec.num(0)))
    stage1 = run_forward(spec, initial, hold, grid, T / 4, max_events=max_events)
    if stage1.final_fronts:
        raise PreconditionError(f"{len(stage1.final_fronts)} fronts remain at T/4; speeds below lambda_min?")
    omega_prime = tuple(stage1.final_left_state)
    p = spec.p
    omega_tilde = omega[:p] + omega_prime[p:]
    control_a = BoundaryControl.from_steps([(spec.num(0), ua), (T / 2, omega)])
    control_b = BoundaryControl.from_steps([(spec.num(0), ub), (T / 4, omega_tilde), (3 * T / 4, omega)])
    return ForwardPlan(omega, omega_prime, omega_tilde, control_a, control_b, T)


def _splice(head: BoundaryControl, tail: BoundaryControl) -> BoundaryControl:
    steps = [(t, v) for t, v in zip(head.jump_times, head.values) if t < tail.jump_times[0]]
    steps += list(zip(tail.jump_times, tail.values))
    return BoundaryControl.from_steps(steps)


@dataclass(frozen=True)
class SynthesisPlan:
    """Boundary controls steering ``initial`` to ``target_quantized`` at ``tau``."""

    T: object
    tau: object
    nu: int
    omega: tuple
    omega_prime: tuple
    omega_tilde: tuple
    controls_a: BoundaryControl
    controls_b: BoundaryControl
    initial_quantized: Profile
    target_quantized: Profile
    target: Profile
    constants: DecayConstants
    rho_prime: float
    quantization_l1: float
    replay: Trajectory | None = field(default=None, repr=False)
    replay_matches: bool | None = None
    replay_l1: float | None = None
    stages_constant: bool | None = None

    @property
    def controls(self) -> tuple:
        return (self.controls_a, self.controls_b)

    def to_dict(self) -> dict:
        d = {
            "T": float(self.T),
            "tau": float(self.tau),
            "omega": list(self.omega),
            "omega_prime": list(self.omega_prime),
            "omega_tilde": list(self.omega_tilde),
            "controls": {"left": self.controls_a.to_dict(), "right": self.controls_b.to_dict()},
            "settings": {"nu": self.nu, "rho_prime": self.rho_prime, "constants": self.constants.to_dict()},
            "quantization_l1": self.quantization_l1,
        }
        if self.replay_matches is not None:
            d["replay"] = {
                "matches": self.replay_matches,
                "l1_gap": self.replay_l1,
                "stages_constant": self.stages_constant,
            }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _verdict(spec, target, tau, constants):
    rep = check_k_rho(target, rho_for_time(float(tau), constants.C, target.a, target.b), spec.p, mode="partition")
    return "indeterminate" if rep.member else "violates-outer-bound"


def synthesize(
    spec: SystemSpec,
    initial: Profile,
    target: Profile,
    tau,
    grid: GridLevel | None = None,
    constants: DecayConstants | None = None,
    verify: bool = True,
    max_events: int = 10**6,
) -> SynthesisPlan:
    """Build boundary controls driving ``initial`` to (the quantized) ``target`` at ``tau``.

    Targets in ``K^rho'`` are quantized first.  A target that is already a
    grid profile with unit upward steps and passes the grid test with
    ``rho'`` is used as is.

    Raises
    ------
    HorizonTooShortError
        If ``tau <= T``.
    NotAttainableError
        If the target is outside both sets; ``verdict`` tells whether it also
        violates the outer decay bound at ``tau``.
    """
    grid = GridLevel(DEFAULT_NU) if grid is None else grid
    bounds = speed_bounds(spec)
    T = _horizon(spec, bounds, target.a, target.b)
    tau = spec.num(tau)
    if not tau > T:
        raise HorizonTooShortError(f"tau={float(tau):g} does not exceed the horizon T={float(T):g}")
    if initial.a != target.a or initial.b != target.b:
        raise PreconditionError("initial and target profiles live on different intervals")
    constants = default_constants(spec) if constants is None else constants
    rho_p = constants.rho_prime
    p = spec.p
    lo, hi = spec.gamma_lo, spec.gamma_hi

    rep = check_k_rho(target, rho_p, p, mode="continuum")
    if rep.member:
        tq = quantize(target, grid, lo, hi)
    elif (
        all(on_grid(tuple(w), grid, lo, hi) for w in target.values)
        and satisfies_rarefcond(target, grid)
        and check_k_rho(target, rho_p, p, mode="grid").member
    ):
        tq = target
    else:
        raise NotAttainableError(
            f"target is not in K^rho' (rho'={rho_p:.6g}); worst pair {rep.witness}",
            witness=rep.witness,
            verdict=_verdict(spec, target, tau, constants),
        )
    iq = initial
    if not all(on_grid(tuple(w), grid) for w in initial.values):
        iq = quantize(initial, grid, lo, hi)

    back = backward_phase(spec, tq, tau, grid, rho_prime=None, bounds=bounds, max_events=max_events)
    fwd = forward_phase(spec, iq, back.omega, grid, bounds=bounds, max_events=max_events)
    ca = _splice(fwd.control_a, back.control_a)
    cb = _splice(fwd.control_b, back.control_b)
    plan = SynthesisPlan(
        T=T,
        tau=tau,
        nu=grid.nu,
        omega=back.omega,
        omega_prime=fwd.omega_prime,
        omega_tilde=fwd.omega_tilde,
        controls_a=ca,
        controls_b=cb,
        initial_quantized=iq,
        target_quantized=tq,
        target=target,
        constants=constants,
        rho_prime=rho_p,
        quantization_l1=l1_distance(tq, target, spec.from_w),
    )
    if verify:
        plan = verify_plan(spec, plan, max_events=max_events)
    return plan


def verify_plan(spec: SystemSpec, plan: SynthesisPlan, max_events: int = 10**6) -> SynthesisPlan:
    """Replay the plan forward and record whether it reproduces the quantized target."""
    T = plan.T
    stages = [T / 4, T / 2, 3 * T / 4]
    grid = GridLevel(plan.nu)
    traj = run_forward(
        spec, plan.initial_quantized, plan.controls, grid, plan.tau, snapshot_times=stages, max_events=max_events
    )
    final = traj.final_profile
    constant = all(prof.is_constant() for prof in traj.profiles) and len(traj.profiles) == 3
    if constant:
        constant = tuple(traj.profiles[-1].left_value) == tuple(plan.omega)
    return replace(
        plan,
        replay=traj,
        replay_matches=profiles_match(final, plan.target_quantized),
        replay_l1=l1_distance(final, plan.target, spec.from_w),
        stages_constant=constant,
    )

