"""Attainability predicates and decay diagnostics.

The sets ``K^rho`` bound the upward difference quotients of every invariant
by ``rho`` over the distance to the boundary where that family enters:
``x - a`` for the positive-speed families ``p+1..n`` and ``b - y`` for the
negative-speed families ``1..p``.  The grid variant only compares interior
partition points and allows a factor 5.

The Oleinik constant ``C`` and the rarefaction spreading constant ``C1`` are
calibrated by simulation (:func:`calibrate_constants`).
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction

import numpy as np

from .exceptions import CalibrationError
from .profile import GridLevel, Profile, partition
from .riemann import RAREFACTION
from .system import SystemSpec, diagonal_affine, speed_bounds
from .tracking import BoundaryControl, Trajectory, run_forward

__all__ = [
    "DecayConstants",
    "KRhoReport",
    "OleinikReport",
    "SpreadingReport",
    "check_k_rho",
    "oleinik_report",
    "spreading_report",
    "rho_for_time",
    "rho_prime",
    "calibrate_constants",
    "default_constants",
    "random_profile",
    "random_control",
]

log = logging.getLogger(__name__)

GRID_FACTOR = 5
PROBES = 7


@dataclass(frozen=True)
class DecayConstants:
    """Calibrated constants of one system.

    ``rho_prime`` is always ``lambda_min / (6 * C1)``.
    """

    C: float
    C1: float
    lambda_min: float
    details: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not (self.C > 0 and self.C1 > 0 and self.lambda_min > 0):
            raise ValueError("C, C1 and lambda_min must be positive")

    @property
    def rho_prime(self) -> float:
        return self.lambda_min / (6 * self.C1)

    def to_dict(self) -> dict:
        return {"C": self.C, "C1": self.C1, "lambda_min": self.lambda_min, "rho_prime": self.rho_prime}


def rho_for_time(tau_bar, C, a, b) -> float:
    """``C (b - a) ((b - a) + tau_bar) / tau_bar``."""
    if not tau_bar > 0:
        raise ValueError(f"tau_bar must be positive, got {tau_bar}")
    if math.isinf(tau_bar):
        return C * (b - a)
    L = b - a
    return C * L * (L + tau_bar) / tau_bar


def rho_prime(lambda_min, C1) -> float:
    return lambda_min / (6 * C1)


@dataclass(frozen=True)
class KRhoReport:
    """Membership of a profile in ``K^rho`` (or ``K^rho_nu``).

    ``required_rho`` is the smallest ``rho`` for which the profile would
    pass; ``witness`` is ``(family, x, y)`` of the worst pair.
    """

    member: bool
    mode: str
    rho: float
    required_rho: float
    witness: tuple | None
    per_family: dict

    @property
    def worst_ratio(self) -> float:
        return self.required_rho / self.rho

    def to_dict(self) -> dict:
        return {
            "member": self.member,
            "mode": self.mode,
            "rho": self.rho,
            "required_rho": self.required_rho,
            "witness": self.witness,
            "per_family": {str(k): v for k, v in self.per_family.items()},
        }


def _interior_points(profile: Profile, i: int):
    pts = partition(profile, i)[1:-1]
    return pts, profile(pts)[:, i - 1] if pts.size else np.empty(0)


def _pair_matrix(xs, vals):
    """Upper-triangular pair grid: ``(xh, xk, increase)`` for ``h < k``."""
    h, k = np.triu_indices(xs.size, 1)
    return xs[h], xs[k], vals[k] - vals[h]


def check_k_rho(profile: Profile, rho, p: int, mode: str = "continuum") -> KRhoReport:
    """Test membership in ``K^rho``.

    ``mode="continuum"`` applies the definition to the piecewise constant
    profile itself, where any upward jump makes the quotient unbounded;
    ``mode="partition"`` applies the continuum bound only to pairs of interior
    partition points; ``mode="grid"`` is the partition test with factor 5.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if mode not in ("continuum", "partition", "grid"):
        raise ValueError(f"unknown mode {mode!r}")
    a, b = profile.a, profile.b
    factor = GRID_FACTOR if mode == "grid" else 1
    worst, witness, per_family = 0.0, None, {}
    for i in range(1, profile.n + 1):
        fam_worst, fam_wit = 0.0, None
        if mode == "continuum":
            col = profile.component(i)
            up = np.nonzero(np.diff(col) > 0)[0]
            if up.size:
                x = float(profile.breakpoints[up[0]])
                fam_worst, fam_wit = math.inf, (i, x, x)
        else:
            xs, vals = _interior_points(profile, i)
            if xs.size >= 2:
                xh, xk, inc = _pair_matrix(xs, vals)
                q = inc / (xk - xh)
                dist = (xh - a) if i > p else (b - xk)
                need = np.where(inc > 0, q * dist / factor, 0.0)
                m = int(np.argmax(need))
                if need[m] > 0:
                    fam_worst, fam_wit = float(need[m]), (i, float(xh[m]), float(xk[m]))
        per_family[i] = fam_worst
        if fam_worst > worst:
            worst, witness = fam_worst, fam_wit
    member = worst <= rho * (1 + 1e-12)
    return KRhoReport(member, mode, float(rho), worst, witness, per_family)


@dataclass(frozen=True)
class OleinikReport:
    """Worst case of the Oleinik-type decay inequalities over a trajectory.

    ``required_C`` maps each family to the smallest constant that would make
    every checked inequality hold with the given slack.
    """

    C: float
    N_nu: int
    slack: float
    required_C: dict
    witness: dict
    margin: float
    checks: int

    @property
    def passed(self) -> bool:
        return all(v <= self.C * (1 + 1e-9) for v in self.required_C.values())

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "C": self.C,
            "N_nu": self.N_nu,
            "slack": self.slack,
            "required_C": {str(k): v for k, v in self.required_C.items()},
            "witness": {str(k): v for k, v in self.witness.items()},
            "worst_margin": self.margin,
            "checks": self.checks,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str)

    def to_text(self) -> str:
        lines = [f"oleinik: {'PASS' if self.passed else 'FAIL'} (C={self.C:g}, N_nu={self.N_nu}, slack={self.slack:g})"]
        for i in sorted(self.required_C):
            lines.append(f"  family {i}: required C = {self.required_C[i]:.6g} witness={self.witness[i]}")
        lines.append(f"  worst margin: {self.margin:.6g} over {self.checks} inequalities")
        return "\n".join(lines) + "\n"


def _spatial(profile: Profile, t: float, i: int, p: int, slack: float):
    """Required C, witness, count and margin terms for one snapshot and family."""
    a, b = profile.a, profile.b
    xs = profile.breakpoints
    if xs.size < 2:
        return 0.0, None, 0, None
    vals = profile.values[1:, i - 1]
    x, y, inc = _pair_matrix(xs, vals)
    if i > p:
        lg = np.log((y - a) / (x - a))
    else:
        lg = np.log((b - x) / (b - y))
    scale = (y - x) / t + lg
    excess = inc - slack
    need = np.where(excess > 0, excess / scale, 0.0)
    m = int(np.argmax(need))
    wit = ("space", float(t), float(x[m]), float(y[m])) if need[m] > 0 else None
    return float(need[m]), wit, int(x.size), (excess, scale)


def _temporal(times, profiles, i: int, p: int, slack: float, probes):
    best, wit, count, terms = 0.0, None, 0, []
    vals = np.array([[prof(x)[i - 1] for x in probes] for prof in profiles])
    a, b = profiles[0].a, profiles[0].b
    for s1 in range(len(times)):
        for s2 in range(s1 + 1, len(times)):
            t1, t2 = times[s1], times[s2]
            for k, x in enumerate(probes):
                if i > p:
                    inc = vals[s1, k] - vals[s2, k]
                    scale = (t2 - t1) / (x - a) + math.log(t2 / t1)
                else:
                    inc = vals[s2, k] - vals[s1, k]
                    scale = (t2 - t1) / (b - x) + math.log(t2 / t1)
                count += 1
                excess = inc - slack
                terms.append((excess, scale))
                if excess > 0 and excess / scale > best:
                    best, wit = excess / scale, ("time", float(x), float(t1), float(t2))
    return best, wit, count, terms


def oleinik_report(
    trajectory: Trajectory, constants, grid: GridLevel | None = None, N_nu=None, probes=None, slack: bool = True
) -> OleinikReport:
    """Check the spatial and time-section Oleinik inequalities on the snapshots.

    Spatial: for interior breakpoints ``x < y`` (of any family) at time ``t``,
    with right-continuous values,
    ``w_i(y) - w_i(x) <= C ((y - x)/t + log((y - a)/(x - a))) + N_nu 2^-nu``
    for ``i > p``, with ``log((b - x)/(b - y))`` for ``i <= p``.  Time
    sections at the probe stations compare snapshot pairs ``t1 < t2`` with
    ``(t2 - t1)/(x - a) + log(t2/t1)`` (resp. ``b - x``) and one extra quantum
    of slack.  Snapshots at ``t = 0`` are skipped.  ``slack=False`` drops
    both slack terms (the inequalities of the limit solution).
    """
    C = constants.C if hasattr(constants, "C") else float(constants)
    grid = trajectory.grid if grid is None else grid
    N = trajectory.n_nu if N_nu is None else int(N_nu)
    h = grid.spacing if slack else 0.0
    p = trajectory.spec.p
    a, b = trajectory.a, trajectory.b
    if probes is None:
        probes = [a + k * (b - a) / (PROBES + 1) for k in range(1, PROBES + 1)]
    pairs = [(float(t), prof) for t, prof in zip(trajectory.times, trajectory.profiles) if float(t) > 0]
    times = [t for t, _ in pairs]
    profs = [pr for _, pr in pairs]
    required, witness, checks = {}, {}, 0
    margin = math.inf
    for i in range(1, trajectory.spec.n + 1):
        best, wit = 0.0, None
        for t, prof in pairs:
            need, w, cnt, terms = _spatial(prof, t, i, p, N * h)
            checks += cnt
            if terms is not None:
                margin = min(margin, float(np.min(C * terms[1] - terms[0])))
            if need > best:
                best, wit = need, w
        if len(pairs) >= 2:
            need, w, cnt, terms = _temporal(times, profs, i, p, (N + 1) * h, probes)
            checks += cnt
            if terms:
                margin = min(margin, min(C * s - e for e, s in terms))
            if need > best:
                best, wit = need, w
        required[i], witness[i] = best, wit
    return OleinikReport(float(C), N, N * h, required, witness, margin, checks)


@dataclass(frozen=True)
class SpreadingReport:
    """Worst spreading rate of adjacent same-family rarefaction quanta, in units of ``2^-nu``."""

    C1: float | None
    required_C1: float
    witness: tuple | None
    pairs: int

    @property
    def passed(self) -> bool:
        return self.C1 is None or self.required_C1 <= self.C1 * (1 + 1e-9)


def spreading_report(trajectory: Trajectory, C1=None) -> SpreadingReport:
    """Check ``|y(t') - x(t')| <= |y(t) - x(t)| + C1 (t' - t) 2^-nu`` for adjacent quanta.

    Speeds are constant between events, so the inequality is checked on every
    inter-event interval with positive duration.
    """
    h = trajectory.grid.spacing
    best, wit, pairs = 0.0, None, 0
    for iv in trajectory.intervals:
        if iv.t_start == iv.t_end:
            continue
        last = {}
        for f in iv.fronts:
            prev = last.get(f.family)
            if prev is not None and prev.kind == RAREFACTION and f.kind == RAREFACTION:
                pairs += 1
                rate = float(f.speed - prev.speed) / h
                if rate > best:
                    best, wit = rate, (f.family, float(iv.t_start), float(iv.t_end), prev.uid, f.uid)
            last[f.family] = f
    return SpreadingReport(None if C1 is None else float(C1), best, wit, pairs)


def random_profile(spec: SystemSpec, grid: GridLevel, rng: random.Random, a=0.0, b=1.0, max_breaks: int = 4) -> Profile:
    """Random grid-valued profile with up to ``max_breaks`` dyadic breakpoints."""
    h = grid.spacing
    lo = [math.ceil(v / h) for v in spec.gamma_lo]
    hi = [math.floor(v / h) for v in spec.gamma_hi]
    m = rng.randint(0, max_breaks)
    cells = sorted(rng.sample(range(1, 64), m))
    xs = [a + (b - a) * c / 64 for c in cells]
    vals = [[rng.randint(l, u) * h for l, u in zip(lo, hi)] for _ in range(m + 1)]
    return Profile.from_cells(a, b, xs, vals)


def random_control(spec: SystemSpec, grid: GridLevel, rng: random.Random, tau, max_jumps: int = 3, start=0) -> BoundaryControl:
    """Random grid-valued step control on ``[start, tau]`` with dyadic jump times."""
    h = grid.spacing
    lo = [math.ceil(v / h) for v in spec.gamma_lo]
    hi = [math.floor(v / h) for v in spec.gamma_hi]
    k = rng.randint(0, max_jumps)
    ticks = sorted(rng.sample(range(1, 32), k))
    times = [spec.num(start)] + [spec.num(start) + (spec.num(tau) - spec.num(start)) * Fraction(c, 32) for c in ticks]
    vals = [tuple(rng.randint(l, u) * h for l, u in zip(lo, hi)) for _ in times]
    return BoundaryControl(tuple(times), tuple(vals))


def _trial(spec, nu, rng, tau, snapshots, max_events):
    grid = GridLevel(nu)
    initial = random_profile(spec, grid, rng)
    controls = (random_control(spec, grid, rng, tau), random_control(spec, grid, rng, tau))
    snaps = [spec.num(tau) * Fraction(k, snapshots) for k in range(1, snapshots + 1)]
    return run_forward(spec, initial, controls, grid, spec.num(tau), snapshot_times=snaps, max_events=max_events)


def calibrate_constants(
    spec: SystemSpec,
    grid_range=(2, 4),
    trials: int = 100,
    seed: int = 42,
    tau: float = 2.0,
    snapshots: int = 8,
    safety: float = 2.0,
    max_events: int = 10**6,
) -> DecayConstants:
    """Fit ``C`` and ``C1`` from randomized forward runs.

    Each trial draws a grid level from ``grid_range`` (inclusive), a random
    initial profile and random controls, and records the smallest constants
    satisfying the Oleinik and spreading inequalities.  The fitted values are
    the maxima times ``safety``.

    Raises
    ------
    CalibrationError
        If ``trials < 1``, no trial produces positive waves, or the raw
        Oleinik constant at the finest level exceeds twice that at the
        coarsest (a bound growing with refinement).
    """
    if trials < 1:
        raise CalibrationError("calibration needs at least one trial")
    lo_nu, hi_nu = int(grid_range[0]), int(grid_range[-1])
    bounds = speed_bounds(spec)
    rng = random.Random(seed)
    by_nu: dict[int, float] = {}
    c1_raw = 0.0
    for _ in range(trials):
        nu = rng.randint(lo_nu, hi_nu)
        traj = _trial(spec, nu, rng, tau, snapshots, max_events)
        rep = oleinik_report(traj, 1.0)
        by_nu[nu] = max(by_nu.get(nu, 0.0), max(rep.required_C.values()))
        c1_raw = max(c1_raw, spreading_report(traj).required_C1)
    c_raw = max(by_nu.values())
    if c_raw <= 0 or c1_raw <= 0:
        raise CalibrationError("no positive waves observed; cannot fit decay constants")
    levels = sorted(v for v in by_nu if by_nu[v] > 0)
    if len(levels) >= 2 and by_nu[levels[-1]] > 2 * by_nu[levels[0]]:
        raise CalibrationError(
            f"Oleinik constant grows with refinement: {by_nu[levels[0]]:.4g} at nu={levels[0]}, "
            f"{by_nu[levels[-1]]:.4g} at nu={levels[-1]}"
        )
    log.info("calibration raw C=%.6g C1=%.6g per level %s", c_raw, c1_raw, by_nu)
    return DecayConstants(
        C=safety * c_raw,
        C1=safety * c1_raw,
        lambda_min=bounds.lambda_min,
        details={"raw_C": c_raw, "raw_C1": c1_raw, "raw_C_by_nu": dict(sorted(by_nu.items())), "trials": trials, "seed": seed},
    )


def _spec_key(spec: SystemSpec) -> str:
    return json.dumps(spec.config, sort_keys=True) if spec.config else f"id:{id(spec)}"


@lru_cache(maxsize=16)
def _cached(key: str, spec_holder):
    return calibrate_constants(spec_holder.spec)


class _Holder:
    # lru_cache keys on the config string; the holder carries the spec along
    __slots__ = ("spec", "key")

    def __init__(self, spec, key):
        self.spec, self.key = spec, key

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, _Holder) and other.key == self.key


def default_constants(spec: SystemSpec) -> DecayConstants:
    """Constants from the default calibration (seed 42, 100 trials), cached per system."""
    key = _spec_key(spec)
    return _cached(key, _Holder(spec, key))


def doubled_slope_diag2(exact: bool = True) -> SystemSpec:
    """``diag2`` with both eigenvalue slopes doubled (used to check calibration scaling)."""
    return diagonal_affine((-1, 1), (0.5, 0.5), ((-1, 1), (-1, 1)), p=1, exact=exact, name="diag2x2")
