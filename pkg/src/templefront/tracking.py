"""Event-driven front tracking on a strip ``[a, b]`` with boundary controls.

The engine keeps a position-sorted list of :class:`~templefront.riemann.Front`
objects, each moving with constant speed between events.  Events are
front interactions, fronts reaching ``x = a`` or ``x = b`` and jumps of the
boundary controls.  Simultaneous events at one location are merged;
simultaneous events at different locations are processed left to right.

The same loop runs backward in time (``direction=-1``) with a different
interaction resolver; that mode is used by the control synthesizer.
"""

from __future__ import annotations

import bisect
import io
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .exceptions import RunawayError
from .profile import GridLevel, Profile, on_grid
from .riemann import SHOCK, Front, check_on_grid, solve_boundary_riemann, solve_riemann
from .system import SystemSpec

__all__ = [
    "INTERACTION",
    "BOUNDARY_HIT",
    "CONTROL_LEFT",
    "CONTROL_RIGHT",
    "BoundaryControl",
    "Event",
    "SimState",
    "Interval",
    "Trajectory",
    "init_forward",
    "next_event",
    "handle_event",
    "advance",
    "run_forward",
    "profile_from_fronts",
]

INTERACTION = "interaction"
BOUNDARY_HIT = "boundary-hit"
CONTROL_LEFT = "control-jump-left"
CONTROL_RIGHT = "control-jump-right"

FLOAT_TOL = 1e-12


def _time_to_json(t):
    return float(t)


def _exact_str(t):
    if isinstance(t, Fraction):
        return f"{t.numerator}/{t.denominator}"
    return repr(float(t))


def _parse_time(v, s=None):
    if s is not None:
        return Fraction(s)
    return v


@dataclass(frozen=True)
class BoundaryControl:
    """Right-continuous step function of time with values in Riemann coordinates.

    ``jump_times[0]`` is the start of the control's domain; the value on
    ``[jump_times[k], jump_times[k+1])`` is ``values[k]``.
    """

    jump_times: tuple
    values: tuple

    def __post_init__(self):
        times = tuple(self.jump_times)
        vals = tuple(tuple(float(x) for x in v) for v in self.values)
        if not times or len(times) != len(vals):
            raise ValueError("a control needs matching non-empty jump_times and values")
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            raise ValueError("control jump times must be strictly increasing")
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, w, t0=0) -> "BoundaryControl":
        return cls((t0,), (tuple(w),))

    @classmethod
    def from_steps(cls, steps: Sequence) -> "BoundaryControl":
        """Build from ``(time, value)`` pairs, dropping jumps that change nothing."""
        times, vals = [], []
        for t, w in steps:
            w = tuple(float(x) for x in w)
            if vals and w == vals[-1]:
                continue
            if times and t <= times[-1]:
                raise ValueError("control steps must have increasing times")
            times.append(t)
            vals.append(w)
        return cls(tuple(times), tuple(vals))

    def value_at(self, t):
        k = bisect.bisect_right(self.jump_times, t) - 1
        return self.values[max(k, 0)]

    def snapped(self, grid: GridLevel, lo=None, hi=None) -> "BoundaryControl":
        h = grid.spacing
        out = []
        for v in self.values:
            arr = np.asarray(v, dtype=float)
            fl = np.floor(arr / h) * h
            r = np.where(arr <= fl + h / 2, fl, fl + h)
            if lo is not None:
                r = np.maximum(r, np.ceil(np.asarray(lo) / h) * h)
            if hi is not None:
                r = np.minimum(r, np.floor(np.asarray(hi) / h) * h)
            out.append(tuple(float(x) for x in r))
        return BoundaryControl(self.jump_times, tuple(out))

    def on_grid(self, grid: GridLevel, components=None) -> bool:
        for v in self.values:
            sel = v if components is None else [v[k] for k in components]
            if not on_grid(sel, grid):
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "jump_times": [_time_to_json(t) for t in self.jump_times],
            "jump_times_exact": [_exact_str(t) for t in self.jump_times],
            "values": [list(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, d: dict, exact: bool = True) -> "BoundaryControl":
        times = d["jump_times"]
        if exact and "jump_times_exact" in d:
            times = [Fraction(s) for s in d["jump_times_exact"]]
        elif exact:
            times = [Fraction(t) for t in times]
        return cls(tuple(times), tuple(tuple(v) for v in d["values"]))


@dataclass(frozen=True)
class Event:
    """One event; the ``*_before``/``*_after`` fields are filled once it is handled."""

    time: object
    kind: str
    position: object
    participants: tuple = ()
    families: tuple = ()
    side: str | None = None
    counts_before: tuple | None = None
    counts_after: tuple | None = None
    tv_before: tuple | None = None
    tv_after: tuple | None = None

    @property
    def pre_count(self):
        return None if self.counts_before is None else sum(self.counts_before)

    @property
    def post_count(self):
        return None if self.counts_after is None else sum(self.counts_after)

    def to_dict(self) -> dict:
        return {
            "time": float(self.time),
            "kind": self.kind,
            "position": float(self.position),
            "families": list(self.families),
            "pre_count": self.pre_count,
            "post_count": self.post_count,
            "counts_before": None if self.counts_before is None else list(self.counts_before),
            "counts_after": None if self.counts_after is None else list(self.counts_after),
        }


@dataclass
class SimState:
    """Mutable state of one simulation (single owner)."""

    spec: SystemSpec
    grid: GridLevel
    a: object
    b: object
    time: object
    fronts: list
    left_state: tuple
    right_state: tuple
    controls: tuple | None = None
    direction: int = 1
    resolver: Callable = solve_riemann
    event_log: list = field(default_factory=list)
    next_jump: list = field(default_factory=lambda: [1, 1])
    next_uid: int = 0
    shock_counts: list = field(default_factory=list)
    exits: list = field(default_factory=list)
    pair_cache: dict = field(default_factory=dict, repr=False)

    @property
    def tol(self):
        return 0 if self.spec.exact else FLOAT_TOL

    def new_uid(self) -> int:
        self.next_uid += 1
        return self.next_uid

    def counts_by_family(self) -> tuple:
        c = [0] * self.spec.n
        for f in self.fronts:
            c[f.family - 1] += 1
        return tuple(c)

    def tv_by_family(self) -> tuple:
        tv = [0.0] * self.spec.n
        for f in self.fronts:
            tv[f.family - 1] += abs(f.jump)
        return tuple(tv)

    def check_chaining(self) -> bool:
        prev = self.left_state
        for f in self.fronts:
            if tuple(f.w_left) != tuple(prev):
                return False
            prev = f.w_right
        return tuple(prev) == tuple(self.right_state)

    def positions(self, t=None):
        t = self.time if t is None else t
        return [f.at(t) for f in self.fronts]

    def profile(self, t=None) -> Profile:
        t = self.time if t is None else t
        return profile_from_fronts(self.a, self.b, self.left_state, self.fronts, t)


def profile_from_fronts(a, b, left_state, fronts, t) -> Profile:
    """Profile at time ``t`` from the ambient left state and a sorted front list."""
    fa, fb = float(a), float(b)
    xs, vals = [], [tuple(left_state)]
    for f in fronts:
        x = float(f.at(t))
        if x <= fa:
            vals[-1] = f.w_right
            continue
        if x >= fb:
            break
        if xs and x <= xs[-1]:
            vals[-1] = f.w_right
            continue
        xs.append(x)
        vals.append(f.w_right)
    return Profile.from_cells(fa, fb, xs, vals)


def _tag(state: SimState, fronts):
    return [replace(f, uid=state.new_uid()) for f in fronts]


def _count_shocks(state: SimState, fronts):
    for f in fronts:
        if f.kind == SHOCK:
            state.shock_counts[f.family - 1] += 1


def init_forward(spec: SystemSpec, initial: Profile, controls, grid: GridLevel, t_start=0) -> SimState:
    """Solve the initial interior and boundary Riemann problems.

    ``controls`` is a pair ``(left, right)`` of :class:`BoundaryControl`;
    ``None`` holds each boundary at the adjacent trace of ``initial``.
    """
    a, b, t0 = spec.num(initial.a), spec.num(initial.b), spec.num(t_start)
    for w in initial.values:
        check_on_grid(spec, tuple(w), grid, what="initial value")
    if controls is None:
        controls = (
            BoundaryControl.constant(tuple(initial.left_value), t0),
            BoundaryControl.constant(tuple(initial.right_value), t0),
        )
    left_ctrl, right_ctrl = controls
    state = SimState(
        spec=spec,
        grid=grid,
        a=a,
        b=b,
        time=t0,
        fronts=[],
        left_state=tuple(map(float, initial.left_value)),
        right_state=tuple(map(float, initial.right_value)),
        controls=(left_ctrl, right_ctrl),
        shock_counts=[0] * spec.n,
    )
    state.next_jump = [
        bisect.bisect_right(left_ctrl.jump_times, t0),
        bisect.bisect_right(right_ctrl.jump_times, t0),
    ]
    fronts = []
    new, eff_a = solve_boundary_riemann(spec, "left", left_ctrl.value_at(t0), state.left_state, grid, t0, a)
    fronts.extend(new)
    for x, wl, wr in zip(initial.breakpoints, initial.values[:-1], initial.values[1:]):
        fronts.extend(solve_riemann(spec, tuple(wl), tuple(wr), grid, x0=spec.num(float(x)), t0=t0))
    new, eff_b = solve_boundary_riemann(spec, "right", right_ctrl.value_at(t0), state.right_state, grid, t0, b)
    fronts.extend(new)
    _count_shocks(state, fronts)
    state.fronts = _tag(state, fronts)
    state.left_state, state.right_state = eff_a, eff_b
    return state


def _earlier(d, t1, t2):
    return t1 < t2 if d > 0 else t1 > t2


def _pair_time(f, g):
    """Absolute time at which ``f`` and ``g`` coincide, or ``None`` if parallel."""
    ds = f.speed - g.speed
    if ds == 0:
        return None
    return (g.position - g.speed * g.t0 - f.position + f.speed * f.t0) / ds


def _pair_times(state: SimState):
    """Collision times of adjacent converging pairs, cached per front pair."""
    d, fr, cache = state.direction, state.fronts, state.pair_cache
    if len(cache) > 4 * len(fr) + 64:
        cache.clear()
    out = []
    for k in range(len(fr) - 1):
        f, g = fr[k], fr[k + 1]
        e = cache.get((id(f), id(g)))
        if e is None or e[0] is not f or e[1] is not g:
            closing = d * (f.speed - g.speed)
            tc = _pair_time(f, g) if closing > 0 else None
            e = (f, g, tc, None if tc is None else float(tc))
            cache[(id(f), id(g))] = e
        out.append((e[2], e[3]))
    return out


def next_event(state: SimState, horizon) -> Event | None:
    """Earliest pending event no later than ``horizon`` (in the run direction)."""
    d, now, fr, tol = state.direction, state.time, state.fronts, state.tol
    a, b = state.a, state.b
    best, cause = None, None

    def offer(t, why):
        nonlocal best, cause
        if best is None or _earlier(d, t, best):
            best, cause = t, why

    pts = _pair_times(state)
    # float shadows pick the candidates; ties are settled exactly
    cand = [k for k, (tc, _) in enumerate(pts) if tc is not None]
    if cand:
        key = min(d * pts[k][1] for k in cand) * d
        for k in cand:
            if abs(pts[k][1] - key) <= 1e-9 * max(1.0, abs(key)):
                tc = pts[k][0]
                if _earlier(d, tc, now):
                    tc = now
                offer(tc, ("pair", k))
    if fr:
        v = d * fr[0].speed
        if v < 0:
            offer(now + d * max((fr[0].at(now) - a) / -v, 0), ("exit-left",))
        v = d * fr[-1].speed
        if v > 0:
            offer(now + d * max((b - fr[-1].at(now)) / v, 0), ("exit-right",))
    jumps = [None, None]
    if state.controls is not None:
        for s in (0, 1):
            ctrl, idx = state.controls[s], state.next_jump[s]
            if idx < len(ctrl.jump_times):
                jumps[s] = state.spec.num(ctrl.jump_times[idx])
                offer(jumps[s], ("control", s))
    if best is None or _earlier(d, horizon, best):
        return None

    t = best
    ttol = 0 if state.spec.exact else 1e-12 * max(1.0, abs(float(t)))

    def at_t(tj):
        return tj is not None and abs(tj - t) <= ttol

    X = {}

    def x(k):
        if k not in X:
            X[k] = fr[k].at(t)
        return X[k]

    left = []
    for k, f in enumerate(fr):
        if x(k) <= a + tol and d * f.speed < 0:
            left.append(k)
        else:
            break
    if cause == ("exit-left",) and not left:
        left = [0]
    if left or at_t(jumps[0]):
        kind = CONTROL_LEFT if at_t(jumps[0]) else BOUNDARY_HIT
        return Event(t, kind, a, tuple(fr[k].uid for k in left), tuple(fr[k].family for k in left), "left")

    right = []
    for k in range(len(fr) - 1, -1, -1):
        if x(k) >= b - tol and d * fr[k].speed > 0:
            right.append(k)
        else:
            break
    right.reverse()
    if cause == ("exit-right",) and not right:
        right = [len(fr) - 1]
    stop = right[0] if right else len(fr)

    # interior clusters: coincident runs containing a converging pair, leftmost first
    ft = float(t)
    for k in cand:
        if k + 1 >= stop:
            break
        if abs(pts[k][1] - ft) > 1e-9 * max(1.0, abs(ft)) or abs(x(k + 1) - x(k)) > tol:
            continue
        i0 = k
        while i0 > 0 and abs(x(i0 - 1) - x(k)) <= tol:
            i0 -= 1
        i1 = k + 1
        while i1 + 1 < stop and abs(x(i1 + 1) - x(k)) <= tol:
            i1 += 1
        group = range(i0, i1 + 1)
        return Event(t, INTERACTION, x(i0), tuple(fr[m].uid for m in group), tuple(fr[m].family for m in group))
    if cause is not None and cause[0] == "pair" and not right:
        # float fallback: predicted pair not within tolerance after advancing
        k = cause[1]
        return Event(t, INTERACTION, x(k), (fr[k].uid, fr[k + 1].uid), (fr[k].family, fr[k + 1].family))

    if right or at_t(jumps[1]):
        kind = CONTROL_RIGHT if at_t(jumps[1]) else BOUNDARY_HIT
        return Event(t, kind, b, tuple(fr[k].uid for k in right), tuple(fr[k].family for k in right), "right")
    raise AssertionError("event time found but no event located")  # pragma: no cover


def _inherit(state: SimState, incoming, outgoing):
    pool = list(incoming)
    out = []
    for f in outgoing:
        k = f.family - 1
        match = None
        for g in pool:
            if g.family == f.family and g.kind == f.kind and g.w_left[k] == f.w_left[k] and g.w_right[k] == f.w_right[k]:
                match = g
                break
        if match is not None:
            pool.remove(match)
            out.append(replace(f, uid=match.uid))
        else:
            out.append(replace(f, uid=state.new_uid()))
    return out


def handle_event(state: SimState, ev: Event) -> Event:
    """Apply ``ev`` to ``state`` and return the logged copy of the event."""
    spec, grid = state.spec, state.grid
    counts0, tv0 = state.counts_by_family(), state.tv_by_family()
    state.time = ev.time
    fr = state.fronts
    index = {f.uid: k for k, f in enumerate(fr)}
    idx = sorted(index[u] for u in ev.participants)

    if ev.kind == INTERACTION:
        i0, i1 = idx[0], idx[-1]
        group = fr[i0 : i1 + 1]
        new = state.resolver(spec, group[0].w_left, group[-1].w_right, grid, x0=ev.position, t0=ev.time)
        fr[i0 : i1 + 1] = _inherit(state, group, new)
    elif ev.side == "left":
        if idx:
            removed = fr[: idx[-1] + 1]
            state.exits.append((ev.time, "left", tuple(removed)))
            state.left_state = removed[-1].w_right
            del fr[: idx[-1] + 1]
        if ev.kind == CONTROL_LEFT:
            ctrl = state.controls[0]
            value = ctrl.values[state.next_jump[0]]
            state.next_jump[0] += 1
            new, eff = solve_boundary_riemann(spec, "left", value, state.left_state, grid, ev.time, state.a)
            _count_shocks(state, new)
            fr[0:0] = _tag(state, new)
            state.left_state = eff
    else:
        if idx:
            removed = fr[idx[0] :]
            state.exits.append((ev.time, "right", tuple(removed)))
            state.right_state = removed[0].w_left
            del fr[idx[0] :]
        if ev.kind == CONTROL_RIGHT:
            ctrl = state.controls[1]
            value = ctrl.values[state.next_jump[1]]
            state.next_jump[1] += 1
            new, eff = solve_boundary_riemann(spec, "right", value, state.right_state, grid, ev.time, state.b)
            _count_shocks(state, new)
            fr.extend(_tag(state, new))
            state.right_state = eff
    if not fr:
        # both ambient states describe the same constant field
        if ev.side == "right":
            state.left_state = state.right_state
        else:
            state.right_state = state.left_state
    logged = replace(
        ev,
        counts_before=counts0,
        counts_after=state.counts_by_family(),
        tv_before=tv0,
        tv_after=state.tv_by_family(),
    )
    state.event_log.append(logged)
    return logged


@dataclass(frozen=True)
class Interval:
    """Stretch of time with a fixed front population."""

    t_start: object
    t_end: object
    left_state: tuple
    fronts: tuple


def advance(state: SimState, horizon, max_events: int = 10**6, snapshot_times=(), on_interval=None):
    """Run events until ``horizon``; returns snapshots ``[(t, Profile), ...]``.

    Snapshots at an event time are taken after all events at that time.
    """
    d = state.direction
    snaps = sorted((state.spec.num(t) for t in snapshot_times), reverse=d < 0)
    out = []
    si = 0
    count = 0
    while True:
        ev = next_event(state, horizon)
        t_next = horizon if ev is None else ev.time
        while si < len(snaps) and _earlier(d, snaps[si], t_next):
            out.append((snaps[si], state.profile(snaps[si])))
            si += 1
        if on_interval is not None:
            on_interval(Interval(state.time, t_next, state.left_state, tuple(state.fronts)))
        if ev is None:
            state.time = horizon
            break
        count += 1
        if count > max_events:
            raise RunawayError(f"more than {max_events} events before t={float(horizon):g}")
        handle_event(state, ev)
    while si < len(snaps):
        out.append((snaps[si], state.profile(snaps[si])))
        si += 1
    return out


@dataclass(frozen=True)
class Trajectory:
    """Snapshots, event log and front history of one run."""

    spec: SystemSpec
    grid: GridLevel
    a: float
    b: float
    t_start: object
    t_end: object
    times: tuple
    profiles: tuple
    events: tuple
    intervals: tuple
    shock_counts: tuple
    exits: tuple
    final_left_state: tuple
    final_fronts: tuple
    controls: tuple | None = None

    @property
    def n_nu(self) -> int:
        """Largest number of shocks of one family issued by initial and boundary data."""
        return max(self.shock_counts) if self.shock_counts else 0

    @property
    def final_profile(self) -> Profile:
        return profile_from_fronts(self.a, self.b, self.final_left_state, self.final_fronts, self.t_end)

    def snapshot(self, t) -> Profile:
        for s, p in zip(self.times, self.profiles):
            if s == t or float(s) == float(t):
                return p
        raise KeyError(f"no snapshot at t={t}")

    def profile_at(self, t) -> Profile:
        """Profile at any time covered by the run (post-event state at event times)."""
        lo, hi = sorted((self.t_start, self.t_end))
        if not lo <= t <= hi:
            raise ValueError(f"t={float(t):g} outside [{float(lo):g}, {float(hi):g}]")
        chosen = None
        for iv in self.intervals:
            a_, b_ = sorted((iv.t_start, iv.t_end))
            if a_ <= t <= b_:
                chosen = iv
        return profile_from_fronts(self.a, self.b, chosen.left_state, chosen.fronts, t)

    def front_segments(self):
        """``[(uid, family, kind, t0, x0, t1, x1), ...]`` merged across intervals."""
        open_, out = {}, []
        for iv in self.intervals:
            alive = {f.uid: f for f in iv.fronts}
            for uid in list(open_):
                if uid not in alive:
                    out.append(open_.pop(uid))
            for uid, f in alive.items():
                seg = open_.get(uid)
                if seg is not None and seg[4] == f:
                    open_[uid] = (seg[0], seg[1], iv.t_end, f.at(iv.t_end), f)
                else:
                    if seg is not None:
                        out.append(seg)
                    open_[uid] = (iv.t_start, f.at(iv.t_start), iv.t_end, f.at(iv.t_end), f)
        out.extend(open_.values())
        return [(s[4].uid, s[4].family, s[4].kind, s[0], s[1], s[2], s[3]) for s in out]

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.events)

    def polylines_csv(self) -> str:
        buf = io.StringIO()
        buf.write("uid,family,kind,t0,x0,t1,x1\n")
        for uid, fam, kind, t0, x0, t1, x1 in sorted(self.front_segments(), key=lambda s: (s[0], float(s[3]))):
            buf.write(f"{uid},{fam},{kind},{float(t0)!r},{float(x0)!r},{float(t1)!r},{float(x1)!r}\n")
        return buf.getvalue()


def run_forward(
    spec: SystemSpec,
    initial: Profile,
    controls,
    grid: GridLevel,
    tau,
    snapshot_times: Sequence = (),
    max_events: int = 10**6,
    t_start=0,
) -> Trajectory:
    """Front-tracking flow map from ``t_start`` to ``tau``.

    Raises :class:`~templefront.exceptions.RunawayError` when more than
    ``max_events`` events occur.
    """
    if not tau > t_start:
        raise ValueError("tau must exceed the start time")
    state = init_forward(spec, initial, controls, grid, t_start)
    tau = spec.num(tau)
    times = [t for t in snapshot_times if t_start <= t <= tau]
    intervals = []
    snaps = advance(state, tau, max_events, times, intervals.append)
    return Trajectory(
        spec=spec,
        grid=grid,
        a=initial.a,
        b=initial.b,
        t_start=spec.num(t_start),
        t_end=tau,
        times=tuple(t for t, _ in snaps),
        profiles=tuple(p for _, p in snaps),
        events=tuple(state.event_log),
        intervals=tuple(intervals),
        shock_counts=tuple(state.shock_counts),
        exits=tuple(state.exits),
        final_left_state=state.left_state,
        final_fronts=tuple(state.fronts),
        controls=state.controls,
    )
