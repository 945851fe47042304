"""Piecewise constant profiles in Riemann coordinates.

A profile on ``[a, b]`` is stored as strictly increasing interior
breakpoints ``x_1 < ... < x_m`` and ``m + 1`` cell values; cell ``k`` is the
half-open interval ``[x_k, x_{k+1})`` (right-continuous representative).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import DomainMismatchError, OutOfDomainError

__all__ = [
    "Profile",
    "GridLevel",
    "partition",
    "quantize",
    "l1_distance",
    "total_variation",
    "satisfies_rarefcond",
    "on_grid",
    "read_profile_csv",
    "write_profile_csv",
]


@dataclass(frozen=True)
class GridLevel:
    """Dyadic quantization level: invariants live on ``2**-nu * Z``."""

    nu: int

    def __post_init__(self):
        if int(self.nu) != self.nu or self.nu < 1:
            raise ValueError(f"grid level must be an integer >= 1, got {self.nu}")

    @property
    def spacing(self) -> float:
        return math.ldexp(1.0, -self.nu)

    def index(self, v) -> float:
        """``v / spacing`` (exact for floats and fractions)."""
        return v * (1 << self.nu)

    def contains(self, v) -> bool:
        k = self.index(v)
        return k == int(k)


class Profile:
    """Immutable piecewise constant map ``[a, b] -> R^n``.

    Use :meth:`from_cells` to build a profile from arbitrary data; it merges
    adjacent cells that agree in every invariant.
    """

    __slots__ = ("a", "b", "breakpoints", "values")

    def __init__(self, a, b, breakpoints, values):
        a, b = float(a), float(b)
        x = np.array(breakpoints, dtype=float).reshape(-1)
        v = np.array(values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        if not a < b:
            raise ValueError(f"need a < b, got [{a}, {b}]")
        if v.shape[0] != x.size + 1:
            raise ValueError(f"{x.size} breakpoints need {x.size + 1} cell values, got {v.shape[0]}")
        if x.size and (x[0] <= a or x[-1] >= b or np.any(np.diff(x) <= 0)):
            raise ValueError("breakpoints must be strictly increasing inside (a, b)")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        x.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", v)

    def __setattr__(self, key, value):
        raise AttributeError("Profile is immutable")

    @classmethod
    def from_cells(cls, a, b, breakpoints, values) -> "Profile":
        x = np.asarray(breakpoints, dtype=float).reshape(-1)
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        keep = [0]
        for k in range(1, v.shape[0]):
            if np.any(v[k] != v[keep[-1]]):
                keep.append(k)
        return cls(a, b, x[[k - 1 for k in keep[1:]]], v[keep])

    @classmethod
    def constant(cls, a, b, w) -> "Profile":
        return cls(a, b, [], [list(w)])

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate(([self.a], self.breakpoints, [self.b]))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def left_value(self) -> np.ndarray:
        """Trace ``phi(a+)``."""
        return self.values[0]

    @property
    def right_value(self) -> np.ndarray:
        """Trace ``phi(b-)``."""
        return self.values[-1]

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right")
        return self.values[idx]

    def component(self, i: int) -> np.ndarray:
        """Cell values of invariant ``i`` (1-based)."""
        return self.values[:, i - 1]

    def is_constant(self) -> bool:
        return self.breakpoints.size == 0

    def normalized(self) -> "Profile":
        return Profile.from_cells(self.a, self.b, self.breakpoints, self.values)

    def __eq__(self, other):
        if not isinstance(other, Profile):
            return NotImplemented
        return (
            self.a == other.a
            and self.b == other.b
            and np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.a, self.b, self.breakpoints.tobytes(), self.values.tobytes()))

    def __repr__(self):
        return f"Profile([{self.a}, {self.b}], {self.breakpoints.size} breakpoints, n={self.n})"


def partition(profile: Profile, i: int) -> np.ndarray:
    """``{a} U {breakpoints where invariant i jumps} U {b}``."""
    w = profile.component(i)
    jumps = profile.breakpoints[w[1:] != w[:-1]]
    return np.concatenate(([profile.a], jumps, [profile.b]))


def on_grid(w, grid: GridLevel, lo=None, hi=None) -> bool:
    if not all(grid.contains(v) for v in w):
        return False
    if lo is not None and any(v < l for v, l in zip(w, lo)):
        return False
    if hi is not None and any(v > h for v, h in zip(w, hi)):
        return False
    return True


def _round_to_grid(v: np.ndarray, h: float) -> np.ndarray:
    # floor branch on ties: threshold at half spacing, inclusive
    fl = np.floor(v / h) * h
    return np.where(v <= fl + h / 2, fl, fl + h)


def _quantize_component(v: np.ndarray, h: float) -> np.ndarray:
    """Grid values of one invariant, cell by cell.

    Downward jumps are the discontinuities of the data; a run of cells
    between them is read as samples of a continuous non-decreasing stretch.
    The first cell of a run is rounded to the nearest grid value and later
    cells keep that level until the data reach the next grid value.
    """
    r = np.empty_like(v)
    fl = np.floor(v / h) * h
    near = _round_to_grid(v, h)
    for k in range(v.size):
        if k == 0 or v[k] < v[k - 1]:
            r[k] = near[k]
        else:
            r[k] = max(r[k - 1], fl[k])
    return r


def _component_staircase(edges, vals, errs, h):
    """Split upward steps of several quanta into unit steps inside the left cell.

    ``edges`` are cell boundaries (a, ..., b), ``vals`` the grid values and
    ``errs`` the pointwise quantization errors of the cells.  A step of ``m``
    quanta at ``e`` becomes unit steps at ``e - j * delta``.  Half of the L1
    budget ``(b - a) h`` left over by the rounding is shared between the
    staircases; a staircase of width ``(m - 1) delta`` costs at most
    ``delta h m (m - 1) / 2``.  Wider steps keep the result in the grid class.
    """
    widths = np.diff(edges)
    steps = np.rint(np.diff(vals) / h).astype(int)
    multi = np.count_nonzero(steps > 1)
    spare = (edges[-1] - edges[0]) * h - float(np.dot(errs, widths))
    share = 0.5 * spare / multi if multi else 0.0
    out_x, out_v = [], [vals[0]]
    for k in range(1, len(vals)):
        if vals[k] == vals[k - 1]:
            continue
        step = int(steps[k - 1])
        e = edges[k]
        if step > 1:
            delta = min(widths[k - 1] / step, share / (h * step * (step - 1) / 2))
            for j in range(step - 1, 0, -1):
                out_x.append(e - j * delta)
                out_v.append(vals[k - 1] + (step - j) * h)
        out_x.append(e)
        out_v.append(vals[k])
    return out_x, out_v


def quantize(profile: Profile, grid: GridLevel, lo: Sequence | None = None, hi: Sequence | None = None) -> Profile:
    """Project a profile onto the dyadic grid.

    Downward jumps are kept as discontinuities; between them the data are
    treated as a continuous rise.  The first cell after a discontinuity is
    rounded to the nearest grid value (floor on ties) and the level then moves
    up one grid value each time the data reach it.
    Values are clamped to the grid points of ``[lo, hi]``.  A single step of
    several quanta is split into a staircase of unit quanta placed inside the
    cell to its left, so all upward jumps between adjacent partition points
    are exactly one quantum.

    Raises :class:`OutOfDomainError` if a value lies outside ``[lo, hi]``.
    """
    h = grid.spacing
    v = profile.values
    if lo is not None and np.any(v < np.asarray(lo, dtype=float)):
        raise OutOfDomainError("profile value below the invariant box")
    if hi is not None and np.any(v > np.asarray(hi, dtype=float)):
        raise OutOfDomainError("profile value above the invariant box")
    r = np.column_stack([_quantize_component(v[:, i], h) for i in range(profile.n)])
    if lo is not None:
        r = np.maximum(r, np.ceil(np.asarray(lo, dtype=float) / h) * h)
    if hi is not None:
        r = np.minimum(r, np.floor(np.asarray(hi, dtype=float) / h) * h)

    edges = profile.edges
    err = np.abs(r - v)
    comps = [_component_staircase(edges, r[:, i], err[:, i], h) for i in range(profile.n)]

    xs = sorted(set(x for cx, _ in comps for x in cx))
    xs = np.array(xs, dtype=float)
    mids = np.concatenate(([profile.a], xs))
    values = np.empty((xs.size + 1, profile.n))
    for i, (cx, cv) in enumerate(comps):
        idx = np.searchsorted(np.asarray(cx, dtype=float), mids, side="right")
        values[:, i] = np.asarray(cv)[idx]
    return Profile.from_cells(profile.a, profile.b, xs, values)


def satisfies_rarefcond(profile: Profile, grid: GridLevel) -> bool:
    """Every upward jump of every invariant is exactly one quantum."""
    d = np.diff(profile.values, axis=0)
    up = d[d > 0]
    return bool(np.all(up == grid.spacing))


def l1_distance(p1: Profile, p2: Profile, from_w=None) -> float:
    """Exact L1 distance (sum over components), optionally in ``u`` coordinates."""
    if p1.a != p2.a or p1.b != p2.b:
        raise DomainMismatchError(f"[{p1.a}, {p1.b}] vs [{p2.a}, {p2.b}]")
    xs = np.union1d(p1.breakpoints, p2.breakpoints)
    edges = np.concatenate(([p1.a], xs, [p1.b]))
    left = edges[:-1]
    v1, v2 = p1(left), p2(left)
    if from_w is not None:
        v1 = np.array([np.asarray(from_w(tuple(w)), dtype=float) for w in v1])
        v2 = np.array([np.asarray(from_w(tuple(w)), dtype=float) for w in v2])
    return float(np.sum(np.abs(v1 - v2).sum(axis=1) * np.diff(edges)))


def total_variation(profile: Profile, i: int) -> float:
    return float(np.abs(np.diff(profile.component(i))).sum())


def write_profile_csv(profile: Profile, path=None) -> str:
    """Write ``x_left, w_1..w_n`` rows plus a closing row holding ``b``.

    Returns the CSV text; writes it to ``path`` when given.
    """
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["x_left"] + [f"w_{i}" for i in range(1, profile.n + 1)])
    for x, w in zip(profile.edges[:-1], profile.values):
        wr.writerow([repr(float(x))] + [repr(float(v)) for v in w])
    wr.writerow([repr(float(profile.b))] + [""] * profile.n)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_profile_csv(path, interval=None, lo=None, hi=None) -> Profile:
    """Load a profile written by :func:`write_profile_csv`.

    A final row with empty values marks ``b``; without it ``interval`` must be
    supplied.  Values outside ``[lo, hi]`` raise :class:`OutOfDomainError`.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or not rows[0][0].strip().lower().startswith("x"):
        raise ValueError(f"{path}: missing header row")
    body = rows[1:]
    b = None
    if body and all(c.strip() == "" for c in body[-1][1:]):
        b = float(body[-1][0])
        body = body[:-1]
    if not body:
        raise ValueError(f"{path}: no data rows")
    xs = [float(r[0]) for r in body]
    vals = [[float(c) for c in r[1:]] for r in body]
    a = xs[0]
    if interval is not None:
        ia, ib = map(float, interval)
        if a != ia or (b is not None and b != ib):
            raise DomainMismatchError(f"{path}: profile on [{a}, {b}] but interval is [{ia}, {ib}]")
        b = ib
    if b is None:
        raise ValueError(f"{path}: right endpoint unknown; add a closing row or pass interval")
    v = np.array(vals)
    if lo is not None and np.any(v < np.asarray(lo)):
        raise OutOfDomainError(f"{path}: value below the invariant box")
    if hi is not None and np.any(v > np.asarray(hi)):
        raise OutOfDomainError(f"{path}: value above the invariant box")
    return Profile.from_cells(a, b, xs[1:], v)
