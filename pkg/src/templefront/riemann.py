"""Quantized Riemann solvers producing lists of traveling fronts."""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import GridMismatchError, NotBackwardSolvableError
from .profile import GridLevel
from .system import SystemSpec, rh_speed

__all__ = [
    "SHOCK",
    "RAREFACTION",
    "Front",
    "check_on_grid",
    "solve_riemann",
    "solve_boundary_riemann",
    "solve_backward_riemann",
]

SHOCK = "shock"
RAREFACTION = "rarefaction"


@dataclass(frozen=True)
class Front:
    """A discontinuity of one family moving with constant speed.

    ``position`` is the location at time ``t0``; ``at(t)`` extrapolates.
    ``uid`` identifies a front across interactions that preserve its jump.
    """

    family: int
    w_left: tuple
    w_right: tuple
    position: object
    speed: object
    kind: str
    t0: object = 0
    uid: int | None = None

    def at(self, t):
        return self.position + self.speed * (t - self.t0)

    @property
    def jump(self) -> float:
        return self.w_right[self.family - 1] - self.w_left[self.family - 1]


def check_on_grid(spec: SystemSpec, w, grid: GridLevel, components=None, what="state"):
    comps = range(spec.n) if components is None else components
    for k in comps:
        v = w[k]
        if not grid.contains(v) or not spec.gamma_lo[k] <= v <= spec.gamma_hi[k]:
            raise GridMismatchError(f"{what} {tuple(float(x) for x in w)} is not in Gamma^nu (nu={grid.nu})")


def _grid_tuple(w, grid):
    # canonical float representation of grid values
    h = grid.spacing
    return tuple(float(round(grid.index(v))) * h for v in w)


def _elementary(spec, i, zl, zr, x0, t0, h):
    kind = SHOCK if zr[i - 1] < zl[i - 1] else RAREFACTION
    if kind == RAREFACTION and zr[i - 1] - zl[i - 1] != h:
        raise AssertionError("rarefaction front must carry exactly one quantum")
    return Front(i, zl, zr, x0, rh_speed(spec, i, zl, zr), kind, t0)


def solve_riemann(spec: SystemSpec, w_left, w_right, grid: GridLevel, x0=0, t0=0) -> list:
    """Forward quantized Riemann solver.

    Intermediate states change the invariants one family at a time, lowest
    family first; a decreasing invariant gives one shock, an increase of
    ``k`` quanta gives ``k`` rarefaction fronts.  Fronts are returned ordered
    by family, then by fan index (which is also left-to-right order for
    ``t > t0``).
    """
    check_on_grid(spec, w_left, grid, what="left state")
    check_on_grid(spec, w_right, grid, what="right state")
    x0, t0 = spec.num(x0), spec.num(t0)
    h = grid.spacing
    wl, wr = _grid_tuple(w_left, grid), _grid_tuple(w_right, grid)
    fronts = []
    z = list(wl)
    for i in range(1, spec.n + 1):
        k = i - 1
        if wr[k] < z[k]:
            nz = z.copy()
            nz[k] = wr[k]
            fronts.append(_elementary(spec, i, tuple(z), tuple(nz), x0, t0, h))
            z = nz
        elif wr[k] > z[k]:
            base = round(grid.index(z[k]))
            steps = round(grid.index(wr[k])) - base
            for ell in range(1, steps + 1):
                nz = z.copy()
                nz[k] = (base + ell) * h
                fronts.append(_elementary(spec, i, tuple(z), tuple(nz), x0, t0, h))
                z = nz
    return fronts


def solve_boundary_riemann(spec: SystemSpec, side: str, boundary_value, trace, grid: GridLevel, t=0, position=None):
    """Riemann problem at a boundary, restricted to the interior.

    Returns ``(fronts, effective_state)``.  At the left boundary only families
    ``p+1..n`` enter and the effective state takes those invariants from the
    boundary value and the others from the trace; the right boundary is
    symmetric.  Only the invariants of the boundary value that can influence
    the interior are required to be on the grid.
    """
    p, n = spec.p, spec.n
    if side == "left":
        check_on_grid(spec, trace, grid, what="trace")
        check_on_grid(spec, boundary_value, grid, components=range(p, n), what="boundary value")
        eff = tuple(trace[:p]) + tuple(boundary_value[p:])
        eff = _grid_tuple(eff, grid)
        fronts = solve_riemann(spec, eff, trace, grid, x0=position if position is not None else 0, t0=t)
    elif side == "right":
        check_on_grid(spec, trace, grid, what="trace")
        check_on_grid(spec, boundary_value, grid, components=range(0, p), what="boundary value")
        eff = tuple(boundary_value[:p]) + tuple(trace[p:])
        eff = _grid_tuple(eff, grid)
        fronts = solve_riemann(spec, trace, eff, grid, x0=position if position is not None else 0, t0=t)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return fronts, eff


def solve_backward_riemann(spec: SystemSpec, w_left, w_right, grid: GridLevel, x0=0, t0=0) -> list:
    """Fronts that, moving forward, meet at ``(t0, x0)`` and leave the jump ``(w_left, w_right)``.

    Requires every increasing invariant to rise by exactly one quantum.
    Intermediate states switch the highest family first, so the returned
    list runs from family ``n`` down to family ``1``, which is left-to-right
    order for ``t < t0``.
    """
    check_on_grid(spec, w_left, grid, what="left state")
    check_on_grid(spec, w_right, grid, what="right state")
    x0, t0 = spec.num(x0), spec.num(t0)
    h = grid.spacing
    wl, wr = _grid_tuple(w_left, grid), _grid_tuple(w_right, grid)
    for k in range(spec.n):
        if wr[k] > wl[k] and wr[k] - wl[k] != h:
            raise NotBackwardSolvableError(
                f"invariant {k + 1} rises by {(wr[k] - wl[k]) / h:g} quanta; backward solution needs exactly one"
            )
    fronts = []
    z = list(wl)
    for i in range(spec.n, 0, -1):
        k = i - 1
        if wr[k] != z[k]:
            nz = z.copy()
            nz[k] = wr[k]
            fronts.append(_elementary(spec, i, tuple(z), tuple(nz), x0, t0, h))
            z = nz
    return fronts
