from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from templefront import (
    GridLevel,
    GridMismatchError,
    NotBackwardSolvableError,
    diag2,
    solve_backward_riemann,
    solve_boundary_riemann,
    solve_riemann,
)
from templefront.riemann import RAREFACTION, SHOCK

G2 = GridLevel(2)


def test_mixed_riemann_example(spec):
    fronts = solve_riemann(spec, (0, 0), (-0.5, 0.5), G2, x0=Fraction(3, 10))
    assert [f.family for f in fronts] == [1, 2, 2]
    assert [f.kind for f in fronts] == [SHOCK, RAREFACTION, RAREFACTION]
    assert [f.speed for f in fronts] == [Fraction(-17, 16), Fraction(33, 32), Fraction(35, 32)]
    assert all(f.position == Fraction(3, 10) for f in fronts)
    assert fronts[1].w_right == (-0.5, 0.25)


def test_trivial_riemann_is_empty(spec):
    assert solve_riemann(spec, (0.25, 0.5), (0.25, 0.5), G2) == []


def test_single_shock(spec):
    (f,) = solve_riemann(spec, (0, 0), (0, -0.25), G2)
    assert f.kind == SHOCK and f.speed == Fraction(31, 32)


def test_off_grid_state_rejected(spec):
    with pytest.raises(GridMismatchError):
        solve_riemann(spec, (0, 0.1), (0, 0), G2)
    with pytest.raises(GridMismatchError):
        solve_riemann(spec, (0, 0), (0, 2.0), G2)


def test_left_boundary_keeps_only_entering_family(spec):
    fronts, eff = solve_boundary_riemann(spec, "left", (0.5, 0.25), (0, 0), G2)
    assert eff == (0.0, 0.25)
    # entering state sits above the trace, so the 2-wave is a shock
    assert len(fronts) == 1
    assert fronts[0].family == 2 and fronts[0].kind == SHOCK
    assert fronts[0].speed > 0


def test_left_boundary_rarefaction_case(spec):
    fronts, eff = solve_boundary_riemann(spec, "left", (0.5, 0), (0, 0.25), G2)
    assert eff == (0.0, 0.0)
    assert [(f.family, f.kind) for f in fronts] == [(2, RAREFACTION)]


def test_boundary_value_equal_to_trace(spec):
    fronts, eff = solve_boundary_riemann(spec, "right", (0.25, 0.5), (0.25, 0.5), G2, position=1)
    assert fronts == [] and eff == (0.25, 0.5)


def test_right_boundary_example_with_off_grid_outflow_component(spec):
    fronts, eff = solve_boundary_riemann(spec, "right", (-0.25, 0.9), (0, 0), G2, position=1)
    assert eff == (-0.25, 0.0)
    (f,) = fronts
    assert f.family == 1 and f.kind == SHOCK and f.speed < 0
    assert f.position == 1


def test_boundary_rejects_bad_side(spec):
    with pytest.raises(ValueError):
        solve_boundary_riemann(spec, "top", (0, 0), (0, 0), G2)
    with pytest.raises(GridMismatchError):
        solve_boundary_riemann(spec, "left", (0, 0.9), (0, 0), G2)


def test_backward_example(spec):
    fronts = solve_backward_riemann(spec, (0, 0), (-0.5, 0.25), G2, x0=0.5, t0=6)
    assert [f.family for f in fronts] == [2, 1]
    by_family = {f.family: f for f in fronts}
    assert by_family[1].speed == Fraction(-17, 16)
    assert by_family[2].speed == Fraction(33, 32)
    assert solve_backward_riemann(spec, (0, 0), (0, 0), G2) == []
    with pytest.raises(NotBackwardSolvableError):
        solve_backward_riemann(spec, (0, 0), (0, 0.5), G2)


grid_states = st.tuples(*[st.integers(-4, 4).map(lambda k: k / 4)] * 2)


@given(grid_states, grid_states)
def test_forward_fan_reproduces_jump(wl, wr):
    spec = diag2()
    fronts = solve_riemann(spec, wl, wr, G2)
    state = wl
    for f in fronts:
        assert f.w_left == tuple(float(v) for v in state)
        state = f.w_right
    assert tuple(state) == tuple(float(v) for v in wr) or not fronts and wl == wr
    # left-to-right order for t > t0
    speeds = [f.speed for f in fronts]
    assert speeds == sorted(speeds)
    for f in fronts:
        if f.kind == RAREFACTION:
            assert f.jump == 0.25


@given(grid_states, grid_states)
def test_backward_then_forward_round_trip(wl, wr):
    spec = diag2()
    if any(r - l > 0.25 for l, r in zip(wl, wr)):
        with pytest.raises(NotBackwardSolvableError):
            solve_backward_riemann(spec, wl, wr, G2)
        return
    fronts = solve_backward_riemann(spec, wl, wr, G2, x0=0, t0=1)
    speeds = [f.speed for f in fronts]
    assert speeds == sorted(speeds, reverse=True)
    if fronts:
        assert fronts[0].w_left == tuple(float(v) for v in wl)
        assert fronts[-1].w_right == tuple(float(v) for v in wr)
    # forward solve of the merged jump gives back the same elementary waves
    fwd = solve_riemann(spec, wl, wr, G2, x0=0, t0=1)
    assert sorted((f.family, f.speed) for f in fwd) == sorted((f.family, f.speed) for f in fronts)
