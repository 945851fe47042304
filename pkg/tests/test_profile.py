import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from templefront import (
    DomainMismatchError,
    GridLevel,
    OutOfDomainError,
    Profile,
    l1_distance,
    partition,
    quantize,
    read_profile_csv,
    satisfies_rarefcond,
    total_variation,
    write_profile_csv,
)
from templefront.profile import on_grid

LO, HI = (-1.0, -1.0), (1.0, 1.0)


def test_grid_level_is_dyadic():
    g = GridLevel(6)
    assert g.spacing == 1 / 64
    assert g.contains(0.015625) and not g.contains(0.01)
    with pytest.raises(ValueError):
        GridLevel(0)


def test_profile_validates_breakpoints():
    with pytest.raises(ValueError):
        Profile(0, 1, [0.5, 0.4], [[0, 0], [1, 1], [0, 0]])
    with pytest.raises(ValueError):
        Profile(0, 1, [1.0], [[0, 0], [1, 1]])
    with pytest.raises(ValueError):
        Profile(0, 1, [0.5], [[0, 0]])


def test_profile_is_immutable():
    p = Profile.constant(0, 1, (0, 0))
    with pytest.raises(AttributeError):
        p.a = 2
    with pytest.raises(ValueError):
        p.values[0, 0] = 1.0


def test_from_cells_merges_equal_neighbours():
    p = Profile.from_cells(0, 1, [0.25, 0.5], [[0, 0], [0, 0], [0, 1]])
    assert list(p.breakpoints) == [0.5]
    assert p.values.shape == (2, 2)


def test_right_continuous_evaluation():
    p = Profile(0, 1, [0.5], [[0, 0], [0, 1]])
    assert tuple(p(0.5)) == (0, 1)
    assert tuple(p(0.4999)) == (0, 0)


def test_partition_examples():
    const = Profile.constant(0, 1, (0.25, 0.5))
    assert list(partition(const, 1)) == [0, 1]
    p = Profile(0, 1, [0.5], [[0, 0.25], [0, 0]])
    assert list(partition(p, 2)) == [0, 0.5, 1]
    assert list(partition(p, 1)) == [0, 1]


def test_quantize_rounding_example():
    p = Profile(0, 1, [0.5], [[0, 0.3], [0, 0.1]])
    q = quantize(p, GridLevel(2), LO, HI)
    assert list(q.breakpoints) == [0.5]
    assert q.component(2).tolist() == [0.25, 0.0]


def test_quantize_ties_go_down():
    p = Profile.constant(0, 1, (0.125, 0.375))
    q = quantize(p, GridLevel(2), LO, HI)
    assert q.values.tolist() == [[0.0, 0.25]]


def test_quantize_ramp_gives_unit_staircase():
    xs = np.linspace(0, 1, 41)[1:-1]
    ramp = Profile.from_cells(0, 1, xs, [[0, 0.5 * k / 40] for k in range(40)])
    g = GridLevel(2)
    q = quantize(ramp, g, LO, HI)
    steps = np.diff(q.component(2))
    assert np.all(steps[steps != 0] == 0.25)
    assert satisfies_rarefcond(q, g)


def test_quantize_splits_large_upward_steps():
    p = Profile(0, 1, [0.5], [[0, 0], [0, 1]])
    g = GridLevel(2)
    q = quantize(p, g, LO, HI)
    assert satisfies_rarefcond(q, g)
    assert q.component(2)[-1] == 1.0
    assert l1_distance(q, p) <= 2 * g.spacing


def test_quantize_rejects_values_outside_box():
    with pytest.raises(OutOfDomainError):
        quantize(Profile.constant(0, 1, (0, 1.5)), GridLevel(2), LO, HI)


def test_l1_examples():
    a = Profile.constant(0, 1, (0, 0))
    b = Profile.constant(0, 1, (0, 0.5))
    assert l1_distance(a, a) == 0
    assert l1_distance(a, b) == 0.5
    c = Profile(0, 1, [0.5], [[0, 0], [0, 0.25]])
    assert l1_distance(a, c) == 0.125
    with pytest.raises(DomainMismatchError):
        l1_distance(a, Profile.constant(0, 2, (0, 0)))


def test_total_variation():
    p = Profile(0, 1, [0.25, 0.5], [[0, 0], [0, 0.5], [1, -0.5]])
    assert total_variation(p, 2) == 1.5
    assert total_variation(p, 1) == 1.0


def test_csv_roundtrip(tmp_path):
    p = Profile(0, 1, [0.125, 0.7], [[0, 0.25], [0.5, -0.75], [1, 1]])
    path = tmp_path / "p.csv"
    write_profile_csv(p, path)
    assert read_profile_csv(path) == p
    assert read_profile_csv(path, interval=(0, 1)) == p
    with pytest.raises(DomainMismatchError):
        read_profile_csv(path, interval=(0, 2))
    with pytest.raises(OutOfDomainError):
        read_profile_csv(path, hi=(0.5, 0.5))


def test_csv_without_closing_row_needs_interval(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x_left,w_1,w_2\n0,0,0\n0.5,0,1\n")
    with pytest.raises(ValueError):
        read_profile_csv(path)
    assert read_profile_csv(path, interval=(0, 1)).breakpoints.tolist() == [0.5]


# property tests

values = st.floats(-1, 1, allow_nan=False)


@st.composite
def profiles(draw, max_cells=6):
    m = draw(st.integers(1, max_cells))
    cuts = sorted(draw(st.sets(st.integers(1, 999), min_size=m - 1, max_size=m - 1)))
    xs = [c / 1000 for c in cuts]
    vals = [[draw(values), draw(values)] for _ in range(m)]
    return Profile.from_cells(0, 1, xs, vals)


@given(profiles(), st.integers(1, 8))
def test_quantize_properties(p, nu):
    g = GridLevel(nu)
    q = quantize(p, g, LO, HI)
    assert all(on_grid(tuple(w), g, LO, HI) for w in q.values)
    assert satisfies_rarefcond(q, g)
    assert l1_distance(q, p) <= (p.b - p.a) * p.n * g.spacing + 1e-12


@given(profiles(), st.integers(1, 8))
def test_quantize_idempotent(p, nu):
    g = GridLevel(nu)
    q = quantize(p, g, LO, HI)
    assert quantize(q, g, LO, HI) == q


@given(profiles(), profiles())
def test_l1_is_a_metric(p, q):
    assert l1_distance(p, q) == pytest.approx(l1_distance(q, p), abs=1e-12)
    assert l1_distance(p, q) >= 0
    r = Profile.constant(0, 1, (0, 0))
    assert l1_distance(p, q) <= l1_distance(p, r) + l1_distance(r, q) + 1e-12
