from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from templefront import (
    InvalidDomainError,
    NotElementaryWaveError,
    ZeroJumpError,
    diag2,
    diagonal_affine,
    rh_speed,
    system_from_config,
    validate_system,
)
from templefront.system import SystemSpec, speed_bounds


def test_diag2_passes_with_closed_form_bounds(spec):
    report = validate_system(spec, grid_resolution=9)
    assert report.passed
    assert report.bounds.lambda_min == pytest.approx(0.75, abs=1e-12)
    assert report.bounds.lambda_max == pytest.approx(1.25, abs=1e-12)


def test_sign_changing_speed_fails_splitting():
    bad = diagonal_affine((-1, 0), (0.25, 0.25), ((-1, 1), (-1, 1)), p=1)
    report = validate_system(bad)
    assert not report.passed
    assert not report["splitting"].passed
    assert report["splitting"].witness is not None
    assert report.bounds is None


def test_constant_speed_fails_genuine_nonlinearity():
    bad = diagonal_affine((-1, 1), (0.0, 0.25), ((-1, 1), (-1, 1)), p=1)
    report = validate_system(bad)
    assert not report["genuine_nonlinearity"].passed
    assert "genuine_nonlinearity" in report.failures()


def test_overlapping_speed_ranges_fail_strict_hyperbolicity():
    # lambda_1 reaches 0.5 while lambda_2 drops to 0.25
    bad = diagonal_affine((-0.5, 1), (1.0, 0.75), ((-1, 1), (-1, 1)), p=1)
    assert not validate_system(bad)["strict_hyperbolicity"].passed


def test_degenerate_box_is_rejected():
    bad = diagonal_affine((-1, 1), (0.25, 0.25), ((-1, 1), (0.5, 0.5)), p=1)
    with pytest.raises(InvalidDomainError):
        validate_system(bad)


def test_resolution_must_be_at_least_two(spec):
    with pytest.raises(ValueError):
        validate_system(spec, grid_resolution=1)


def test_speed_bounds_raises_on_failure():
    bad = diagonal_affine((-1, 0), (0.25, 0.25), ((-1, 1), (-1, 1)), p=1)
    with pytest.raises(ValueError):
        speed_bounds(bad)


def test_report_exports(spec):
    report = validate_system(spec)
    text = report.to_text()
    assert text.count("PASS") == 5
    d = report.to_dict()
    assert d["passed"] is True


@pytest.mark.parametrize(
    "i, wl, wr, expected",
    [
        (2, (0, 0), (0, 0.5), Fraction(17, 16)),
        (1, (0, 0), (-0.5, 0), Fraction(-17, 16)),
        (2, (0, 0.25), (0, -0.25), Fraction(1)),
    ],
)
def test_rh_speed_closed_form(spec, i, wl, wr, expected):
    s = rh_speed(spec, i, wl, wr)
    assert s == expected
    assert isinstance(s, Fraction)


def test_rh_speed_errors(spec):
    with pytest.raises(ZeroJumpError):
        rh_speed(spec, 2, (0, 0.25), (0, 0.25))
    with pytest.raises(NotElementaryWaveError):
        rh_speed(spec, 2, (0, 0), (0.25, 0.25))
    with pytest.raises(NotElementaryWaveError):
        rh_speed(spec, 1, (0, 0), (0, 0.25))


grid_values = st.integers(-64, 64).map(lambda k: k / 64)


@given(i=st.sampled_from([1, 2]), a=grid_values, b=grid_values, other=grid_values)
def test_rh_speed_symmetric_and_bounded(i, a, b, other):
    spec = diag2()
    if a == b:
        return
    wl = (a, other) if i == 1 else (other, a)
    wr = (b, other) if i == 1 else (other, b)
    s = rh_speed(spec, i, wl, wr)
    assert s == rh_speed(spec, i, wr, wl)
    assert 0.75 <= abs(s) <= 1.25


@pytest.mark.parametrize("nu", range(1, 11))
def test_rh_speed_consistent_with_eigenvalue(spec, nu):
    h = 2.0**-nu
    for w in (-0.5, 0.0, 0.5):
        s = rh_speed(spec, 2, (0, w), (0, w + h))
        assert abs(float(s) - spec.eigenvalue(2, (0, w))) <= 0.25 * h


def test_float_mode_returns_floats(float_spec):
    assert isinstance(rh_speed(float_spec, 2, (0, 0), (0, 0.5)), float)


def test_system_from_config_builtin_and_affine():
    assert system_from_config({"builtin": "diag2"}).name == "diag2"
    s = system_from_config({"p": 1, "gamma": [[-1, 1], [-1, 1]], "intercepts": [-1, 1], "slopes": [0.5, 0.5]})
    assert validate_system(s).bounds.lambda_min == pytest.approx(0.5)
    with pytest.raises(ValueError):
        system_from_config({"builtin": "nope"})
    with pytest.raises(ValueError):
        system_from_config({"gamma": [[-1, 1], [-1, 1]]})


def test_spec_rejects_bad_shape():
    with pytest.raises(ValueError):
        SystemSpec(2, 2, None, None, None, None, (0, 0), (1, 1))
