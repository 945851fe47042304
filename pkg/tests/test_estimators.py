import numpy as np
import pytest
from sklearn.base import clone

from templefront import Profile
from templefront.estimators import (
    AttainabilityClassifier,
    BoundaryControlSynthesizer,
    DecayCalibrator,
    FrontTracker,
    GridQuantizer,
    NotFittedError,
    check_controls,
    check_profile,
    check_system,
)


@pytest.mark.parametrize(
    "est",
    [
        GridQuantizer(nu=3),
        FrontTracker(nu=2, tau=0.5),
        BoundaryControlSynthesizer(nu=3),
        DecayCalibrator(trials=3),
        AttainabilityClassifier(rho=1.0, mode="grid"),
    ],
)
def test_params_round_trip_through_clone(est):
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params
    assert twin is not est


def test_unfitted_estimators_raise():
    with pytest.raises(NotFittedError):
        FrontTracker().predict(0.1)
    with pytest.raises(NotFittedError):
        GridQuantizer().transform(Profile.constant(0, 1, (0, 0)))


def test_check_helpers(spec):
    assert check_system("diag2").name == "diag2"
    assert check_system(spec) is spec
    with pytest.raises(TypeError):
        check_system(3)
    p = check_profile([0.25, 0.5], spec, interval=(0, 1))
    assert p == Profile.constant(0, 1, (0.25, 0.5))
    with pytest.raises(ValueError):
        check_profile([0, 2.0], spec, interval=(0, 1))
    left, right = check_controls(((0, 0), {"jump_times": [0], "values": [[0.25, 0]]}))
    assert left.values == ((0, 0),) and right.values == ((0.25, 0),)


def test_quantizer_transform():
    q = GridQuantizer(nu=2).fit()
    out = q.transform(Profile(0, 1, [0.5], [[0, 0.3], [0, 0.1]]))
    assert out.component(2).tolist() == [0.25, 0.0]
    assert len(q.transform([out, out])) == 2


def test_tracker_predict():
    ft = FrontTracker(nu=2, tau=0.5).fit(Profile(0, 1, [0.2], [[0, 0], [0, 0.25]]))
    assert ft.predict(0.5).breakpoints[0] == pytest.approx(0.715625)
    assert len(ft.predict([0.1, 0.2])) == 2


def test_synthesizer_scores_replay(constants):
    syn = BoundaryControlSynthesizer(nu=4, tau=6, constants=constants)
    syn.fit(Profile.constant(0, 1, (0, 0)), Profile(0, 1, [0.5], [[0.3, 0.6], [0.1, -0.2]]))
    assert syn.plan_.replay_matches
    assert -syn.score() <= 2 * 2**-4
    assert len(syn.predict()) == 2


def test_synthesizer_without_verification_cannot_score(constants):
    syn = BoundaryControlSynthesizer(nu=2, tau=6, constants=constants, verify=False)
    syn.fit(Profile.constant(0, 1, (0, 0)), Profile.constant(0, 1, (0, 0)))
    with pytest.raises(NotFittedError):
        syn.score()


def test_classifier_labels(constants):
    clf = AttainabilityClassifier(constants=constants).fit()
    assert clf.rho_ == constants.rho_prime
    labels = clf.predict([Profile.constant(0, 1, (0, 0)), Profile(0, 1, [0.5], [[0, 0], [0, 0.25]])])
    assert labels.tolist() == [1, 0]
    assert isinstance(labels, np.ndarray)


def test_calibrator_exposes_constants():
    cal = DecayCalibrator(grid_range=(2, 2), trials=4, seed=3).fit()
    assert cal.C_ > 0 and cal.C1_ > 0
    assert cal.rho_prime_ == pytest.approx(0.75 / (6 * cal.C1_))
