"""Estimator-style wrappers around the functional API.

Each class follows the scikit-learn conventions (constructor stores
parameters only, ``fit`` returns ``self``, fitted attributes end in ``_``)
so the tools compose with ``get_params``/``set_params`` and ``clone``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from .control import DEFAULT_NU, synthesize
from .decay import DecayConstants, calibrate_constants, check_k_rho, default_constants
from .profile import GridLevel, Profile, quantize
from .system import SystemSpec, diag2, system_from_config
from .tracking import BoundaryControl, run_forward

__all__ = [
    "check_system",
    "check_profile",
    "check_controls",
    "check_grid",
    "GridQuantizer",
    "FrontTracker",
    "BoundaryControlSynthesizer",
    "DecayCalibrator",
    "AttainabilityClassifier",
    "NotFittedError",
]


def check_system(system) -> SystemSpec:
    """Accept a :class:`SystemSpec`, a builtin name or a config mapping."""
    if isinstance(system, SystemSpec):
        return system
    if system is None:
        return diag2()
    if isinstance(system, str):
        return system_from_config({"builtin": system})
    if isinstance(system, dict):
        return system_from_config(system)
    raise TypeError(f"cannot interpret {type(system).__name__} as a system")


def check_grid(nu) -> GridLevel:
    return nu if isinstance(nu, GridLevel) else GridLevel(int(nu))


def check_profile(profile, spec: SystemSpec | None = None, interval=None) -> Profile:
    """Coerce ``profile`` to a :class:`Profile` and check its shape and range.

    Accepts a ``Profile``, a mapping with ``a``, ``b``, ``breakpoints`` and
    ``values``, or a constant vector together with ``interval``.
    """
    if isinstance(profile, Profile):
        prof = profile
    elif isinstance(profile, dict):
        prof = Profile.from_cells(profile["a"], profile["b"], profile.get("breakpoints", []), profile["values"])
    else:
        arr = np.asarray(profile, dtype=float)
        if arr.ndim != 1 or interval is None:
            raise TypeError("expected a Profile, a mapping, or a constant vector plus interval")
        prof = Profile.constant(interval[0], interval[1], arr)
    if spec is not None:
        if prof.n != spec.n:
            raise ValueError(f"profile has {prof.n} invariants, system has {spec.n}")
        if not all(spec.in_gamma(w) for w in prof.values):
            raise ValueError("profile leaves the invariant box")
    return prof


def check_controls(controls):
    """Coerce a ``(left, right)`` pair of controls, mappings or constant vectors."""
    if controls is None:
        return None
    left, right = controls
    out = []
    for c in (left, right):
        if isinstance(c, BoundaryControl):
            out.append(c)
        elif isinstance(c, dict):
            out.append(BoundaryControl.from_dict(c))
        else:
            out.append(BoundaryControl.constant(tuple(c)))
    return tuple(out)


class GridQuantizer(TransformerMixin, BaseEstimator):
    """Project profiles onto the dyadic grid of level ``nu``.

    Parameters
    ----------
    nu : int
        Grid level; spacing ``2**-nu``.
    system : SystemSpec, str or dict, optional
        Supplies the invariant box used for clamping.
    """

    def __init__(self, nu: int = DEFAULT_NU, system=None):
        self.nu = nu
        self.system = system

    def fit(self, X=None, y=None):
        self.grid_ = check_grid(self.nu)
        self.spec_ = check_system(self.system)
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        lo, hi = self.spec_.gamma_lo, self.spec_.gamma_hi
        if isinstance(X, (Profile, dict)):
            return quantize(check_profile(X, self.spec_), self.grid_, lo, hi)
        return [quantize(check_profile(x, self.spec_), self.grid_, lo, hi) for x in X]


class FrontTracker(BaseEstimator):
    """Forward front tracking as an estimator.

    ``fit(initial, controls)`` runs the simulation to ``tau``;
    ``predict(times)`` returns the profiles at the requested times.
    """

    def __init__(self, system=None, nu: int = 4, tau: float = 1.0, max_events: int = 10**6):
        self.system = system
        self.nu = nu
        self.tau = tau
        self.max_events = max_events

    def fit(self, initial, controls=None, snapshot_times: Sequence = ()):
        self.spec_ = check_system(self.system)
        self.grid_ = check_grid(self.nu)
        initial = check_profile(initial, self.spec_)
        self.trajectory_ = run_forward(
            self.spec_,
            initial,
            check_controls(controls),
            self.grid_,
            self.spec_.num(self.tau),
            snapshot_times=[self.spec_.num(t) for t in snapshot_times],
            max_events=self.max_events,
        )
        self.n_events_ = len(self.trajectory_.events)
        return self

    def predict(self, times):
        check_is_fitted(self, "trajectory_")
        if np.isscalar(times):
            return self.trajectory_.profile_at(self.spec_.num(times))
        return [self.trajectory_.profile_at(self.spec_.num(t)) for t in times]


class BoundaryControlSynthesizer(BaseEstimator):
    """Synthesize boundary controls reaching a target at ``tau``.

    After ``fit(initial, target)``, ``plan_`` holds the
    :class:`~templefront.control.SynthesisPlan`; ``predict()`` returns the
    control pair and ``score()`` the negated L1 gap of the replay.
    """

    def __init__(self, system=None, nu: int = DEFAULT_NU, tau: float = 6.0, constants=None, verify: bool = True):
        self.system = system
        self.nu = nu
        self.tau = tau
        self.constants = constants
        self.verify = verify

    def fit(self, initial, target):
        self.spec_ = check_system(self.system)
        initial = check_profile(initial, self.spec_)
        target = check_profile(target, self.spec_)
        self.plan_ = synthesize(
            self.spec_,
            initial,
            target,
            self.spec_.num(self.tau),
            check_grid(self.nu),
            constants=self.constants,
            verify=self.verify,
        )
        return self

    def predict(self, X=None):
        check_is_fitted(self, "plan_")
        return self.plan_.controls

    def score(self, X=None, y=None) -> float:
        check_is_fitted(self, "plan_")
        if self.plan_.replay_l1 is None:
            raise NotFittedError("plan was built with verify=False; no replay to score")
        return -self.plan_.replay_l1


class DecayCalibrator(BaseEstimator):
    """Fit the decay constants ``C``, ``C1`` by randomized simulation."""

    def __init__(self, system=None, grid_range=(2, 4), trials: int = 100, seed: int = 42, tau: float = 2.0):
        self.system = system
        self.grid_range = grid_range
        self.trials = trials
        self.seed = seed
        self.tau = tau

    def fit(self, X=None, y=None):
        spec = check_system(self.system)
        self.constants_ = calibrate_constants(spec, self.grid_range, self.trials, self.seed, self.tau)
        self.C_ = self.constants_.C
        self.C1_ = self.constants_.C1
        self.rho_prime_ = self.constants_.rho_prime
        return self


class AttainabilityClassifier(BaseEstimator):
    """Label profiles as members (1) or not (0) of ``K^rho``.

    With ``rho=None`` the calibrated ``rho'`` of the system is used.
    """

    def __init__(self, system=None, rho: float | None = None, mode: str = "continuum", constants=None):
        self.system = system
        self.rho = rho
        self.mode = mode
        self.constants = constants

    def fit(self, X=None, y=None):
        self.spec_ = check_system(self.system)
        if self.rho is not None:
            self.rho_ = float(self.rho)
        else:
            consts = self.constants if isinstance(self.constants, DecayConstants) else default_constants(self.spec_)
            self.rho_ = consts.rho_prime
        return self

    def predict(self, X):
        check_is_fitted(self, "rho_")
        profiles = [X] if isinstance(X, Profile) else list(X)
        return np.array(
            [int(check_k_rho(check_profile(p, self.spec_), self.rho_, self.spec_.p, self.mode).member) for p in profiles]
        )
