"""Temple-class systems written in Riemann coordinates.

A :class:`SystemSpec` bundles the two charts between conserved variables
``u`` and Riemann invariants ``w``, the characteristic speeds as functions of
``w``, the flux as a function of ``u`` and the invariant box
``Gamma = prod [lo_i, hi_i]``.  Families are numbered ``1..n`` as in the
usual mathematical notation; families ``1..p`` travel left, ``p+1..n`` right.

When ``exact=True`` the charts and the flux must accept and return
:class:`fractions.Fraction` entries; every speed, position and event time is
then computed in rational arithmetic.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .exceptions import InvalidDomainError, NotElementaryWaveError, ZeroJumpError

__all__ = [
    "SystemSpec",
    "SpeedBounds",
    "HypothesisCheck",
    "ValidationReport",
    "validate_system",
    "speed_bounds",
    "rh_speed",
    "diagonal_affine",
    "diag2",
    "system_from_config",
]


def _identity(x):
    return tuple(x)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Immutable description of a Temple system in Riemann coordinates."""

    n: int
    p: int
    to_w: Callable
    from_w: Callable
    eigenvalue_fn: Callable[[int, Sequence], float]
    flux_fn: Callable
    gamma_lo: tuple
    gamma_hi: tuple
    exact: bool = False
    name: str = "custom"
    config: dict = field(default_factory=dict, repr=False)
    # memo for rh_speed; states are hashable tuples of grid values
    _rh_cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.n < 2 or not 1 <= self.p < self.n:
            raise ValueError(f"need n >= 2 and 1 <= p < n, got n={self.n}, p={self.p}")
        if len(self.gamma_lo) != self.n or len(self.gamma_hi) != self.n:
            raise ValueError("gamma bounds must have one entry per invariant")
        object.__setattr__(self, "gamma_lo", tuple(float(v) for v in self.gamma_lo))
        object.__setattr__(self, "gamma_hi", tuple(float(v) for v in self.gamma_hi))

    def num(self, x):
        """Convert ``x`` to the scalar type used for positions, times and speeds."""
        if self.exact:
            return x if isinstance(x, Fraction) else Fraction(x)
        return float(x)

    def eigenvalue(self, i: int, w) -> float:
        return self.eigenvalue_fn(i, w)

    def flux(self, u):
        return self.flux_fn(u)

    def in_gamma(self, w) -> bool:
        return all(lo <= wi <= hi for wi, lo, hi in zip(w, self.gamma_lo, self.gamma_hi))


@dataclass(frozen=True)
class SpeedBounds:
    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if not 0 < self.lambda_min <= self.lambda_max:
            raise ValueError("speed bounds must satisfy 0 < lambda_min <= lambda_max")


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    detail: str = ""
    witness: tuple | None = None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple
    bounds: SpeedBounds | None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self):
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "detail": c.detail,
                    "witness": None if c.witness is None else [list(map(float, np.ravel(x))) for x in c.witness],
                }
                for c in self.checks
            ],
            "bounds": None
            if self.bounds is None
            else {"lambda_min": self.bounds.lambda_min, "lambda_max": self.bounds.lambda_max},
        }

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            line = f"{status}  {c.name}"
            if c.detail:
                line += f"  ({c.detail})"
            lines.append(line)
        if self.bounds is not None:
            lines.append(f"lambda_min={self.bounds.lambda_min:.12g} lambda_max={self.bounds.lambda_max:.12g}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _sample_box(spec: SystemSpec, resolution: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(spec.gamma_lo, spec.gamma_hi)]
    return np.array(list(itertools.product(*axes)), dtype=float)


def validate_system(spec: SystemSpec, grid_resolution: int = 9) -> ValidationReport:
    """Check the standing hypotheses on a sampling grid of the invariant box.

    Checks, in order: uniform strict hyperbolicity (every family-i speed
    below every family-j speed for i < j), the boundary splitting
    ``lambda_p < 0 < lambda_{p+1}``, genuine nonlinearity
    ``d lambda_i / d w_i > 0`` (centred finite differences), positive speed
    bounds, and the chart round trip ``from_w(to_w(u)) == u``.
    """
    for i, (lo, hi) in enumerate(zip(spec.gamma_lo, spec.gamma_hi), start=1):
        if not lo < hi:
            raise InvalidDomainError(f"degenerate invariant box: alpha_{i}={lo} >= beta_{i}={hi}")
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")

    n, p = spec.n, spec.p
    W = _sample_box(spec, grid_resolution)
    L = np.array([[float(spec.eigenvalue(i, w)) for i in range(1, n + 1)] for w in W])
    checks = []

    witness = None
    for i in range(n):
        for j in range(i + 1, n):
            k, m = int(np.argmax(L[:, i])), int(np.argmin(L[:, j]))
            if not L[k, i] < L[m, j]:
                witness = (W[k], W[m])
                detail = f"lambda_{i + 1}={L[k, i]:.6g} >= lambda_{j + 1}={L[m, j]:.6g}"
                break
        if witness is not None:
            break
    checks.append(HypothesisCheck("strict_hyperbolicity", witness is None, "" if witness is None else detail, witness))

    bad = np.flatnonzero((L[:, p - 1] >= 0) | (L[:, p] <= 0))
    if bad.size:
        k = int(bad[0])
        detail = f"lambda_{p}={L[k, p - 1]:.6g}, lambda_{p + 1}={L[k, p]:.6g}"
        checks.append(HypothesisCheck("splitting", False, detail, (W[k],)))
    else:
        checks.append(HypothesisCheck("splitting", True))

    gn_fail = None
    for i in range(n):
        eps = 1e-6 * (spec.gamma_hi[i] - spec.gamma_lo[i])
        for w in W:
            wp, wm = w.copy(), w.copy()
            wp[i] = min(w[i] + eps, spec.gamma_hi[i])
            wm[i] = max(w[i] - eps, spec.gamma_lo[i])
            d = (float(spec.eigenvalue(i + 1, wp)) - float(spec.eigenvalue(i + 1, wm))) / (wp[i] - wm[i])
            if not d > 0:
                gn_fail = (i + 1, w, d)
                break
        if gn_fail is not None:
            break
    if gn_fail is None:
        checks.append(HypothesisCheck("genuine_nonlinearity", True))
    else:
        i, w, d = gn_fail
        checks.append(HypothesisCheck("genuine_nonlinearity", False, f"d lambda_{i}/d w_{i} = {d:.6g}", (w,)))

    absL = np.abs(L)
    lam_min, lam_max = float(absL.min()), float(absL.max())
    checks.append(
        HypothesisCheck("speed_bounds", lam_min > 0, f"lambda_min={lam_min:.6g}, lambda_max={lam_max:.6g}")
    )

    chart_fail = None
    for w in W:
        u = np.asarray(spec.from_w(tuple(w)), dtype=float)
        back = np.asarray(spec.from_w(tuple(np.asarray(spec.to_w(tuple(u)), dtype=float))), dtype=float)
        if np.max(np.abs(back - u)) > 1e-12 * max(1.0, float(np.max(np.abs(u)))):
            chart_fail = (u,)
            break
    checks.append(HypothesisCheck("chart_roundtrip", chart_fail is None, "", chart_fail))

    report = ValidationReport(tuple(checks), None)
    if report.passed:
        report = ValidationReport(tuple(checks), SpeedBounds(lam_min, lam_max))
    return report


def speed_bounds(spec: SystemSpec, grid_resolution: int = 9) -> SpeedBounds:
    """Validated speed bounds; raises ``ValueError`` if any hypothesis fails."""
    report = validate_system(spec, grid_resolution)
    if not report.passed:
        raise ValueError(f"system {spec.name!r} fails hypotheses: {', '.join(report.failures())}")
    return report.bounds


def rh_speed(spec: SystemSpec, i: int, w_left, w_right):
    """Rankine-Hugoniot speed of an ``i``-front joining ``w_left`` to ``w_right``.

    Temple i-Hugoniot loci are straight lines in ``u``, so the ratio of flux
    jump to state jump is the same in every component; the component with the
    largest state jump is used.
    """
    key = (i, tuple(w_left), tuple(w_right))
    hit = spec._rh_cache.get(key)
    if hit is not None:
        return hit
    diff = [k for k in range(spec.n) if w_left[k] != w_right[k]]
    if not diff:
        raise ZeroJumpError("left and right states coincide")
    if diff != [i - 1]:
        raise NotElementaryWaveError(
            f"states differ in invariants {[k + 1 for k in diff]}, expected only {i}"
        )
    wl = tuple(spec.num(v) for v in w_left)
    wr = tuple(spec.num(v) for v in w_right)
    ul, ur = spec.from_w(wl), spec.from_w(wr)
    fl, fr = spec.flux(ul), spec.flux(ur)
    k = max(range(spec.n), key=lambda m: abs(ur[m] - ul[m]))
    s = (fr[k] - fl[k]) / (ur[k] - ul[k])
    s = spec.num(s) if spec.exact else float(s)
    if len(spec._rh_cache) < 10**6:
        spec._rh_cache[key] = s
    return s


def diagonal_affine(
    intercepts: Sequence,
    slopes: Sequence,
    gamma: Sequence[Sequence],
    p: int,
    exact: bool = True,
    name: str = "diagonal",
) -> SystemSpec:
    """Decoupled system ``w_i,t + (c_i w_i + d_i w_i^2 / 2)_x = 0``.

    Speeds are ``lambda_i(w) = c_i + d_i w_i`` and both charts are the identity.
    """
    n = len(intercepts)
    if len(slopes) != n or len(gamma) != n:
        raise ValueError("intercepts, slopes and gamma must have the same length")
    conv = Fraction if exact else float
    c = tuple(conv(v) for v in intercepts)
    d = tuple(conv(v) for v in slopes)
    half = conv(1) / 2

    def eigenvalue(i, w):
        return float(c[i - 1] + d[i - 1] * conv(w[i - 1]))

    def flux(u):
        return tuple(c[k] * u[k] + half * d[k] * u[k] * u[k] for k in range(n))

    return SystemSpec(
        n=n,
        p=p,
        to_w=_identity,
        from_w=_identity,
        eigenvalue_fn=eigenvalue,
        flux_fn=flux,
        gamma_lo=tuple(g[0] for g in gamma),
        gamma_hi=tuple(g[1] for g in gamma),
        exact=exact,
        name=name,
        config={
            "n": n,
            "p": p,
            "gamma": [[float(g[0]), float(g[1])] for g in gamma],
            "intercepts": [float(v) for v in intercepts],
            "slopes": [float(v) for v in slopes],
        },
    )


def diag2(exact: bool = True) -> SystemSpec:
    """Reference 2x2 system: ``lambda_1 = -1 + w_1/4``, ``lambda_2 = 1 + w_2/4`` on ``[-1, 1]^2``."""
    spec = diagonal_affine((-1, 1), (0.25, 0.25), ((-1, 1), (-1, 1)), p=1, exact=exact, name="diag2")
    spec.config["builtin"] = "diag2"
    return spec


_BUILTINS = {"diag2": diag2}


def system_from_config(cfg: dict) -> SystemSpec:
    """Build a system from a config mapping.

    Either ``{"builtin": "diag2"}`` or a diagonal affine description
    ``{"n", "p", "gamma": [[lo, hi], ...], "intercepts": [...], "slopes": [...]}``.
    An optional ``"exact": false`` switches to floating point.
    """
    exact = bool(cfg.get("exact", True))
    if "builtin" in cfg:
        name = cfg["builtin"]
        if name not in _BUILTINS:
            raise ValueError(f"unknown builtin system {name!r}; known: {sorted(_BUILTINS)}")
        return _BUILTINS[name](exact=exact)
    try:
        gamma = cfg["gamma"]
        n = int(cfg.get("n", len(gamma)))
        p = int(cfg["p"])
        intercepts, slopes = cfg["intercepts"], cfg["slopes"]
    except KeyError as exc:
        raise ValueError(f"system config missing key {exc.args[0]!r}") from None
    if len(gamma) != n:
        raise ValueError("gamma must list one [lo, hi] pair per invariant")
    return diagonal_affine(intercepts, slopes, gamma, p=p, exact=exact, name=cfg.get("name", "diagonal"))
