"""Command-line interface.

Usage::

    templefront {validate,simulate,synthesize,check,converge} CONFIG [--out DIR]
        [--nu N] [--seed S] [--max-events N]

``CONFIG`` is a JSON or YAML file.  Relative paths inside it are resolved
against the config file's directory.  Exit codes: 0 success, 1 domain or
verification failure, 2 configuration error, 3 event budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

import yaml

from .control import synthesize
from .decay import DecayConstants, calibrate_constants, check_k_rho, default_constants, oleinik_report, spreading_report
from .exceptions import (
    GridMismatchError,
    HorizonTooShortError,
    NotAttainableError,
    RunawayError,
    TempleFrontError,
)
from .profile import GridLevel, Profile, on_grid, quantize, read_profile_csv, write_profile_csv
from .system import SystemSpec, system_from_config, validate_system
from .tracking import BoundaryControl, run_forward

log = logging.getLogger("templefront")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_RUNAWAY = 3


class ConfigError(Exception):
    pass


class RunConfig:
    """Parsed configuration with paths resolved relative to the config file."""

    def __init__(self, path: Path, data: dict, args: argparse.Namespace):
        self.path = path
        self.data = data
        self.root = path.parent
        try:
            self.spec: SystemSpec = system_from_config(data.get("system", {"builtin": "diag2"}))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"system: {exc}") from None
        self.interval = tuple(float(v) for v in data.get("interval", (0.0, 1.0)))
        if len(self.interval) != 2 or not self.interval[0] < self.interval[1]:
            raise ConfigError(f"interval must be [a, b] with a < b, got {data.get('interval')}")
        nu = args.nu if args.nu is not None else data.get("nu", 4)
        if int(nu) < 1:
            raise ConfigError(f"nu must be >= 1, got {nu}")
        self.grid = GridLevel(int(nu))
        self.seed = args.seed if args.seed is not None else int(data.get("seed", 0))
        self.max_events = args.max_events if args.max_events is not None else int(data.get("max_events", 10**6))
        out = args.out or data.get("out") or "."
        self.out = Path(out) if Path(out).is_absolute() or args.out else self.root / out
        self.tau = data.get("tau")
        if self.tau is not None:
            self.tau = self.spec.num(_parse_number(self.tau))
            if not self.tau > 0:
                raise ConfigError("tau must be positive")

    def resolve(self, p) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.root / q

    def profile(self, key: str, required: bool = True) -> Profile | None:
        src = self.data.get(key)
        if src is None:
            if required:
                raise ConfigError(f"config needs {key!r}")
            return None
        lo, hi = self.spec.gamma_lo, self.spec.gamma_hi
        if isinstance(src, dict):
            if "constant" in src:
                return Profile.constant(*self.interval, src["constant"])
            return Profile.from_cells(*self.interval, src.get("breakpoints", []), src["values"])
        path = self.resolve(src)
        if not path.exists():
            raise ConfigError(f"{key}: file not found: {path}")
        return read_profile_csv(path, interval=self.interval, lo=lo, hi=hi)

    def controls(self, initial: Profile):
        src = self.data.get("controls")
        if src is None:
            return None
        if not isinstance(src, dict):
            path = self.resolve(src)
            if not path.exists():
                raise ConfigError(f"controls: file not found: {path}")
            src = json.loads(path.read_text())
        if "controls" in src:
            src = src["controls"]
        try:
            pair = tuple(BoundaryControl.from_dict(src[side], exact=self.spec.exact) for side in ("left", "right"))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"controls: malformed schedule ({exc})") from None
        return tuple(c.snapped(self.grid, self.spec.gamma_lo, self.spec.gamma_hi) for c in pair)

    def constants(self) -> DecayConstants:
        c = self.data.get("constants")
        if c is not None:
            lam = c.get("lambda_min")
            if lam is None:
                lam = validate_system(self.spec).bounds.lambda_min
            return DecayConstants(float(c["C"]), float(c["C1"]), float(lam))
        calib = self.data.get("calibration")
        if calib is not None:
            return calibrate_constants(
                self.spec,
                tuple(calib.get("grid_range", (2, 4))),
                int(calib.get("trials", 100)),
                int(calib.get("seed", self.seed)),
            )
        return default_constants(self.spec)


def _parse_number(v):
    if isinstance(v, str) and "/" in v:
        return Fraction(v)
    return v


def load_config(path: str, args) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text()
    try:
        data = yaml.safe_load(text) if p.suffix in (".yaml", ".yml") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return RunConfig(p, data, args)


def _on_grid_profile(cfg: RunConfig, prof: Profile) -> Profile:
    if all(on_grid(tuple(w), cfg.grid) for w in prof.values):
        return prof
    return quantize(prof, cfg.grid, cfg.spec.gamma_lo, cfg.spec.gamma_hi)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_validate(cfg: RunConfig) -> int:
    report = validate_system(cfg.spec, int(cfg.data.get("grid_resolution", 9)))
    _write(cfg.out / "validation.json", report.to_json())
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.passed else EXIT_FAIL


def _snapshot_times(cfg: RunConfig, tau):
    times = cfg.data.get("snapshot_times")
    if times is None:
        return [tau * Fraction(k, 4) for k in range(1, 5)]
    return [cfg.spec.num(_parse_number(t)) for t in times]


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.tau is None:
        raise ConfigError("simulate needs 'tau'")
    initial = _on_grid_profile(cfg, cfg.profile("initial"))
    controls = cfg.controls(initial)
    times = _snapshot_times(cfg, cfg.tau)
    traj = run_forward(cfg.spec, initial, controls, cfg.grid, cfg.tau, snapshot_times=times, max_events=cfg.max_events)
    constants = cfg.constants()
    report = oleinik_report(traj, constants)
    spread = spreading_report(traj, constants.C1)
    for k, (t, prof) in enumerate(zip(traj.times, traj.profiles)):
        _write(cfg.out / f"snapshot_{k:03d}.csv", f"# t={float(t)!r}\n" + write_profile_csv(prof))
    _write(cfg.out / "final.csv", write_profile_csv(traj.final_profile))
    _write(cfg.out / "events.jsonl", traj.events_jsonl())
    _write(cfg.out / "fronts.csv", traj.polylines_csv())
    rep = report.to_dict()
    rep["spreading"] = {"C1": constants.C1, "required_C1": spread.required_C1, "passed": spread.passed}
    _write(cfg.out / "oleinik.json", json.dumps(rep, indent=2, sort_keys=True, default=str))
    _write(cfg.out / "oleinik.txt", report.to_text())
    sys.stdout.write(f"events: {len(traj.events)}  snapshots: {len(traj.times)}\n" + report.to_text())
    return EXIT_OK if report.passed and spread.passed else EXIT_FAIL


def cmd_synthesize(cfg: RunConfig) -> int:
    if cfg.tau is None:
        raise ConfigError("synthesize needs 'tau'")
    initial = cfg.profile("initial")
    target = cfg.profile("target")
    plan = synthesize(
        cfg.spec, initial, target, cfg.tau, cfg.grid, constants=cfg.constants(), verify=True, max_events=cfg.max_events
    )
    _write(cfg.out / "plan.json", plan.to_json())
    _write(cfg.out / "target_quantized.csv", write_profile_csv(plan.target_quantized))
    _write(cfg.out / "replay.csv", write_profile_csv(plan.replay.final_profile))
    summary = (
        f"replay matches quantized target: {plan.replay_matches}\n"
        f"L1 gap to target: {plan.replay_l1!r}\n"
        f"stage boundaries constant: {plan.stages_constant}\n"
    )
    _write(cfg.out / "replay.txt", summary)
    sys.stdout.write(summary)
    return EXIT_OK if plan.replay_matches else EXIT_FAIL


def cmd_check(cfg: RunConfig) -> int:
    prof = cfg.profile("profile")
    mode = cfg.data.get("mode", "continuum")
    rho = cfg.data.get("rho")
    rho = float(rho) if rho is not None else cfg.constants().rho_prime
    report = check_k_rho(prof, rho, cfg.spec.p, mode=mode)
    _write(cfg.out / "check.json", json.dumps(report.to_dict(), indent=2, sort_keys=True, default=str))
    sys.stdout.write(
        f"K^rho ({mode}, rho={rho:.6g}): {'member' if report.member else 'not a member'}; "
        f"required rho={report.required_rho:.6g} witness={report.witness}\n"
    )
    return EXIT_OK if report.member else EXIT_FAIL


def cmd_converge(cfg: RunConfig, nu_list=None) -> int:
    if cfg.tau is None:
        raise ConfigError("converge needs 'tau'")
    nus = nu_list or cfg.data.get("nu_list") or [cfg.grid.nu]
    nus = [int(v) for v in nus]
    if any(b <= a for a, b in zip(nus, nus[1:])):
        raise ConfigError("nu_list must be strictly increasing")
    initial, target = cfg.profile("initial"), cfg.profile("target")
    constants = cfg.constants()
    a, b = cfg.interval
    rows, timings, ok = [], [], True
    for nu in nus:
        t0 = time.perf_counter()
        plan = synthesize(cfg.spec, initial, target, cfg.tau, GridLevel(nu), constants=constants, max_events=cfg.max_events)
        bound = (b - a) * cfg.spec.n * 2.0**-nu
        rows.append((nu, plan.replay_l1, len(plan.replay.events), bound))
        timings.append((nu, time.perf_counter() - t0))
        ok = ok and plan.replay_matches and plan.replay_l1 <= bound
    gaps = [r[1] for r in rows]
    ok = ok and all(g2 <= 2 * g1 + 1e-15 for g1, g2 in zip(gaps, gaps[1:]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["nu", "l1_gap", "events", "bound"])
    for nu, gap, ev, bound in rows:
        w.writerow([nu, repr(float(gap)), ev, repr(bound)])
    _write(cfg.out / "converge.csv", buf.getvalue())
    tb = io.StringIO()
    tw = csv.writer(tb, lineterminator="\n")
    tw.writerow(["nu", "runtime_s"])
    for nu, rt in timings:
        tw.writerow([nu, f"{rt:.4f}"])
    _write(cfg.out / "converge_timings.csv", tb.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "synthesize": cmd_synthesize,
    "check": cmd_check,
    "converge": cmd_converge,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="templefront", description="Front tracking with boundary controls.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="JSON or YAML run configuration")
    parser.add_argument("--out", help="output directory (default: config 'out' or the config's directory)")
    parser.add_argument("--nu", type=int, action="append", help="grid level; repeat for converge")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--max-events", type=int, dest="max_events")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    nu_list = args.nu
    args.nu = nu_list[0] if nu_list else None
    try:
        cfg = load_config(args.config, args)
        if args.command == "converge":
            return cmd_converge(cfg, nu_list if nu_list and len(nu_list) > 1 else None)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except RunawayError as exc:
        log.error("runaway: %s", exc)
        return EXIT_RUNAWAY
    except HorizonTooShortError as exc:
        log.error("horizon-too-short: %s", exc)
        return EXIT_FAIL
    except NotAttainableError as exc:
        log.error("not attainable (%s): %s", exc.verdict, exc)
        return EXIT_FAIL
    except GridMismatchError as exc:
        log.error("grid mismatch: %s", exc)
        return EXIT_CONFIG
    except TempleFrontError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAIL
    except (OSError, ValueError, KeyError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
