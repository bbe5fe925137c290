"""Scenario-driven runner.

``ncqed run --scenario file.json`` executes the selected verification
suites and writes a machine-readable report; ``ncqed bench`` times the
hot operations on the scenario grid.  Exit codes: 0 all checks passed,
1 numeric failure, 2 configuration error.

Scenario files are strict JSON: unknown keys are rejected so typos
cannot silently disable a check.  Reports are deterministic for a given
scenario and seed up to the ``timings`` block.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, dynamics, geometry
from .gaugefield import random_gauge_field
from .lattice import GridSpec, dump_field_csv, random_band_limited
from .ordering import OperandList, symmetric_star
from .staralg import ThetaMatrix, star_chain, star_spectral
from .suites import SUITES, Check, SuiteContext

__all__ = ["main", "load_scenario", "run_scenario", "ScenarioError",
           "SCENARIO_SCHEMA", "default_scenario"]

TWO_PI = 2.0 * np.pi


class ScenarioError(ValueError):
    """Configuration problem; maps to exit code 2."""


SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["grid", "theta", "metric", "seed", "suites"],
    "properties": {
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["d", "n"],
            "properties": {
                "d": {"type": "integer", "minimum": 2, "maximum": 4},
                "n": {"type": "array", "minItems": 2, "maxItems": 4,
                      "items": {"type": "integer", "minimum": 8}},
                "len": {"type": "array", "minItems": 2, "maxItems": 4,
                        "items": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
        "theta": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "case": {"enum": ["space_space", "time_space"]},
                "entries": {
                    "type": "object",
                    "additionalProperties": False,
                    "patternProperties": {"^[0-3][0-3]$": {"type": "number"}},
                },
            },
        },
        "metric": {
            "type": "object",
            "additionalProperties": False,
            "required": ["preset"],
            "properties": {
                "preset": {"enum": ["minkowski", "conformal", "diag_wave"]},
                "epsilon": {"type": "number", "minimum": 0},
                "wave": {"type": "array", "items": {"type": "integer"},
                         "minItems": 2, "maxItems": 4},
                "manual_delta": {"type": "array", "items": {"type": "number"},
                                 "minItems": 2, "maxItems": 4},
            },
        },
        "coupling": {"type": "number"},
        "seed": {"type": "integer", "minimum": 0},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trace": {"type": "number", "exclusiveMinimum": 0},
                "associativity": {"type": "number", "exclusiveMinimum": 0},
                "fd_relative": {"type": "number", "exclusiveMinimum": 0},
                "delta_constancy": {"type": ["number", "null"]},
            },
        },
        "suites": {
            "type": "array",
            "minItems": 1,
            "items": {"enum": sorted(SUITES)},
        },
        "output": {"type": ["string", "null"]},
    },
}

DEFAULT_TOLERANCES = {
    "trace": 1e-10,
    "associativity": 1e-10,
    "fd_relative": 1e-6,
    "delta_constancy": None,
}


def default_scenario() -> dict:
    return {
        "grid": {"d": 2, "n": [32, 32], "len": [TWO_PI, TWO_PI]},
        "theta": {"case": "time_space", "entries": {"01": 0.1}},
        "metric": {"preset": "conformal", "epsilon": 0.01, "wave": [0, 1],
                   "manual_delta": [0.01, 0.0]},
        "coupling": 1.0,
        "seed": 7,
        "tolerances": dict(DEFAULT_TOLERANCES),
        "suites": sorted(SUITES),
        "output": None,
    }


def _theta_from_config(d: int, cfg: dict) -> tuple[ThetaMatrix, str]:
    entries = cfg.get("entries", {})
    pairs = {}
    for key, val in entries.items():
        mu, nu = int(key[0]), int(key[1])
        if mu >= d or nu >= d:
            raise ScenarioError(
                f"theta.entries.{key}: index out of range for d={d}")
        if mu == nu:
            raise ScenarioError(
                f"theta.entries.{key}: diagonal entries violate antisymmetry")
        pairs[(mu, nu)] = float(val)
    theta = ThetaMatrix.from_pairs(d, pairs)
    case = cfg.get("case")
    if case is None:
        case = "space_space" if theta.is_space_space else "time_space"
    if case == "space_space" and not theta.is_space_space:
        raise ScenarioError(
            "case mismatch: theta declared space_space but has time-space "
            f"entries {theta.entries[0].tolist()}")
    return theta, case


def load_scenario(source) -> SuiteContext:
    """Parse and validate a scenario from a path, JSON text, or dict."""
    if isinstance(source, dict):
        raw = source
    else:
        p = Path(str(source))
        try:
            is_file = p.exists()
        except OSError:
            is_file = False
        text = p.read_text() if is_file else str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"scenario is not valid JSON: {e}") from e
    try:
        jsonschema.validate(raw, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as e:
        path = ".".join(str(p) for p in e.absolute_path) or "(top level)"
        raise ScenarioError(f"scenario field {path}: {e.message}") from e

    gcfg = raw["grid"]
    d = gcfg["d"]
    n = gcfg["n"]
    if len(n) != d:
        raise ScenarioError(f"grid.n has {len(n)} entries but d={d}")
    length = gcfg.get("len", [TWO_PI] * d)
    if len(length) != d:
        raise ScenarioError(f"grid.len has {len(length)} entries but d={d}")
    try:
        grid = GridSpec(d=d, n=tuple(n), length=tuple(length))
    except ValueError as e:
        raise ScenarioError(f"grid: {e}") from e

    theta, case = _theta_from_config(d, raw["theta"])

    mcfg = raw["metric"]
    wave = mcfg.get("wave")
    if wave is not None and len(wave) != d:
        raise ScenarioError(f"metric.wave has {len(wave)} entries but d={d}")
    manual_delta = mcfg.get("manual_delta", [0.01] + [0.0] * (d - 1))
    if len(manual_delta) != d:
        raise ScenarioError(
            f"metric.manual_delta has {len(manual_delta)} entries but d={d}")

    tol = dict(DEFAULT_TOLERANCES)
    tol.update(raw.get("tolerances", {}))
    if tol["delta_constancy"] is None:
        tol["delta_constancy"] = 1e-6 * theta.magnitude ** 2

    return SuiteContext(
        grid=grid,
        theta=theta,
        theta_case=case,
        metric_preset=mcfg["preset"],
        metric_epsilon=float(mcfg.get("epsilon", 0.0)),
        metric_wave=tuple(wave) if wave is not None else None,
        manual_delta=np.asarray(manual_delta, dtype=float),
        coupling=float(raw.get("coupling", 1.0)),
        seed=int(raw["seed"]),
        tolerances=tol,
    ), raw


def _environment_stamp() -> dict:
    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "machine": platform.machine(),
    }


def run_scenario(ctx: SuiteContext, raw: dict,
                 suites: list[str] | None = None) -> dict:
    suites = suites if suites is not None else raw["suites"]
    checks: list[Check] = []
    timings = {}
    for name in suites:
        t0 = time.perf_counter()
        checks.extend(SUITES[name](ctx))
        timings[name] = round(time.perf_counter() - t0, 3)
    failed = [c for c in checks if not c.passed]
    return {
        "scenario": raw,
        "checks": [
            {"suite": c.suite, "name": c.name, "anchor": c.anchor,
             "value": c.value, "tol": c.tol, "pass": c.passed}
            for c in checks
        ],
        "status": "pass" if not failed else "fail",
        "counts": {"total": len(checks), "failed": len(failed)},
        "environment": _environment_stamp(),
        "timings": timings,
    }


def write_report(report: dict, ctx: SuiteContext, out_dir: str | None) -> None:
    if out_dir is None:
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    with open(out / "checks.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["suite", "name", "anchor", "value", "tol", "pass"])
        for c in report["checks"]:
            w.writerow([c["suite"], c["name"], c["anchor"], repr(c["value"]),
                        "" if c["tol"] is None else repr(c["tol"]),
                        int(c["pass"])])
    for name, fld in ctx.artifacts.items():
        dump_field_csv(fld, out / f"{name}.csv")


def _print_report(report: dict) -> None:
    for c in report["checks"]:
        verdict = "PASS" if c["pass"] else "FAIL"
        tol = "reported" if c["tol"] is None else f"tol {c['tol']:.1e}"
        print(f"[{verdict}] {c['suite']}/{c['name']}: {c['value']:.3e} "
              f"({tol}; {c['anchor']})")
    counts = report["counts"]
    print(f"status: {report['status']} "
          f"({counts['total'] - counts['failed']}/{counts['total']} checks)")


def _cmd_run(args) -> int:
    try:
        ctx, raw = load_scenario(args.scenario)
        suites = list(args.suite) if args.suite else None
        if suites:
            unknown = sorted(set(suites) - set(SUITES))
            if unknown:
                raise ScenarioError(f"unknown suites {unknown}")
        if args.seed is not None:
            ctx.seed = args.seed
            raw = dict(raw, seed=args.seed)
        out_dir = args.out if args.out is not None else raw.get("output")
    except ScenarioError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    report = run_scenario(ctx, raw, suites)
    write_report(report, ctx, out_dir)
    _print_report(report)
    return 0 if report["status"] == "pass" else 1


def _bench_timings(ctx: SuiteContext) -> dict[str, float]:
    grid, theta = ctx.grid, ctx.theta
    rng = ctx.rng("bench")
    cut = min(grid.n) // 4
    f = random_band_limited(grid, cut, rng)
    g = random_band_limited(grid, cut, rng)
    chain_fields = [random_band_limited(grid, max(1, min(grid.n) // 16), rng)
                    for _ in range(4)]
    A = random_gauge_field(grid, ctx.probe_cutoff, rng, amplitude=0.6,
                           coupling=ctx.coupling)
    bundle = ctx.flat_bundle()
    th_ss = ctx.theta_ss

    def clock(fn) -> float:
        fn()  # warm caches and FFT plans
        best = float("inf")
        for _ in range(3):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        return best

    return {
        "star_spectral": clock(lambda: star_spectral(f, g, theta)),
        "star_chain_n4": clock(lambda: star_chain(chain_fields, theta)),
        "symmetric_star_n4": clock(
            lambda: symmetric_star(OperandList(chain_fields), theta)),
        "eom_residual": clock(
            lambda: dynamics.eom_residual_sym(A, bundle, th_ss)),
    }


def _cmd_bench(args) -> int:
    try:
        ctx, raw = load_scenario(args.scenario)
    except ScenarioError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    timings = _bench_timings(ctx)
    for op, seconds in timings.items():
        print(f"{op}: {seconds:.4f} s")
    out_dir = raw.get("output")
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bench.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["operation", "seconds"])
            for op, seconds in timings.items():
                w.writerow([op, repr(seconds)])
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ncqed",
        description="Verification workbench for star-product gauge theory "
                    "on curved backgrounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute verification suites")
    p_run.add_argument("--scenario", required=True,
                       help="path to a scenario JSON file")
    p_run.add_argument("--out", default=None,
                       help="directory for report.json and CSV dumps")
    p_run.add_argument("--suite", action="append", default=None,
                       help="run only this suite (repeatable)")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.set_defaults(fn=_cmd_run)

    p_bench = sub.add_parser("bench", help="time the hot operations")
    p_bench.add_argument("--scenario", required=True)
    p_bench.set_defaults(fn=_cmd_bench)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
