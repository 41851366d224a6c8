"""Command-line entry point.

Exit codes: 0 success (or a positive answer), 1 a legitimate negative answer,
2 invalid input, 3 enumeration budget exceeded.

Experiment config (``run``)::

    {
      "group_sizes": [2, 2, 2],
      "m": 4,                      # or "n-1", "n+3"
      "distribution": {"family": "uniform", "lo": 0.0, "hi": 1.0},
      "mechanism": "none",         # greedy_total | greedy_average | random_assignment | none
      "checks": ["exists_ef"],     # "ef", "exists_ef", "alpha_ef:0.8" or {"alpha_ef": 0.8}
      "trials": 20000,
      "ci_level": 0.95,
      "sweep": {"axis": "m", "values": [10, 20, 40]}
    }

Instead of ``distribution`` a config may give ``sampling``:
``{"mode": "A1", "specs": [...one per item...]}``,
``{"mode": "A2", "specs": [...one per player...]}`` or
``{"mode": "A2", "grid": [[...n rows of m specs...]]}``.

Instance file (``check``, ``exists``)::

    {"group_sizes": [1, 1], "m": 2, "utilities": [[0.9, 0.1], [0.1, 0.9]], "allocation": [0, 1]}
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import math
import os
import sys

from . import bounds
from .experiments import (
    SWEEP_AXES,
    Check,
    ConfigError,
    ExperimentConfig,
    SweepResult,
    estimate_max_group_sum,
    run,
    verify_symmetry,
)
from .fairness import CapacityError, default_budget, exists_envy_free, is_alpha_ef, is_envy_free
from .mechanisms import greedy_average, greedy_total, random_assignment
from .model import Allocation, GroupStructure, UtilityMatrix, check_dimensions
from .sampling import DistributionSpec, RngStream, SamplingPlan

CSV_COLUMNS = ("m", "n", "g", "check", "successes", "trials", "estimate",
               "ci_low", "ci_high", "theory_bound", "seed")
BOUNDS_COLUMNS = ("g", "n", "m", "alpha", "mu_min", "sigma_min",
                  "nonexistence", "nonexistence_hypothesis",
                  "approx_ef_failure", "approx_ef_hypothesis",
                  "greedy_failure", "greedy_hypothesis")

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_CAPACITY = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    return data


def _int_list(value, field: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ConfigError(field, "expected a list of integers")
    return tuple(value)


def _spec(d, field: str) -> DistributionSpec:
    if not isinstance(d, dict):
        raise ConfigError(field, "expected an object like {\"family\": \"uniform\"}")
    try:
        return DistributionSpec.from_dict(d)
    except ValueError as exc:
        raise ConfigError(field, str(exc)) from None


def _plan(d) -> SamplingPlan:
    if not isinstance(d, dict):
        raise ConfigError("sampling", "expected an object")
    mode = d.get("mode")
    try:
        if "grid" in d:
            grid = [[_spec(s, "sampling.grid") for s in row] for row in d["grid"]]
            return SamplingPlan(mode, grid, grid=True)
        specs = [_spec(s, "sampling.specs") for s in d.get("specs", [])]
        return SamplingPlan(mode, specs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError("sampling", str(exc)) from None


def load_config(data: dict) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from the parsed config file."""
    known = {"group_sizes", "m", "distribution", "sampling", "mechanism", "checks", "trials",
             "seed", "ci_level", "budget", "sweep"}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(extra[0], "unknown field")
    if "group_sizes" not in data:
        raise ConfigError("group_sizes", "required")
    kwargs: dict = {"group_sizes": _int_list(data["group_sizes"], "group_sizes")}
    sweep = data.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or sweep.get("axis") not in SWEEP_AXES:
            raise ConfigError("sweep.axis", f"expected one of {list(SWEEP_AXES)}")
        values = sweep.get("values")
        if not isinstance(values, list) or not values or not all(isinstance(v, (int, float)) for v in values):
            raise ConfigError("sweep.values", "expected a non-empty list of numbers")
        kwargs["sweep_axis"] = sweep["axis"]
        kwargs["sweep_values"] = tuple(values)
    if "m" in data:
        m = data["m"]
        if isinstance(m, bool) or not isinstance(m, (int, str)):
            raise ConfigError("m", "expected an integer or 'n-K'")
        kwargs["m"] = m
    elif sweep is not None and sweep["axis"] == "m":
        kwargs["m"] = int(sweep["values"][0])
    else:
        raise ConfigError("m", "required")
    if "distribution" in data and "sampling" in data:
        raise ConfigError("sampling", "give either distribution or sampling, not both")
    if "distribution" in data:
        kwargs["distribution"] = _spec(data["distribution"], "distribution")
    if "sampling" in data:
        kwargs["plan"] = _plan(data["sampling"])
    if "mechanism" in data:
        kwargs["mechanism"] = data["mechanism"]
    if "checks" in data:
        if not isinstance(data["checks"], list):
            raise ConfigError("checks", "expected a list")
        kwargs["checks"] = tuple(Check.parse(c) for c in data["checks"])
    for key, typ in (("trials", int), ("seed", int), ("budget", int), ("ci_level", (int, float))):
        if key in data:
            if isinstance(data[key], bool) or not isinstance(data[key], typ):
                raise ConfigError(key, "wrong type")
    if "trials" in data:
        kwargs["trials"] = data["trials"]
    if "seed" in data:
        kwargs["master_seed"] = data["seed"]
    if "ci_level" in data:
        kwargs["ci_level"] = float(data["ci_level"])
    kwargs["budget"] = data.get("budget", default_budget())
    return ExperimentConfig(**kwargs)


def result_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in result.rows:
        writer.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def result_json(result: SweepResult, timing: bool = False) -> str:
    rows = []
    for row in result.rows:
        d = {c: getattr(row, c) for c in CSV_COLUMNS}
        d["alpha"] = row.alpha
        d["bound_kind"] = row.bound_kind
        if timing:
            d["wall_time"] = row.wall_time
        rows.append(d)
    return json.dumps({"rows": rows}, indent=2) + "\n"


def load_instance(data: dict) -> tuple[GroupStructure, UtilityMatrix, Allocation | None]:
    for key in ("group_sizes", "utilities"):
        if key not in data:
            raise InputError(f"{key}: required")
    try:
        gs = GroupStructure(_int_list(data["group_sizes"], "group_sizes"))
        u = UtilityMatrix(data["utilities"])
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    if "m" in data and data["m"] != u.m:
        raise InputError(f"m: declared {data['m']} but utilities have {u.m} columns")
    alloc = None
    if data.get("allocation") is not None:
        try:
            alloc = Allocation(_int_list(data["allocation"], "allocation"), gs.g)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    try:
        check_dimensions(u, gs, alloc)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return gs, u, alloc


def cmd_run(args) -> int:
    cfg = load_config(_read_json(args.config))
    overrides = {"master_seed": args.seed}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.budget is not None:
        overrides["budget"] = args.budget
    cfg = dataclasses.replace(cfg, **overrides)
    cfg.validate()
    result = run(cfg, workers=args.workers)
    out = result_json(result, args.timing) if args.format == "json" else result_csv(result)
    sys.stdout.write(out)
    return EXIT_OK


def cmd_check(args) -> int:
    gs, u, alloc = load_instance(_read_json(args.instance))
    if args.alpha is not None and not 0.0 <= args.alpha <= 1.0:
        raise InputError(f"--alpha: must lie in [0, 1], got {args.alpha}")
    if args.mechanism == "greedy_total":
        alloc = greedy_total(u, gs)
    elif args.mechanism == "greedy_average":
        try:
            alloc = greedy_average(u, gs)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    elif args.mechanism == "random_assignment":
        if args.seed is None:
            raise InputError("--seed: required with --mechanism random_assignment")
        alloc = random_assignment(u.m, gs.g, RngStream(args.seed, 0))
    if alloc is None:
        raise InputError("allocation: required (or pass --mechanism)")
    report = is_envy_free(u, gs, alloc)
    out = {"allocation": alloc.item_to_group.tolist(), **report.to_dict()}
    ok = report.is_envy_free
    if args.alpha is not None:
        ok = is_alpha_ef(u, gs, alloc, args.alpha)
        out["alpha"] = args.alpha
        out["is_alpha_ef"] = ok
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_exists(args) -> int:
    gs, u, _ = load_instance(_read_json(args.instance))
    budget = args.budget if args.budget is not None else default_budget()
    found, witness = exists_envy_free(u, gs, budget=budget)
    if found:
        sys.stdout.write(json.dumps({"exists": True, "witness": witness.item_to_group.tolist()}) + "\n")
        return EXIT_OK
    sys.stdout.write(json.dumps({"exists": False, "witness": "none"}) + "\n")
    return EXIT_NEGATIVE


def cmd_bounds(args) -> int:
    alphas = args.alpha if args.alpha else [None]
    for a in alphas:
        if a is not None and not 0.0 <= a < 1.0:
            raise InputError(f"--alpha: must lie in [0, 1), got {a:g}")
    if not 0.0 < args.mu_min <= 1.0:
        raise InputError("--mu-min: must lie in (0, 1]")
    if not 0.0 < args.sigma_min <= 0.5:
        raise InputError("--sigma-min: must lie in (0, 0.5]")
    if min(args.g) < 2 or min(args.n) < 1 or min(args.m) < 1:
        raise InputError("need --g >= 2, --n >= 1, --m >= 1")
    rows = []
    for g, n, m, a in itertools.product(args.g, args.n, args.m, alphas):
        ne = bounds.nonexistence_bound(g, n, m)
        gr = bounds.greedy_failure_bound(args.sigma_min, m, n, g)
        ap = bounds.approx_ef_failure_bound(a, args.mu_min, m, g, n) if a is not None else None
        rows.append({
            "g": g, "n": n, "m": m, "alpha": a, "mu_min": args.mu_min, "sigma_min": args.sigma_min,
            "nonexistence": ne.value, "nonexistence_hypothesis": ne.hypothesis_met,
            "approx_ef_failure": ap.value if ap else None,
            "approx_ef_hypothesis": ap.hypothesis_met if ap else None,
            "greedy_failure": gr.value, "greedy_hypothesis": gr.hypothesis_met,
        })
    if args.format == "json":
        sys.stdout.write(json.dumps({"rows": rows}, indent=2) + "\n")
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(BOUNDS_COLUMNS)
        for r in rows:
            writer.writerow([_fmt(r[c]) for c in BOUNDS_COLUMNS])
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _dist_arg(text: str) -> DistributionSpec:
    try:
        return DistributionSpec.from_dict(json.loads(text))
    except (json.JSONDecodeError, ValueError, TypeError, AttributeError) as exc:
        raise InputError(f"--dist: {exc}") from None


def cmd_symmetry(args) -> int:
    spec = _dist_arg(args.dist)
    try:
        est = verify_symmetry(spec, args.n1, args.n2, args.trials, args.seed, workers=args.workers)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = {"distribution": spec.to_dict(), "n1": args.n1, "n2": args.n2, "trials": est.trials,
           "successes": est.successes, "estimate": est.estimate,
           "ci_low": est.ci_low, "ci_high": est.ci_high, "seed": args.seed}
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_maxsum(args) -> int:
    spec = _dist_arg(args.dist)
    try:
        est = estimate_max_group_sum(spec, args.n_prime, args.g, args.trials, args.seed,
                                     workers=args.workers)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = {"distribution": spec.to_dict(), "n_prime": args.n_prime, "g": args.g,
           "trials": est.trials, "mean": est.mean, "stderr": est.stderr,
           "threshold": est.threshold, "margin": est.margin, "exceeds_threshold": est.margin > 0,
           "seed": args.seed}
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="groupfair", description="Fair division among groups: "
                                "mechanisms, envy-freeness checks and Monte Carlo experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    workers_default = os.cpu_count() or 1
    uniform = '{"family": "uniform", "lo": 0.0, "hi": 1.0}'

    r = sub.add_parser("run", help="run an experiment config, emit one row per parameter point")
    r.add_argument("config")
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--trials", type=int)
    r.add_argument("--budget", type=int)
    r.add_argument("--workers", type=int, default=workers_default)
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--timing", action="store_true", help="include wall_time in JSON output")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="envy report for an allocation")
    c.add_argument("instance")
    c.add_argument("--alpha", type=float)
    c.add_argument("--mechanism", choices=("greedy_total", "greedy_average", "random_assignment"))
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("exists", help="exhaustively search for an envy-free allocation")
    e.add_argument("instance")
    e.add_argument("--budget", type=int)
    e.set_defaults(func=cmd_exists)

    b = sub.add_parser("bounds", help="tabulate the closed-form bounds on a parameter grid")
    b.add_argument("--g", type=int, nargs="+", required=True)
    b.add_argument("--n", type=int, nargs="+", required=True)
    b.add_argument("--m", type=int, nargs="+", required=True)
    b.add_argument("--alpha", type=float, nargs="+")
    b.add_argument("--mu-min", type=float, default=0.5)
    b.add_argument("--sigma-min", type=float, default=math.sqrt(1.0 / 12.0))
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("symmetry", help="estimate Pr[mean of group 1 >= mean of group 2]")
    s.add_argument("--dist", default=uniform)
    s.add_argument("--n1", type=int, required=True)
    s.add_argument("--n2", type=int, required=True)
    s.add_argument("--trials", type=int, default=100000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--workers", type=int, default=workers_default)
    s.set_defaults(func=cmd_symmetry)

    x = sub.add_parser("maxsum", help="estimate E[max of g group sums] against its lower bound")
    x.add_argument("--dist", default=uniform)
    x.add_argument("--n-prime", type=int, required=True)
    x.add_argument("--g", type=int, required=True)
    x.add_argument("--trials", type=int, default=100000)
    x.add_argument("--seed", type=int, required=True)
    x.add_argument("--workers", type=int, default=workers_default)
    x.set_defaults(func=cmd_maxsum)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InputError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
