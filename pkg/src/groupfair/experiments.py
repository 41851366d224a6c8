"""Seeded Monte Carlo harness.

Trial ``t`` of a config always draws its instance from
``RngStream(master_seed, t)``, so a trial's outcome does not depend on which
worker runs it or in what order. Workers return integer counts (or per-block
partial sums, merged in block order), which makes every result identical
for any worker count.
"""

from __future__ import annotations

import dataclasses
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np

from . import bounds
from .fairness import DEFAULT_BUDGET, CapacityError, own_and_best_other, exists_envy_free
from .mechanisms import greedy_average, greedy_total, random_assignment
from .model import Allocation, GroupStructure, bundle_values
from .sampling import DistributionSpec, RngStream, SamplingPlan, sample_matrix

MECHANISM_NAMES = ("greedy_total", "greedy_average", "random_assignment", "none")
SWEEP_AXES = ("m", "n_prime", "g", "alpha")
MECHANISM_STREAM_TAG = 1
TRIAL_BLOCK = 256
SYMMETRY_BLOCK = 8192
MAXSUM_BLOCK_CELLS = 1 << 22


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z / denom * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
    # keep the point estimate inside the interval despite rounding at p = 0 or 1
    return max(0.0, min(p, center - half)), min(1.0, max(p, center + half))


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(p * (1.0 - p) / trials)


@dataclass(frozen=True)
class Check:
    kind: str
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("ef", "alpha_ef", "exists_ef"):
            raise ConfigError("checks", f"unknown check {self.kind!r}")
        if self.kind == "alpha_ef":
            if self.alpha is None or not 0.0 <= self.alpha <= 1.0:
                raise ConfigError("checks", "alpha_ef needs alpha in [0, 1]")
            object.__setattr__(self, "alpha", float(self.alpha))
        elif self.alpha is not None:
            raise ConfigError("checks", f"{self.kind} takes no alpha")

    @property
    def name(self) -> str:
        return f"alpha_ef({self.alpha:g})" if self.kind == "alpha_ef" else self.kind

    @classmethod
    def parse(cls, obj) -> "Check":
        """Accepts ``"ef"``, ``"exists_ef"``, ``"alpha_ef:0.8"`` or ``{"alpha_ef": 0.8}``."""
        if isinstance(obj, dict) and len(obj) == 1:
            (kind, alpha), = obj.items()
            return cls(kind, alpha)
        if isinstance(obj, str):
            kind, _, alpha = obj.partition(":")
            if alpha:
                try:
                    return cls(kind, float(alpha))
                except ValueError:
                    raise ConfigError("checks", f"bad alpha in {obj!r}") from None
            return cls(kind)
        raise ConfigError("checks", f"cannot parse check {obj!r}")


_M_EXPR = re.compile(r"^\s*n\s*(?:([+-])\s*(\d+))?\s*$")


def resolve_m(m: int | str, n: int) -> int:
    """Item count, given either directly or relative to n as ``"n-K"`` / ``"n+K"``."""
    if isinstance(m, (int, np.integer)) and not isinstance(m, bool):
        return int(m)
    match = _M_EXPR.match(str(m))
    if not match:
        raise ConfigError("m", f"expected an integer or 'n-K', got {m!r}")
    sign, k = match.groups()
    return n + (int(k) if sign == "+" else -int(k) if sign else 0)


@dataclass(frozen=True)
class ExperimentConfig:
    group_sizes: tuple[int, ...]
    m: int | str
    distribution: DistributionSpec = field(default_factory=DistributionSpec.uniform)
    mechanism: str = "greedy_total"
    checks: tuple[Check, ...] = (Check("ef"),)
    trials: int = 1000
    master_seed: int = 0
    ci_level: float = 0.95
    budget: int = DEFAULT_BUDGET
    plan: SamplingPlan | None = None
    sweep_axis: str | None = None
    sweep_values: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "group_sizes", tuple(self.group_sizes))
        object.__setattr__(self, "checks", tuple(self.checks))
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))

    @property
    def structure(self) -> GroupStructure:
        return GroupStructure(self.group_sizes)

    @property
    def n_items(self) -> int:
        return resolve_m(self.m, sum(self.group_sizes))

    def sampling_plan(self) -> SamplingPlan:
        if self.plan is not None:
            return self.plan
        return SamplingPlan.iid(self.distribution, self.n_items)

    def validate(self) -> "ExperimentConfig":
        try:
            gs = self.structure
        except ValueError as exc:
            raise ConfigError("group_sizes", str(exc).partition(": ")[2] or str(exc)) from None
        m = self.n_items
        if m < 1:
            raise ConfigError("m", f"need at least 1 item, got {m}")
        if self.trials < 1:
            raise ConfigError("trials", "need at least 1 trial")
        if not 0.0 < self.ci_level < 1.0:
            raise ConfigError("ci_level", "must lie in (0, 1)")
        if self.mechanism not in MECHANISM_NAMES:
            raise ConfigError("mechanism", f"expected one of {list(MECHANISM_NAMES)}")
        if self.mechanism == "greedy_average" and gs.g != 2:
            raise ConfigError("group_sizes", "greedy_average needs exactly 2 groups")
        if not self.checks:
            raise ConfigError("checks", "need at least one check")
        for c in self.checks:
            if c.kind != "exists_ef" and self.mechanism == "none":
                raise ConfigError("checks", f"{c.name} needs a mechanism")
            if c.kind == "exists_ef" and gs.g**m > self.budget:
                raise CapacityError(gs.g**m, self.budget)
        try:
            self.sampling_plan().check_shape(gs.n, m)
        except ValueError as exc:
            raise ConfigError("sampling", str(exc)) from None
        return self

    def at(self, axis: str, value) -> "ExperimentConfig":
        """Copy of this config with one sweep parameter set to ``value``."""
        if axis == "m":
            return dataclasses.replace(self, m=int(value))
        if axis == "n_prime":
            return dataclasses.replace(self, group_sizes=(int(value),) * len(self.group_sizes))
        if axis == "g":
            return dataclasses.replace(self, group_sizes=(self.group_sizes[0],) * int(value))
        if axis == "alpha":
            checks = tuple(Check("alpha_ef", value) if c.kind == "alpha_ef" else c for c in self.checks)
            return dataclasses.replace(self, checks=checks)
        raise ConfigError("sweep.axis", f"expected one of {list(SWEEP_AXES)}, got {axis!r}")


@dataclass(frozen=True)
class SweepRow:
    m: int
    n: int
    g: int
    alpha: float | None
    check: str
    successes: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float
    theory_bound: float | None
    bound_kind: str | None
    seed: int
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)


def _allocate(cfg: ExperimentConfig, u, gs: GroupStructure, stream: RngStream) -> Allocation | None:
    if cfg.mechanism == "greedy_total":
        return greedy_total(u, gs)
    if cfg.mechanism == "greedy_average":
        return greedy_average(u, gs)
    if cfg.mechanism == "random_assignment":
        return random_assignment(u.m, gs.g, stream.substream(MECHANISM_STREAM_TAG))
    return None


def run_trial(cfg: ExperimentConfig, trial_index: int) -> dict[str, bool]:
    """Sample one instance, allocate it, and evaluate every configured check."""
    return _trial(cfg, cfg.structure, cfg.n_items, cfg.sampling_plan(), trial_index)


def _trial(cfg: ExperimentConfig, gs: GroupStructure, m: int, plan: SamplingPlan,
           trial_index: int) -> dict[str, bool]:
    stream = RngStream(cfg.master_seed, trial_index)
    u = sample_matrix(plan, gs, m, stream)
    alloc = _allocate(cfg, u, gs, stream)
    own = best = None
    if alloc is not None:
        own, best = own_and_best_other(bundle_values(u, alloc), gs)
    out = {}
    for c in cfg.checks:
        if c.kind == "ef":
            out[c.name] = bool(np.all(own >= best))
        elif c.kind == "alpha_ef":
            out[c.name] = bool(np.all(own >= c.alpha * best))
        else:
            out[c.name] = exists_envy_free(u, gs, budget=cfg.budget)[0]
    return out


def _count_block(cfg: ExperimentConfig, start: int, stop: int) -> dict[str, int]:
    gs, m, plan = cfg.structure, cfg.n_items, cfg.sampling_plan()
    counts = {c.name: 0 for c in cfg.checks}
    for t in range(start, stop):
        for name, ok in _trial(cfg, gs, m, plan, t).items():
            counts[name] += ok
    return counts


def _map(fn: Callable, arglists: Sequence[tuple], workers: int) -> list:
    """Order-preserving map, in-process or over a process pool."""
    if workers <= 1 or len(arglists) <= 1:
        return [fn(*args) for args in arglists]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*arglists)))


def theory_bound(cfg: ExperimentConfig, check: Check) -> tuple[float | None, str | None]:
    """Matching closed-form bound and what it bounds.

    ``"success_upper"`` bounds the success rate from above (existence);
    ``"failure_upper"`` bounds the failure rate (1 - success) from above.
    """
    gs = cfg.structure
    m = cfg.n_items
    plan = cfg.sampling_plan()
    if check.kind == "exists_ef" and plan.mode == "A1":
        return bounds.nonexistence_bound(gs.g, gs.n, m).value, "success_upper"
    if check.kind == "alpha_ef" and cfg.mechanism == "random_assignment" and check.alpha < 1.0:
        b = bounds.approx_ef_failure_bound(check.alpha, plan.mu_min, m, gs.g, gs.n)
        return b.value, "failure_upper"
    if (check.kind == "ef" and cfg.mechanism == "greedy_total" and gs.is_equal_size
            and plan.mode == "A1"):
        return bounds.greedy_failure_bound(plan.sigma_min, m, gs.n, gs.g).value, "failure_upper"
    return None, None


def estimate(cfg: ExperimentConfig, workers: int = 1) -> list[SweepRow]:
    """Run ``cfg.trials`` trials; one row per configured check."""
    cfg.validate()
    t0 = time.perf_counter()
    blocks = [(cfg, s, min(cfg.trials, s + TRIAL_BLOCK)) for s in range(0, cfg.trials, TRIAL_BLOCK)]
    totals = {c.name: 0 for c in cfg.checks}
    for counts in _map(_count_block, blocks, workers):
        for name, k in counts.items():
            totals[name] += k
    elapsed = time.perf_counter() - t0
    gs = cfg.structure
    rows = []
    for c in cfg.checks:
        k = totals[c.name]
        lo, hi = wilson_interval(k, cfg.trials, cfg.ci_level)
        bound, kind = theory_bound(cfg, c)
        rows.append(SweepRow(
            m=cfg.n_items, n=gs.n, g=gs.g, alpha=c.alpha, check=c.name,
            successes=k, trials=cfg.trials, estimate=k / cfg.trials, ci_low=lo, ci_high=hi,
            theory_bound=bound, bound_kind=kind, seed=cfg.master_seed, wall_time=elapsed,
        ))
    return rows


def sweep(cfg: ExperimentConfig, axis: str, values: Sequence, workers: int = 1) -> SweepResult:
    """One :func:`estimate` per value of ``axis``, in order."""
    if axis not in SWEEP_AXES:
        raise ConfigError("sweep.axis", f"expected one of {list(SWEEP_AXES)}, got {axis!r}")
    values = list(values)
    if not values:
        raise ConfigError("sweep.values", "need at least one value")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("sweep.values", "must be strictly increasing")
    if axis == "alpha" and not any(c.kind == "alpha_ef" for c in cfg.checks):
        raise ConfigError("sweep.axis", "sweeping alpha needs an alpha_ef check")
    result = SweepResult()
    for v in values:
        result.rows.extend(estimate(cfg.at(axis, v), workers))
    return result


def run(cfg: ExperimentConfig, workers: int = 1) -> SweepResult:
    if cfg.sweep_axis is not None:
        return sweep(cfg, cfg.sweep_axis, cfg.sweep_values, workers)
    return SweepResult(estimate(cfg, workers))


@dataclass(frozen=True)
class ProportionEstimate:
    successes: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float


def _symmetry_block(spec: DistributionSpec, n1: int, n2: int, seed: int, block: int, size: int) -> int:
    gen = RngStream(seed, block).generator()
    draws = spec.sample(gen, size * (n1 + n2)).reshape(size, n1 + n2)
    x1 = draws[:, :n1].sum(axis=1) / n1
    x2 = draws[:, n1:].sum(axis=1) / n2
    return int(np.count_nonzero(x1 >= x2))


def verify_symmetry(spec: DistributionSpec, n1: int, n2: int, trials: int, seed: int,
                    ci_level: float = 0.95, workers: int = 1) -> ProportionEstimate:
    """Monte Carlo estimate of Pr[mean of n1 draws >= mean of n2 draws].

    For a distribution symmetric about 1/2 this probability is exactly 1/2
    whatever the two sizes are.
    """
    if not spec.symmetric_about_half:
        raise ValueError(f"{spec.family}{spec.params} is not symmetric about 1/2")
    if n1 < 1 or n2 < 1 or trials < 1:
        raise ValueError("verify_symmetry: need n1, n2, trials >= 1")
    args = [(spec, n1, n2, seed, b, min(SYMMETRY_BLOCK, trials - s))
            for b, s in enumerate(range(0, trials, SYMMETRY_BLOCK))]
    k = sum(_map(_symmetry_block, args, workers))
    lo, hi = wilson_interval(k, trials, ci_level)
    return ProportionEstimate(k, trials, k / trials, lo, hi)


@dataclass(frozen=True)
class MaxSumEstimate:
    mean: float
    stderr: float
    threshold: float
    trials: int

    @property
    def margin(self) -> float:
        """Empirical mean minus 3 standard errors, minus the threshold."""
        return self.mean - 3.0 * self.stderr - self.threshold


def max_sum_threshold(spec: DistributionSpec, n_prime: int) -> float:
    """Lower bound mu n' + sigma sqrt(n')/50 on E[max of g iid sums of n' draws]."""
    return spec.mean * n_prime + math.sqrt(spec.variance) * math.sqrt(n_prime) / 50.0


def _maxsum_block(spec: DistributionSpec, n_prime: int, g: int, seed: int, block: int,
                  size: int) -> tuple[float, float]:
    gen = RngStream(seed, block).generator()
    sums = spec.sample(gen, size * g * n_prime).reshape(size, g, n_prime).sum(axis=2)
    best = sums.max(axis=1)
    return float(best.sum()), float(np.square(best).sum())


def estimate_max_group_sum(spec: DistributionSpec, n_prime: int, g: int, trials: int, seed: int,
                           workers: int = 1) -> MaxSumEstimate:
    """Monte Carlo mean (and standard error) of the largest of ``g`` iid sums of ``n_prime`` draws."""
    if g < 2:
        raise ValueError(f"estimate_max_group_sum: need g >= 2, got {g}")
    if n_prime < 1 or trials < 2:
        raise ValueError("estimate_max_group_sum: need n_prime >= 1 and trials >= 2")
    per_block = max(1, MAXSUM_BLOCK_CELLS // (g * n_prime))
    args = [(spec, n_prime, g, seed, b, min(per_block, trials - s))
            for b, s in enumerate(range(0, trials, per_block))]
    parts = _map(_maxsum_block, args, workers)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / trials
    var = max(0.0, (total_sq - trials * mean * mean) / (trials - 1))
    return MaxSumEstimate(mean, math.sqrt(var / trials), max_sum_threshold(spec, n_prime), trials)
