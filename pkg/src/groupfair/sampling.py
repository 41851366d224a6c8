"""Utility distributions and seeded generation of random instances.

Randomness is keyed, never carried: an ``RngStream`` names a
``(master_seed, stream_id)`` pair and every call to :meth:`RngStream.generator`
rebuilds the same Philox counter-based generator from it. Trials therefore
never share generator state and can run in any order or process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import GroupStructure, UtilityMatrix

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective avalanche hash on 64-bit words."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "master_seed", int(self.master_seed) & MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & MASK64)

    def key(self) -> tuple[int, int]:
        # Word 0 identifies the master seed; word 1 mixes the stream into it.
        # splitmix64 is a bijection, so distinct pairs never share a key.
        k0 = splitmix64(self.master_seed)
        return k0, splitmix64(k0 ^ self.stream_id)

    def generator(self) -> np.random.Generator:
        k0, k1 = self.key()
        return np.random.Generator(np.random.Philox(key=np.array([k0, k1], dtype=np.uint64)))

    def substream(self, tag: int) -> "RngStream":
        """Derived stream for a second purpose within the same trial."""
        return RngStream(self.master_seed, splitmix64(self.stream_id ^ splitmix64(tag)))


def _phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _Phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@dataclass(frozen=True)
class DistributionSpec:
    """A utility distribution supported inside [0, 1].

    ``family`` is one of ``"uniform"`` (params lo, hi), ``"beta"`` (a, b) or
    ``"truncnorm"`` (mu, sigma of the parent normal, truncated to [0, 1]).
    Every family here is non-atomic with positive mean and variance.
    """

    family: str
    params: tuple[float, float]

    def __post_init__(self) -> None:
        p = tuple(float(x) for x in self.params)
        if len(p) != 2 or not all(math.isfinite(x) for x in p):
            raise ValueError(f"{self.family}: expected two finite parameters")
        object.__setattr__(self, "params", p)
        if self.family == "uniform":
            lo, hi = p
            if not 0.0 <= lo < hi <= 1.0:
                raise ValueError("uniform: need 0 <= lo < hi <= 1")
        elif self.family == "beta":
            if min(p) <= 0.0:
                raise ValueError("beta: shape parameters must be positive")
        elif self.family == "truncnorm":
            mu, sigma = p
            if not 0.0 <= mu <= 1.0:
                raise ValueError("truncnorm: mu must lie in [0, 1]")
            if sigma <= 0.0:
                raise ValueError("truncnorm: sigma must be positive")
        else:
            raise ValueError(f"unknown distribution family {self.family!r}")

    @classmethod
    def uniform(cls, lo: float = 0.0, hi: float = 1.0) -> "DistributionSpec":
        return cls("uniform", (lo, hi))

    @classmethod
    def beta(cls, a: float, b: float) -> "DistributionSpec":
        return cls("beta", (a, b))

    @classmethod
    def truncnorm(cls, mu: float, sigma: float) -> "DistributionSpec":
        return cls("truncnorm", (mu, sigma))

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        d = dict(d)
        family = d.pop("family", None)
        names = {"uniform": ("lo", "hi"), "beta": ("a", "b"), "truncnorm": ("mu", "sigma")}
        if family not in names:
            raise ValueError(f"family: expected one of {sorted(names)}, got {family!r}")
        defaults = {"lo": 0.0, "hi": 1.0}
        try:
            params = tuple(d.pop(k) if k in d else defaults[k] for k in names[family])
        except KeyError as exc:
            raise ValueError(f"{family}: missing parameter {exc.args[0]!r}") from None
        if d:
            raise ValueError(f"{family}: unexpected fields {sorted(d)}")
        return cls(family, params)

    def to_dict(self) -> dict:
        names = {"uniform": ("lo", "hi"), "beta": ("a", "b"), "truncnorm": ("mu", "sigma")}
        return {"family": self.family, **dict(zip(names[self.family], self.params))}

    @property
    def mean(self) -> float:
        return spec_moments(self)[0]

    @property
    def variance(self) -> float:
        return spec_moments(self)[1]

    @property
    def symmetric_about_half(self) -> bool:
        a, b = self.params
        if self.family == "uniform":
            return a + b == 1.0
        if self.family == "beta":
            return a == b
        return a == 0.5

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        a, b = self.params
        if self.family == "uniform":
            return a + (b - a) * gen.random(size)
        if self.family == "beta":
            return gen.beta(a, b, size)
        return _truncnorm_rejection(gen, a, b, size)


def _truncnorm_rejection(gen: np.random.Generator, mu: float, sigma: float, size: int) -> np.ndarray:
    out = np.empty(size)
    filled = 0
    accept = _Phi((1.0 - mu) / sigma) - _Phi(-mu / sigma)
    while filled < size:
        want = size - filled
        draw = mu + sigma * gen.standard_normal(int(want / max(accept, 1e-3) * 1.1) + 16)
        keep = draw[(draw >= 0.0) & (draw <= 1.0)][:want]
        out[filled:filled + keep.size] = keep
        filled += keep.size
    return out


def spec_moments(spec: DistributionSpec) -> tuple[float, float]:
    """Closed-form (mean, variance) of ``spec``."""
    a, b = spec.params
    if spec.family == "uniform":
        return (a + b) / 2.0, (b - a) ** 2 / 12.0
    if spec.family == "beta":
        s = a + b
        return a / s, a * b / (s * s * (s + 1.0))
    mu, sigma = a, b
    lo, hi = (0.0 - mu) / sigma, (1.0 - mu) / sigma
    z = _Phi(hi) - _Phi(lo)
    r = (_phi(lo) - _phi(hi)) / z
    mean = mu + sigma * r
    var = sigma * sigma * (1.0 + (lo * _phi(lo) - hi * _phi(hi)) / z - r * r)
    return mean, var


@dataclass(frozen=True)
class SamplingPlan:
    """Which distribution governs each utility entry.

    ``mode="A1"``: ``specs`` has one entry per item, shared by all players.
    ``mode="A2"``: ``specs`` is either one spec per player (applied to all of
    that player's items) or, with ``grid=True``, an n x m nesting of specs.
    """

    mode: str
    specs: tuple
    grid: bool = False
    distinct: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.mode not in ("A1", "A2"):
            raise ValueError(f"mode: expected 'A1' or 'A2', got {self.mode!r}")
        if self.grid:
            if self.mode != "A2":
                raise ValueError("grid form is only available in A2 mode")
            specs = tuple(tuple(row) for row in self.specs)
            if not specs or len({len(r) for r in specs}) != 1:
                raise ValueError("A2 grid: rows must be non-empty and of equal length")
        else:
            specs = tuple(self.specs)
        if not specs:
            raise ValueError("sampling plan needs at least one spec")
        object.__setattr__(self, "specs", specs)
        flat = [x for row in specs for x in row] if self.grid else specs
        object.__setattr__(self, "distinct", tuple(dict.fromkeys(flat)))

    @classmethod
    def iid(cls, spec: DistributionSpec, m: int) -> "SamplingPlan":
        return cls("A1", (spec,) * m)

    def all_specs(self) -> list[DistributionSpec]:
        if self.grid:
            return [s for row in self.specs for s in row]
        return list(self.specs)

    @property
    def sigma_min(self) -> float:
        return math.sqrt(min(s.variance for s in self.distinct))

    @property
    def mu_min(self) -> float:
        return min(s.mean for s in self.distinct)

    def check_shape(self, n: int, m: int) -> None:
        if self.mode == "A1":
            if len(self.specs) != m:
                raise ValueError(f"A1 plan has {len(self.specs)} item specs but m={m}")
        elif self.grid:
            if (len(self.specs), len(self.specs[0])) != (n, m):
                raise ValueError(f"A2 grid is {len(self.specs)}x{len(self.specs[0])}, need {n}x{m}")
        elif len(self.specs) != n:
            raise ValueError(f"A2 plan has {len(self.specs)} player specs but n={n}")

    def spec_grid(self, n: int, m: int) -> list[list[DistributionSpec]]:
        self.check_shape(n, m)
        if self.mode == "A1":
            return [list(self.specs) for _ in range(n)]
        if self.grid:
            return [list(r) for r in self.specs]
        return [[s] * m for s in self.specs]


def sample_matrix(plan: SamplingPlan, gs: GroupStructure, m: int, rng: RngStream) -> UtilityMatrix:
    """Draw one instance.

    Entries governed by the same spec are drawn as one block, in order of
    the spec's first appearance, and scattered row-major into place.
    """
    n = gs.n
    plan.check_shape(n, m)
    gen = rng.generator()
    distinct = plan.distinct
    if len(distinct) == 1:
        values = distinct[0].sample(gen, n * m).reshape(n, m)
        return UtilityMatrix(values)
    grid = plan.spec_grid(n, m)
    index = {s: k for k, s in enumerate(distinct)}
    labels = np.array([[index[s] for s in row] for row in grid])
    values = np.empty((n, m))
    for k, spec in enumerate(distinct):
        mask = labels == k
        count = int(mask.sum())
        if count:
            values[mask] = spec.sample(gen, count)
    return UtilityMatrix(values)
