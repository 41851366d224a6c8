"""Envy-freeness predicates and the exhaustive existence oracle."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .model import Allocation, GroupStructure, UtilityMatrix, bundle_values, check_dimensions

DEFAULT_BUDGET = 10**7
_CHUNK_CELLS = 1 << 21


class CapacityError(RuntimeError):
    """The enumeration would exceed the configured budget."""

    def __init__(self, required: int, budget: int):
        self.required = required
        self.budget = budget
        super().__init__(f"enumeration needs {required} allocations, budget is {budget}")


def default_budget() -> int:
    env = os.environ.get("GROUPFAIR_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


@dataclass(frozen=True)
class EnvyReport:
    per_player_own_value: tuple[float, ...]
    per_player_max_other: tuple[float, ...]
    alpha_star: float
    is_envy_free: bool

    def to_dict(self) -> dict:
        return {
            "per_player_own_value": list(self.per_player_own_value),
            "per_player_max_other": list(self.per_player_max_other),
            "alpha_star": self.alpha_star,
            "is_envy_free": self.is_envy_free,
        }


def own_and_best_other(values: np.ndarray, gs: GroupStructure) -> tuple[np.ndarray, np.ndarray]:
    """Split ``(..., n, g)`` bundle values into own value and best other value per player."""
    n = gs.n
    own_mask = np.zeros((n, gs.g), dtype=bool)
    own_mask[np.arange(n), gs.player_to_group] = True
    own = values[..., own_mask].reshape(values.shape[:-2] + (n,))
    others = np.where(own_mask, -np.inf, values)
    return own, others.max(axis=-1)


def is_envy_free(u: UtilityMatrix, gs: GroupStructure, alloc: Allocation, eps: float = 0.0) -> EnvyReport:
    """Envy profile of ``alloc``.

    A player is envy-free when their own bundle is worth at least their best other
    bundle minus ``eps``. ``alpha_star`` is the smallest own/best-other ratio,
    with a zero denominator counting as no envy, capped at 1.
    """
    check_dimensions(u, gs, alloc)
    own, best = own_and_best_other(bundle_values(u, alloc), gs)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = np.where(best > 0.0, own / np.where(best > 0.0, best, 1.0), np.inf)
    return EnvyReport(
        per_player_own_value=tuple(own.tolist()),
        per_player_max_other=tuple(best.tolist()),
        alpha_star=float(min(1.0, ratio.min())),
        is_envy_free=bool(np.all(own >= best - eps)),
    )


def is_alpha_ef(u: UtilityMatrix, gs: GroupStructure, alloc: Allocation, alpha: float,
                eps: float = 0.0) -> bool:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    check_dimensions(u, gs, alloc)
    own, best = own_and_best_other(bundle_values(u, alloc), gs)
    # comparing against the best other bundle covers every group, own included
    return bool(np.all(own >= alpha * best - eps))


def _mixed_radix_block(start: int, stop: int, g: int, m: int) -> np.ndarray:
    """Allocations ``start..stop-1`` in lexicographic order (item 0 most significant)."""
    idx = np.arange(start, stop, dtype=np.int64)
    powers = g ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % g


def envy_free_mask(u: UtilityMatrix, gs: GroupStructure, assignments: np.ndarray,
                   eps: float = 0.0) -> np.ndarray:
    """Vectorized envy-freeness over a batch of ``(batch, m)`` assignments."""
    vals = u.values
    # (batch, n, g): per-allocation bundle values, one matmul per group
    values = np.stack([(assignments == k).astype(np.float64) @ vals.T for k in range(gs.g)], axis=-1)
    own, best = own_and_best_other(values, gs)
    return np.all(own >= best - eps, axis=-1)


def exists_envy_free(u: UtilityMatrix, gs: GroupStructure, budget: int | None = None,
                     eps: float = 0.0) -> tuple[bool, Allocation | None]:
    """Search all ``g**m`` allocations for an envy-free one.

    Enumerates in lexicographic order in vectorized blocks and stops at the
    first block containing a witness, so the reported witness is the
    lexicographically smallest. A ``False`` answer is a proof of
    non-existence for this instance.
    """
    check_dimensions(u, gs)
    budget = default_budget() if budget is None else budget
    g, m = gs.g, u.m
    total = g**m
    if total > budget:
        raise CapacityError(total, budget)
    chunk = max(1, _CHUNK_CELLS // (m * max(gs.n, g)))
    for start in range(0, total, chunk):
        block = _mixed_radix_block(start, min(total, start + chunk), g, m)
        hits = np.flatnonzero(envy_free_mask(u, gs, block, eps))
        if hits.size:
            return True, Allocation(block[hits[0]], g)
    return False, None
