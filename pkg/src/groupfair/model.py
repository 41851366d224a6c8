"""Instances and allocations for group fair division with additive utilities.

Players are laid out contiguously by group: with ``group_sizes = (2, 3)``
players 0-1 form group 0 and players 2-4 form group 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GroupStructure:
    group_sizes: tuple[int, ...]
    player_to_group: np.ndarray = field(init=False, repr=False, compare=False)
    starts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.group_sizes)
        if len(sizes) < 2:
            raise ValueError("group_sizes: need at least 2 groups")
        if any(s < 1 for s in sizes):
            raise ValueError("group_sizes: every group needs at least one player")
        object.__setattr__(self, "group_sizes", sizes)
        lookup = np.repeat(np.arange(len(sizes)), sizes)
        object.__setattr__(self, "player_to_group", _frozen(lookup))
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        object.__setattr__(self, "starts", _frozen(starts))

    @classmethod
    def equal(cls, g: int, n_prime: int) -> "GroupStructure":
        return cls((n_prime,) * g)

    @property
    def g(self) -> int:
        return len(self.group_sizes)

    @property
    def n(self) -> int:
        return sum(self.group_sizes)

    @property
    def is_equal_size(self) -> bool:
        return len(set(self.group_sizes)) == 1

    def group_of(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise ValueError(f"player index {i} out of range 0..{self.n - 1}")
        return int(self.player_to_group[i])

    def members(self, k: int) -> range:
        if not 0 <= k < self.g:
            raise ValueError(f"group index {k} out of range 0..{self.g - 1}")
        start = int(self.starts[k])
        return range(start, start + self.group_sizes[k])


class UtilityMatrix:
    """Read-only n x m grid of utilities ``u_i(j)`` in [0, 1]."""

    __slots__ = ("values",)

    def __init__(self, values: Sequence[Sequence[float]] | np.ndarray):
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("utilities: expected a 2-d grid")
        n, m = arr.shape
        if n < 2:
            raise ValueError("utilities: need at least 2 players")
        if m < 1:
            raise ValueError("utilities: need at least 1 item")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("utilities: every entry must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("UtilityMatrix is immutable")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def __repr__(self) -> str:
        return f"UtilityMatrix(n={self.n}, m={self.m})"


class Allocation:
    """Assignment of every item to exactly one of ``g`` groups.

    ``item_to_group`` is the canonical representation; per-group bundles are
    derived once at construction. ``warnings`` carries notes from the
    producing mechanism and does not take part in equality.
    """

    __slots__ = ("item_to_group", "g", "bundles", "warnings")

    def __init__(self, item_to_group: Iterable[int] | np.ndarray, g: int,
                 warnings: tuple[str, ...] = ()):
        arr = np.array(item_to_group, dtype=np.int64).reshape(-1)
        if g < 2:
            raise ValueError("allocation: need at least 2 groups")
        if arr.size and (arr.min() < 0 or arr.max() >= g):
            raise ValueError(f"allocation: group indices must lie in 0..{g - 1}")
        object.__setattr__(self, "item_to_group", _frozen(arr))
        object.__setattr__(self, "g", int(g))
        bundles = tuple(frozenset(np.flatnonzero(arr == k).tolist()) for k in range(g))
        object.__setattr__(self, "bundles", bundles)
        object.__setattr__(self, "warnings", tuple(warnings))

    def __setattr__(self, name, value):
        raise AttributeError("Allocation is immutable")

    @property
    def m(self) -> int:
        return self.item_to_group.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Allocation):
            return NotImplemented
        return self.g == other.g and np.array_equal(self.item_to_group, other.item_to_group)

    def __hash__(self) -> int:
        return hash((self.g, self.item_to_group.tobytes()))

    def __repr__(self) -> str:
        return f"Allocation({self.item_to_group.tolist()}, g={self.g})"

    def onehot(self) -> np.ndarray:
        """m x g indicator matrix of the assignment."""
        out = np.zeros((self.m, self.g))
        out[np.arange(self.m), self.item_to_group] = 1.0
        return out


def bundle_of(alloc: Allocation, k: int) -> frozenset[int]:
    if not 0 <= k < alloc.g:
        raise ValueError(f"group index {k} out of range 0..{alloc.g - 1}")
    return alloc.bundles[k]


def utility_of_bundle(u: UtilityMatrix, i: int, bundle: Iterable[int]) -> float:
    """Additive value of ``bundle`` to player ``i``; summed left to right in item order."""
    if not 0 <= i < u.n:
        raise ValueError(f"player index {i} out of range 0..{u.n - 1}")
    row = u.values[i]
    total = 0.0
    for j in sorted(bundle):
        if not 0 <= j < u.m:
            raise ValueError(f"item index {j} out of range 0..{u.m - 1}")
        total += float(row[j])
    return total


def check_dimensions(u: UtilityMatrix, gs: GroupStructure, alloc: Allocation | None = None) -> None:
    if u.n != gs.n:
        raise ValueError(f"utilities have {u.n} rows but group_sizes sum to {gs.n}")
    if alloc is not None:
        if alloc.m != u.m:
            raise ValueError(f"allocation covers {alloc.m} items but utilities have {u.m}")
        if alloc.g != gs.g:
            raise ValueError(f"allocation has {alloc.g} groups but structure has {gs.g}")


def bundle_values(u: UtilityMatrix, alloc: Allocation) -> np.ndarray:
    """n x g matrix whose (i, k) entry is u_i(M_k)."""
    return u.values @ alloc.onehot()


def social_welfare(u: UtilityMatrix, gs: GroupStructure, alloc: Allocation) -> float:
    check_dimensions(u, gs, alloc)
    values = bundle_values(u, alloc)
    own = values[np.arange(gs.n), gs.player_to_group]
    return float(own.sum())
