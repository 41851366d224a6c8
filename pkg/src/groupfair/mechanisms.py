"""Allocation mechanisms.

Exact ties between groups are broken toward the lowest group index. Sums are
compared with plain float comparison; no tolerance is applied.
"""

from __future__ import annotations

import numpy as np

from .model import Allocation, GroupStructure, UtilityMatrix, check_dimensions
from .sampling import RngStream

UNEQUAL_SIZES_WARNING = "unequal group sizes: the high-probability envy-freeness guarantee assumes equal sizes"


class UnsupportedConfigurationError(ValueError):
    pass


def group_sums(u: UtilityMatrix, gs: GroupStructure) -> np.ndarray:
    """g x m matrix of per-group total utility for each item."""
    check_dimensions(u, gs)
    return np.add.reduceat(u.values, gs.starts, axis=0)


def greedy_total(u: UtilityMatrix, gs: GroupStructure) -> Allocation:
    """Give each item to the group with the largest summed utility for it.

    The result maximizes social welfare. Accepts unequal group sizes but
    records a warning on the allocation, since the existence guarantee for
    this rule is only known for equal sizes.
    """
    sums = group_sums(u, gs)
    # argmax returns the first maximal index, i.e. the lowest-index tie-break
    choice = np.argmax(sums, axis=0)
    warnings = () if gs.is_equal_size else (UNEQUAL_SIZES_WARNING,)
    return Allocation(choice, gs.g, warnings=warnings)


def greedy_average(u: UtilityMatrix, gs: GroupStructure) -> Allocation:
    """Two-group rule: give each item to the group with the higher mean utility."""
    if gs.g != 2:
        raise UnsupportedConfigurationError(f"greedy_average supports exactly 2 groups, got {gs.g}")
    sums = group_sums(u, gs)
    if gs.is_equal_size:
        # dividing both sides by the same size can only merge near-ties
        avg = sums
    else:
        avg = sums / np.array(gs.group_sizes, dtype=np.float64)[:, None]
    return Allocation((avg[1] > avg[0]).astype(np.int64), 2)


def random_assignment(m: int, g: int, rng: RngStream) -> Allocation:
    """Assign every item independently and uniformly at random.

    Never reads utilities, which is what makes it truthful.
    """
    if m < 1:
        raise ValueError("random_assignment: need m >= 1")
    if g < 2:
        raise ValueError("random_assignment: need g >= 2")
    return Allocation(rng.generator().integers(0, g, size=m), g)


MECHANISMS = {
    "greedy_total": greedy_total,
    "greedy_average": greedy_average,
}
