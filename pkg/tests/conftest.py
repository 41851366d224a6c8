import itertools

import numpy as np
from hypothesis import strategies as st

from groupfair.model import Allocation, GroupStructure, UtilityMatrix, utility_of_bundle


@st.composite
def instances(draw, max_groups=3, max_size=3, max_items=6):
    """(UtilityMatrix, GroupStructure) with small dimensions."""
    g = draw(st.integers(2, max_groups))
    sizes = tuple(draw(st.lists(st.integers(1, max_size), min_size=g, max_size=g)))
    n = sum(sizes)
    m = draw(st.integers(1, max_items))
    flat = draw(st.lists(st.floats(0.0, 1.0, allow_nan=False, allow_subnormal=False), min_size=n * m, max_size=n * m))
    return UtilityMatrix(np.array(flat).reshape(n, m)), GroupStructure(sizes)


@st.composite
def instance_with_allocation(draw, **kw):
    u, gs = draw(instances(**kw))
    alloc = draw(st.lists(st.integers(0, gs.g - 1), min_size=u.m, max_size=u.m))
    return u, gs, Allocation(alloc, gs.g)


def all_allocations(g, m):
    for combo in itertools.product(range(g), repeat=m):
        yield Allocation(combo, g)


def naive_envy_free(u, gs, alloc):
    """Definition-level check, one player and one bundle at a time."""
    for i in range(gs.n):
        own = utility_of_bundle(u, i, alloc.bundles[gs.group_of(i)])
        for k in range(gs.g):
            if utility_of_bundle(u, i, alloc.bundles[k]) > own:
                return False
    return True
