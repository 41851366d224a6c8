import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupfair.fairness import (
    CapacityError,
    exists_envy_free,
    is_alpha_ef,
    is_envy_free,
)
from groupfair.model import Allocation, GroupStructure, UtilityMatrix
from groupfair.sampling import DistributionSpec, RngStream, SamplingPlan, sample_matrix

from conftest import all_allocations, instance_with_allocation, instances, naive_envy_free


def test_one_item_two_players_envy():
    r = is_envy_free(UtilityMatrix([[0.5], [0.7]]), GroupStructure((1, 1)), Allocation([0], 2))
    assert not r.is_envy_free
    assert r.per_player_own_value == (0.5, 0.0)
    assert r.per_player_max_other == (0.0, 0.7)
    assert r.alpha_star == 0.0


def test_all_zero_is_envy_free():
    u = UtilityMatrix(np.zeros((4, 3)))
    gs = GroupStructure((2, 2))
    for a in all_allocations(2, 3):
        r = is_envy_free(u, gs, a)
        assert r.is_envy_free and r.alpha_star == 1.0


def test_diagonal_preferences_envy_free():
    u = UtilityMatrix([[.9, .1], [.8, .2], [.1, .9], [.2, .8]])
    assert is_envy_free(u, GroupStructure((2, 2)), Allocation([0, 1], 2)).is_envy_free


def test_alpha_threshold():
    # own 0.4, other bundle 0.8
    u = UtilityMatrix([[0.4, 0.8], [0.0, 0.0]])
    gs, a = GroupStructure((1, 1)), Allocation([0, 1], 2)
    assert is_alpha_ef(u, gs, a, 0.5)
    assert not is_alpha_ef(u, gs, a, 0.51)
    assert is_alpha_ef(u, gs, a, 0.0)
    assert is_envy_free(u, gs, a).alpha_star == pytest.approx(0.5)


@pytest.mark.parametrize("alpha", [-0.1, 1.5])
def test_alpha_out_of_range(alpha):
    with pytest.raises(ValueError):
        is_alpha_ef(UtilityMatrix([[0.4], [0.1]]), GroupStructure((1, 1)), Allocation([0], 2), alpha)


def test_eps_slack():
    u = UtilityMatrix([[0.5, 0.5000001], [0.0, 0.0]])
    gs, a = GroupStructure((1, 1)), Allocation([0, 1], 2)
    assert not is_envy_free(u, gs, a).is_envy_free
    assert is_envy_free(u, gs, a, eps=1e-6).is_envy_free


@given(instance_with_allocation())
def test_matches_definition_oracle(case):
    u, gs, a = case
    assert is_envy_free(u, gs, a).is_envy_free == naive_envy_free(u, gs, a)


@given(instance_with_allocation())
def test_ef_consistent_with_alpha_one_and_alpha_star(case):
    u, gs, a = case
    r = is_envy_free(u, gs, a)
    assert r.is_envy_free == is_alpha_ef(u, gs, a, 1.0)
    assert r.is_envy_free == (r.alpha_star >= 1.0)
    assert r.is_envy_free == all(o >= b for o, b in zip(r.per_player_own_value, r.per_player_max_other))


@given(instance_with_allocation(), st.floats(0, 1), st.floats(0, 1))
def test_alpha_monotone(case, a1, a2):
    u, gs, a = case
    lo, hi = sorted((a1, a2))
    if is_alpha_ef(u, gs, a, hi):
        assert is_alpha_ef(u, gs, a, lo)


@given(instance_with_allocation())
def test_ef_implies_every_alpha(case):
    u, gs, a = case
    if is_envy_free(u, gs, a).is_envy_free:
        assert all(is_alpha_ef(u, gs, a, x) for x in (0.0, 0.3, 0.9, 1.0))


@given(instance_with_allocation(), st.data())
def test_alpha_star_monotone_in_own_value(case, data):
    u, gs, a = case
    i = data.draw(st.integers(0, gs.n - 1))
    own_items = sorted(a.bundles[gs.group_of(i)])
    if not own_items:
        return
    j = data.draw(st.sampled_from(own_items))
    values = u.values.copy()
    values[i, j] = data.draw(st.floats(float(values[i, j]), 1.0))
    before = is_envy_free(u, gs, a).alpha_star
    after = is_envy_free(UtilityMatrix(values), gs, a).alpha_star
    assert after >= before


@given(instance_with_allocation(), st.data())
def test_row_scaling_preserves_player_view(case, data):
    u, gs, a = case
    i = data.draw(st.integers(0, gs.n - 1))
    c = data.draw(st.sampled_from([0.5, 0.25, 0.125]))  # exact binary scaling
    values = u.values.copy()
    values[i] *= c
    r1 = is_envy_free(u, gs, a)
    r2 = is_envy_free(UtilityMatrix(values), gs, a)
    ok1 = r1.per_player_own_value[i] >= r1.per_player_max_other[i]
    ok2 = r2.per_player_own_value[i] >= r2.per_player_max_other[i]
    assert ok1 == ok2


def test_exists_one_item_two_players():
    assert exists_envy_free(UtilityMatrix([[0.3], [0.6]]), GroupStructure((1, 1))) == (False, None)


def test_exists_all_zero_witness_first():
    found, w = exists_envy_free(UtilityMatrix(np.zeros((3, 4))), GroupStructure((1, 1, 1)))
    assert found and w.item_to_group.tolist() == [0, 0, 0, 0]


def test_exists_diagonal():
    found, w = exists_envy_free(UtilityMatrix([[.9, .1], [.1, .9]]), GroupStructure((1, 1)))
    assert found and w.item_to_group.tolist() == [0, 1]


def test_exists_over_budget():
    u = UtilityMatrix(np.full((2, 25), 0.5))
    with pytest.raises(CapacityError) as exc:
        exists_envy_free(u, GroupStructure((1, 1)), budget=10**7)
    assert exc.value.required == 2**25


def test_exists_budget_env(monkeypatch):
    u = UtilityMatrix(np.full((2, 5), 0.5))
    monkeypatch.setenv("GROUPFAIR_BUDGET", "16")
    with pytest.raises(CapacityError):
        exists_envy_free(u, GroupStructure((1, 1)))


@settings(max_examples=100, deadline=None)
@given(instances(max_groups=3, max_size=2, max_items=5))
def test_exists_matches_brute_force(case):
    u, gs = case
    witnesses = [a for a in all_allocations(gs.g, u.m) if naive_envy_free(u, gs, a)]
    found, w = exists_envy_free(u, gs)
    assert found == bool(witnesses)
    if found:
        # lexicographically first witness, and sound
        assert w == witnesses[0]
        assert is_envy_free(u, gs, w).is_envy_free


def test_exists_across_chunk_boundaries(monkeypatch):
    import groupfair.fairness as f
    monkeypatch.setattr(f, "_CHUNK_CELLS", 7)
    gs = GroupStructure((2, 2))
    plan = SamplingPlan.iid(DistributionSpec.uniform(), 6)
    for t in range(30):
        u = sample_matrix(plan, gs, 6, RngStream(12, t))
        witnesses = [a for a in all_allocations(2, 6) if naive_envy_free(u, gs, a)]
        found, w = exists_envy_free(u, gs)
        assert found == bool(witnesses)
        if found:
            assert w == witnesses[0]


def test_pigeonhole_single_player_groups():
    # m < n with one player per group: some player gets nothing but values items positively
    for g, m in [(3, 2), (4, 3), (5, 2)]:
        gs = GroupStructure((1,) * g)
        plan = SamplingPlan.iid(DistributionSpec.uniform(), m)
        for t in range(200):
            u = sample_matrix(plan, gs, m, RngStream(g * 100 + m, t))
            assert exists_envy_free(u, gs) == (False, None)
