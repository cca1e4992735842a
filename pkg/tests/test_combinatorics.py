import itertools
from collections import Counter
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xifreeze.combinatorics import (
    CollisionType,
    FrozenPartition,
    SetPartition,
    apply_collision,
    as_partition,
    bell,
    collision_count,
    compositions,
    enumerate_assignments,
    enumerate_collision_types,
    enumerate_collisions,
    enumerate_frozen_partitions,
    enumerate_set_partitions,
    enumeration_cap,
    integer_partitions,
    merge_count,
    restrict,
    shape,
    shape_multiplicity,
)

PARTITION_COUNTS = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]


def test_integer_partitions_counts():
    for n, count in enumerate(PARTITION_COUNTS):
        parts = list(integer_partitions(n))
        assert len(parts) == count
        assert len(set(parts)) == count
        assert all(sum(p) == n and list(p) == sorted(p, reverse=True) for p in parts)


def test_integer_partitions_order():
    assert list(integer_partitions(4)) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]


def test_compositions_count():
    for n in range(1, 8):
        assert len(set(compositions(n))) == 2 ** (n - 1)


def test_bell_numbers():
    assert [bell(n) for n in range(8)] == [1, 1, 2, 5, 15, 52, 203, 877]
    for n in range(1, 7):
        assert len(enumerate_set_partitions(n)) == bell(n)


def test_shape_multiplicity_matches_enumeration():
    for n in range(1, 8):
        tally = Counter(p.shape() for p in enumerate_set_partitions(n))
        for lam in integer_partitions(n):
            assert tally[lam] == shape_multiplicity(lam)


def test_shape_multiplicity_examples():
    assert shape_multiplicity((2, 1)) == 3
    assert shape_multiplicity((2, 2)) == 3
    assert shape_multiplicity((1, 1, 1)) == 1


def test_set_partition_canonical_form():
    p = SetPartition.from_blocks([(3, 1), (2,)])
    q = SetPartition.from_blocks([(2,), (1, 3)])
    assert p == q
    assert p.blocks == ((1, 3), (2,))
    assert p.labels() == (0, 1, 0)
    assert SetPartition.from_labels("aba") == p


def test_set_partition_rejects_bad_blocks():
    with pytest.raises(ValueError):
        SetPartition.from_blocks([(1, 2), (2, 3)])
    with pytest.raises(ValueError):
        SetPartition.from_blocks([(1, 3)], n=3)


def test_restrict():
    p = SetPartition.from_blocks([(1, 4), (2, 3)])
    assert restrict(p, 3) == SetPartition.from_blocks([(1,), (2, 3)])
    assert restrict(p, 1) == SetPartition.from_blocks([(1,)])
    with pytest.raises(ValueError):
        restrict(p, 5)
    fp = FrozenPartition(4, (((1, 4), True), ((2, 3), False)))
    r = restrict(fp, 2)
    assert r.frozen_blocks == ((1,),) and r.active_blocks == ((2,),)


def test_shape_of_frozen_partition():
    fp = FrozenPartition(4, (((1, 4), True), ((2,), False), ((3,), False)))
    assert shape(fp) == (2, 1, 1)
    assert shape(SetPartition.from_blocks([(1,), (2, 3, 4)])) == (3, 1)


def test_enumerate_set_partitions_cap(monkeypatch):
    with pytest.raises(ValueError):
        enumerate_set_partitions(enumeration_cap() + 1)
    monkeypatch.setenv("XIFREEZE_MAX_N", "3")
    assert enumeration_cap() == 3
    with pytest.raises(ValueError):
        enumerate_set_partitions(4)


def test_frozen_partition_count():
    # each block of each set partition is independently frozen or active
    for n in range(1, 5):
        expected = sum(2 ** len(p.blocks) for p in enumerate_set_partitions(n))
        assert len(enumerate_frozen_partitions(n)) == expected


def test_collision_type_canonical():
    ct = CollisionType((2, 3), 1)
    assert ct.ks == (3, 2) and ct.b == 6 and ct.r == 2
    assert str(ct) == "{3,2};1"
    assert CollisionType.parse("{3,2};1") == ct
    with pytest.raises(ValueError):
        CollisionType((1,), 0)
    with pytest.raises(ValueError):
        CollisionType.parse("3,2;1")


def test_collision_types_of_four():
    got = [str(ct) for ct in enumerate_collision_types(4)]
    assert got == ["{2};2", "{3};1", "{4};0", "{2,2};0"]
    assert enumerate_collision_types(1) == []


def test_collision_count_example():
    assert collision_count(CollisionType((3, 2), 1)) == 60


@pytest.mark.parametrize("b", range(2, 7))
def test_collision_count_by_enumeration(b):
    items = list(range(b))
    total = 0
    for ct in enumerate_collision_types(b):
        groupings = enumerate_collisions(items, ct)
        assert len(groupings) == collision_count(ct)
        total += len(groupings)
    # every set partition other than all-singletons is exactly one collision
    assert total == bell(b) - 1


@given(st.lists(st.integers(2, 4), min_size=0, max_size=3), st.integers(0, 3))
def test_merge_count_formula(ks, extra):
    b = sum(ks) + extra
    denom = factorial(extra)
    for j, l in Counter(ks).items():
        denom *= factorial(j) ** l * factorial(l)
    assert merge_count(b, ks) == factorial(b) // denom
    if ks:
        assert merge_count(sum(ks) - 1, ks) == 0


def _brute_assignments(ks, comp):
    # give each element of ks to a part, then dedupe by the multiset per part
    seen = set()
    for owners in itertools.product(range(len(comp)), repeat=len(ks)):
        got = [[] for _ in comp]
        for k, o in zip(ks, owners):
            got[o].append(k)
        if all(sum(g) <= c for g, c in zip(got, comp)):
            seen.add(tuple(tuple(sorted(g, reverse=True)) for g in got))
    return seen


def test_assignment_examples():
    assert enumerate_assignments((3, 3, 3), (6, 3)) == [((3, 3), (3,))]
    assert sorted(enumerate_assignments((2,), (2, 2))) == [((), (2,)), ((2,), ())]
    assert enumerate_assignments((4,), (3, 3)) == []


@settings(max_examples=200)
@given(
    st.lists(st.integers(2, 4), min_size=1, max_size=4),
    st.lists(st.integers(1, 7), min_size=1, max_size=4),
)
def test_assignments_match_brute_force(ks, comp):
    got = enumerate_assignments(ks, comp)
    assert len(got) == len(set(got))
    assert set(got) == _brute_assignments(ks, comp)


def test_apply_collision():
    fp = FrozenPartition.singletons(4)
    out = apply_collision(fp, [[(1,), (3,)]])
    assert out.active_blocks == ((1, 3), (2,), (4,))
    frozen = FrozenPartition(3, (((1,), True), ((2,), False), ((3,), False)))
    with pytest.raises(ValueError):
        apply_collision(frozen, [[(1,), (2,)]])
    with pytest.raises(ValueError):
        apply_collision(fp, [[(1,), (2,)], [(2,), (3,)]])


@given(st.lists(st.integers(1, 6), min_size=1, max_size=5))
def test_as_partition_is_sorted(parts):
    assert as_partition(parts) == tuple(sorted(parts, reverse=True))
