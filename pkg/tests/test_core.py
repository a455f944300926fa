import math
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpp_matroid.core import (
    InstanceError,
    Packing,
    cardinality_bound,
    constants,
    fit_config,
    fit_slot,
    instance_to_json,
    is_configuration,
    make_instance,
    parse_rational,
    sizes_non_increasing,
    validate_instance,
    validate_packing,
)
from conftest import instances
from oracles import fits


def raw(items, groups):
    return {
        "items": [{"id": i, "size": s, "group": g} for i, s, g in items],
        "groups": [{"id": g, "k": k} for g, k in groups],
    }


def test_validate_sorts_by_size():
    inst = validate_instance(raw([(10, "1/3", 0), (11, "1/2", 0), (12, "1/2", 0)], [(0, 2)]))
    assert inst.items == (1, 2, 3)
    assert [inst.sizes[i] for i in inst.items] == [F(1, 2), F(1, 2), F(1, 3)]
    # equal sizes keep input order
    assert [inst.labels[i] for i in inst.items] == [11, 12, 10]


def test_validate_rejects_large_size():
    with pytest.raises(InstanceError) as err:
        validate_instance(raw([(1, "3/2", 0)], [(0, 1)]))
    assert any("size out of (0,1]" in e for e in err.value.errors)


def test_validate_rejects_zero_size():
    with pytest.raises(InstanceError):
        validate_instance(raw([(1, "0", 0)], [(0, 1)]))


def test_validate_rejects_item_in_two_groups():
    data = {
        "items": [{"id": 1, "size": "1/2"}],
        "groups": [{"id": 0, "k": 1, "members": [1]}, {"id": 1, "k": 1, "members": [1]}],
    }
    with pytest.raises(InstanceError) as err:
        validate_instance(data)
    assert any("not a partition" in e for e in err.value.errors)


def test_validate_collects_every_error():
    data = raw([(1, "2", 0), (1, "1/2", 0), (2, "1/2", 7)], [(0, 0)])
    with pytest.raises(InstanceError) as err:
        validate_instance(data)
    text = " ".join(err.value.errors)
    assert "size out of" in text and "duplicate item id" in text and "unknown group" in text and "k must be" in text


def test_decimal_sizes_are_exact():
    assert parse_rational("0.25") == F(1, 4)
    assert parse_rational(0.1) == F(1, 10)
    assert parse_rational("2/6") == F(1, 3)


def test_json_round_trip():
    inst = make_instance(["1/2", "1/3", "1/5"], [0, 1, 1], {0: 1, 1: 2})
    again = validate_instance(instance_to_json(inst))
    assert again.sizes == inst.sizes and again.group_id == inst.group_id


def test_is_configuration_examples():
    inst = make_instance(["3/5", "3/5"], [0, 1], {0: 1, 1: 1})
    assert is_configuration(inst, ())
    assert not is_configuration(inst, (1, 2))
    small = make_instance(["1/4", "1/4"], [0, 0], {0: 1})
    assert not is_configuration(small, (1, 2))
    with pytest.raises(KeyError):
        is_configuration(small, (9,))


def test_cardinality_bound_examples():
    assert cardinality_bound(make_instance(["1/10"] * 5, [0] * 5, {0: 2})) == 3
    assert cardinality_bound(make_instance(["1/10"] * 11, [0] * 4 + [1] * 7, {0: 4, 1: 3})) == 3
    assert cardinality_bound(make_instance(["1/10"], [0], {0: 1})) == 1
    assert cardinality_bound(make_instance([])) == 0


def test_fit_slot_examples():
    inst = make_instance(["1/2", "1/3", "1/4"], [0, 0, 0], {0: 3})
    assert fit_slot(inst, 2) == {2, 3}
    assert fit_slot(inst, 1) == {1, 2, 3}
    assert fit_slot(inst, 3) == {3}


def test_fit_config_examples():
    eps = F(1, 11)
    inst = make_instance(["9/10", "1/10", "1/121", "1/120", "1/200"], [0, 1, 2, 3, 4], {g: 1 for g in range(5)})
    full = make_instance(["1/2", "1/2"], [0, 1], {0: 1, 1: 1})
    assert fit_config(full, (1, 2), eps) == frozenset()
    assert fit_config(inst, (), eps) == {i for i in inst.items if inst.sizes[i] <= F(1, 121)}
    # s(C) = 9/10: min(1/121, 1/110) = 1/121
    assert fit_config(inst, (1,), eps) == {i for i in inst.items if inst.sizes[i] <= F(1, 121)}


def test_constants_at_one_eleventh():
    c = constants(F(1, 11))
    assert c.alpha == 161051
    assert c.upsilon == 363
    assert c.K_log == pytest.approx(121 * math.log(11))
    assert c.K_log == pytest.approx(290.15, abs=0.01)


def test_constants_reject_bad_epsilon():
    with pytest.raises(ValueError):
        constants(F(1, 5))
    with pytest.raises(ValueError):
        constants(F(2, 23))
    with pytest.raises(ValueError):
        constants(F(1, 11), {"alpha": 2})
    with pytest.raises(ValueError):
        constants(F(1, 4), {"nonsense": 1}, test_mode=True)
    assert constants(F(1, 4), {"alpha": 2}, test_mode=True).alpha == 2


@given(instances())
def test_sizes_non_increasing(inst):
    assert sizes_non_increasing(inst)
    assert is_configuration(inst, ())


@given(instances(min_n=1), st.data())
def test_fit_slot_matches_definition(inst, data):
    item = data.draw(st.sampled_from(inst.items))
    got = fit_slot(inst, item)
    assert item in got
    for j in inst.items:
        same = inst.group_id[j] == inst.group_id[item]
        assert (j in got) == (same and inst.sizes[j] <= inst.sizes[item])


@given(instances(min_n=1), st.data())
def test_fit_config_antitone(inst, data):
    eps = F(1, 11)
    a = data.draw(st.sets(st.sampled_from(inst.items)))
    b = data.draw(st.sets(st.sampled_from(inst.items)))
    if inst.total(a) <= inst.total(b):
        assert fit_config(inst, b, eps) <= fit_config(inst, a, eps)


@given(instances(min_n=1), st.data())
def test_validate_packing_matches_checker(inst, data):
    labels = data.draw(st.lists(st.integers(0, 3), min_size=len(inst), max_size=len(inst)))
    bins = {}
    for item, b in zip(inst.items, labels):
        bins.setdefault(b, []).append(item)
    packing = Packing(tuple(tuple(b) for b in bins.values()))
    expected = all(fits(inst, b) for b in packing.bins)
    assert (not validate_packing(inst, packing)) == expected
    # duplicated items are always rejected
    if packing.bins:
        doubled = Packing(packing.bins + (packing.bins[0][:1],))
        assert validate_packing(inst, doubled)
