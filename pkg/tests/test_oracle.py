import random
from fractions import Fraction as F

from hypothesis import given

from bpp_matroid.core import make_instance, validate_packing
from bpp_matroid.oracle import CAP_EXCEEDED, exact_opt, first_fit_decreasing
from conftest import instances
from oracles import brute_force_opt


def test_exact_small_examples():
    assert exact_opt(make_instance(["3/5", "3/5"], [0, 0], {0: 1})).opt == 2
    assert exact_opt(make_instance(["2/5", "2/5"], [0, 1], {0: 1, 1: 1})).opt == 1
    assert exact_opt(make_instance([])).opt == 0


def test_six_thirds_with_cap_two():
    inst = make_instance([F(1, 3) + F(1, 100)] * 6, [0] * 6, {0: 2})
    res = exact_opt(inst)
    assert res.solved and res.opt == 3 == brute_force_opt(inst)
    assert validate_packing(inst, res.packing) == []


def test_ffd_examples():
    assert first_fit_decreasing(make_instance(["1/2"])).bins == ((1,),)
    inst = make_instance(["3/5", "3/5", "2/5", "2/5"], [0, 1, 2, 3], {g: 1 for g in range(4)})
    packing = first_fit_decreasing(inst)
    assert packing.bins == ((1, 3), (2, 4))
    inst = make_instance(["1/10"] * 3, [0] * 3, {0: 1})
    assert len(first_fit_decreasing(inst)) == 3


def test_node_limit_reports_partial_status():
    rng = random.Random(0)
    sizes = [F(rng.randint(20, 45), 100) for _ in range(40)]
    inst = make_instance(sizes, [i % 7 for i in range(40)], {g: 2 for g in range(7)})
    res = exact_opt(inst, node_limit=5)
    assert res.status == CAP_EXCEEDED and res.opt is None
    assert res.lower_bound <= len(res.packing)
    assert validate_packing(inst, res.packing) == []


@given(instances(n_max=8, groups_max=3, k_max=3, denom=12))
def test_exact_matches_brute_force(inst):
    res = exact_opt(inst)
    assert res.solved
    assert res.opt == brute_force_opt(inst) == len(res.packing)
    assert validate_packing(inst, res.packing) == []


@given(instances(n_max=12, denom=30))
def test_ffd_is_valid_and_not_below_optimum(inst):
    packing = first_fit_decreasing(inst)
    assert validate_packing(inst, packing) == []
    if len(inst.items) <= 8:
        assert len(packing) >= brute_force_opt(inst)
