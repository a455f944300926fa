import random
from fractions import Fraction as F

import pytest

from bpp_matroid.config_lp import Prototype
from bpp_matroid.core import constants, make_instance, validate_packing
from bpp_matroid.partition_pack import (
    AssignmentGraph,
    NicePartition,
    PartitionError,
    add_bins,
    allowed_in,
    check_nice_partition,
    integralize,
    maximum_matching,
    pack,
    partition,
    residual_instance,
)
from bpp_matroid.pipeline import afptas_structured
from bpp_matroid.polytope import build_polytope, is_feasible
from oracles import random_instance

EPS = F(1, 11)


def test_integralize_examples():
    z = Prototype({(1,): F(2)})
    assert integralize(z) == z
    assert integralize(Prototype({(1,): F(3, 2)})) == {(1,): 2}
    z = Prototype({(1,): F(1, 3), (2,): F(5, 2)})
    zs = integralize(z)
    assert zs == {(1,): 1, (2,): 3}
    assert zs.norm() - z.norm() == F(7, 6) <= len(z)


def test_matching_examples():
    assert maximum_matching(AssignmentGraph({}, {})) == {}
    g = AssignmentGraph({1: [1]}, {(1,): 1})
    assert maximum_matching(g) == {1: ((1,), 1, 0)}
    g = AssignmentGraph({1: [1, 2]}, {(1,): 2})
    m = maximum_matching(g)
    assert len(m) == 2 and {k for _, _, k in m.values()} == {0, 1}
    assert all(g.has_edge(i, node) for i, node in m.items())


def test_matching_reports_shortfall():
    with pytest.raises(PartitionError):
        maximum_matching(AssignmentGraph({1: [1, 2]}, {(1,): 1}))


def test_allowed_in():
    inst = make_instance(["1/2", "1/3", "1/4"], [0, 0, 1], {0: 2, 1: 1})
    assert allowed_in(inst, (2,), (1,))
    assert not allowed_in(inst, (1,), (2,))
    assert not allowed_in(inst, (3,), (1,))
    assert allowed_in(inst, (2, 1), (1, 2))


def test_partition_empty_instance():
    np = partition(make_instance([]), Prototype(), EPS)
    assert np.size == 0 and np.bins == []


def test_partition_single_item():
    inst = make_instance(["1/2"])
    np = partition(inst, Prototype({(1,): F(1)}), EPS)
    assert np.bins == [(1,)]
    assert np.categories == [(1,)]
    assert np.completions[(1,)] == ()


def test_partition_two_copies():
    inst = make_instance(["3/5", "3/5"], [0, 0], {0: 1})
    np = partition(inst, Prototype({(1,): F(2)}), EPS)
    assert sorted(np.bins) == [(1,), (2,)]
    assert check_nice_partition(inst, np, constants(EPS)) == []


def test_residual_instance_examples():
    inst = make_instance(["1/2", "1/20", "1/30", "1/40", "1/50"], [0, 1, 1, 1, 2], {0: 1, 1: 3, 2: 1})
    same = residual_instance(inst, (), (2, 5))
    assert same.sizes == {2: F(1, 20), 5: F(1, 50)}
    assert same.groups[1].k == 3
    half = residual_instance(inst, (1,), (2,))
    assert half.sizes[2] == F(1, 10)
    capped = residual_instance(inst, (2, 3), (4,))
    assert capped.groups[1].k == 1
    full = make_instance(["1/2", "1/2", "1/100"], [0, 1, 2], {0: 1, 1: 1, 2: 1})
    with pytest.raises(PartitionError):
        residual_instance(full, (1, 2), (3,))


def test_add_bins():
    assert add_bins([(1,), (2,)], [(5,)]) == [(1, 5), (2,)]
    assert add_bins([(1,)], [(5,), (6,)]) == [(1, 5), (6,)]


def test_pack_without_completions():
    inst = make_instance(["1/2", "1/3"], [0, 1], {0: 1, 1: 1})
    np = NicePartition({(1,): [(1,)], (2,): [(2,)]}, {(1,): 0, (2,): 0}, {(1,): (), (2,): ()})
    assert pack(inst, np, EPS).bins == ((1,), (2,))


def test_pack_completion_rides_along():
    # residual sizes (1/20)/(1/2) = 1/10, residual cap 3: one greedy bin,
    # merged into the only bin of the category
    eps = F(1, 4)
    inst = make_instance(["1/2", "1/20", "1/20", "1/20"], [0, 1, 1, 1], {0: 1, 1: 3})
    np = NicePartition({(1,): [(1,)]}, {(1,): 0}, {(1,): (2, 3, 4)})
    assert check_nice_partition(inst, np, constants(eps, test_mode=True)) == []
    assert pack(inst, np, eps).bins == ((1, 2, 3, 4),)


def test_pack_overflow_stays_within_bound():
    # eps = 2/5; ten items of size 1/10 beside a 1/2 item, residual size 1/5.
    # Greedy fills a bin while it holds at most 3/5, so bins of 4/5, 4/5,
    # 2/5: three bins for a category of two (one nonempty, one empty).
    eps = F(2, 5)
    inst = make_instance(["1/2"] + ["1/10"] * 10, [0] + [1] * 10, {0: 1, 1: 10})
    np = NicePartition({(1,): [(1,)]}, {(1,): 1}, {(1,): tuple(range(2, 12))})
    report = {}
    assert check_nice_partition(inst, np, constants(eps, test_mode=True)) == []
    packing = pack(inst, np, eps, report)
    assert report["category_counts"][(1,)] == (2, 3)
    assert 3 <= (1 + 2 * eps) * 2 + 2
    assert validate_packing(inst, packing) == []


def _pipeline_stats(inst, consts):
    stats = {}
    packing, _ = afptas_structured(inst, consts.epsilon, consts, stats=stats)
    assert validate_packing(inst, packing) == []
    return stats


def test_pipeline_partitions_are_nice():
    # afptas_structured re-checks the nice partition and the pack bound on
    # every run; here we only need it to go through on varied inputs
    rng = random.Random(21)
    consts = constants(EPS)
    for _ in range(25):
        inst = random_instance(rng, n_max=10, denom=60)
        _pipeline_stats(inst, consts)


def test_small_item_rides_on_configuration():
    # no slot is left for the 1/200 item, so the vertex puts it on {1}
    inst = make_instance(["1/2", "1/200"], [0, 1], {0: 1, 1: 1})
    report = {}
    np = partition(inst, Prototype({(1,): F(1)}), EPS, constants(EPS), report)
    assert np.completions == {(1,): (2,)}
    assert report["matching"] == 1
    assert pack(inst, np, EPS).bins == ((1, 2),)


def large_only_prototype(rng):
    """Large items one per configuration, small items left for the vertex
    to place next to them."""
    nl, ns = rng.randint(1, 4), rng.randint(1, 8)
    sizes = [F(rng.randint(20, 70), 100) for _ in range(nl)]
    sizes += [F(1, rng.randint(130, 400)) for _ in range(ns)]
    groups = [rng.randrange(3) for _ in sizes]
    inst = make_instance(sizes, groups, {g: rng.randint(1, 3) for g in set(groups)})
    z = Prototype({(i,): F(1) for i in inst.items if i <= nl})
    if rng.random() < 0.5:
        z.add((), F(1))
    return inst, z


def test_completions_pack_within_bound():
    rng = random.Random(2)
    consts = constants(EPS)
    ridden = 0
    for _ in range(100):
        inst, z = large_only_prototype(rng)
        if not is_feasible(build_polytope(inst, z, EPS)):
            continue
        np = partition(inst, z, EPS, consts)
        assert check_nice_partition(inst, np, consts) == []
        report = {}
        packing = pack(inst, np, EPS, report)
        assert validate_packing(inst, packing) == []
        for c, (t, got) in report["category_counts"].items():
            assert got <= (1 + 2 * EPS) * t + 2
        ridden += any(np.completions.values())
    assert ridden > 30
