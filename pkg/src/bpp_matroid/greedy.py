"""Greedy packing of instances whose items are all small.

Each round opens one bin: it starts from a bounding subset (enough of the
smallest items of every group that would otherwise need too many bins),
fills it with further items while the bin has spare room, then swaps items
for larger ones of the same group.  The result uses at most
(1 + 2*delta) * max(s(I), V(I)) + 2 bins.
"""

from dataclasses import dataclass
from fractions import Fraction

from .core import Instance, Packing, cardinality_bound, is_configuration, parse_rational


@dataclass(frozen=True)
class BoundingContext:
    delta: Fraction
    promise: Fraction
    bounding_groups: tuple  # group ids


def promise(inst: Instance, delta) -> Fraction:
    """max{(1 + 2 delta) s(I) + 2, V(I)}."""
    return max((1 + 2 * delta) * inst.total_size() + 2, Fraction(cardinality_bound(inst)))


def bounding_context(inst: Instance, delta) -> BoundingContext:
    delta = parse_rational(delta)
    p = promise(inst, delta)
    groups = tuple(
        g.gid for g in inst.sorted_groups() if -(-len(g.members) // g.k) > p - 1
    )
    return BoundingContext(delta, p, groups)


def bounding_subset(inst: Instance, ctx: BoundingContext) -> set:
    """Union over bounding groups of the psi smallest items of the group.

    psi is the least i >= 1 with ceil((|G| - i) / k(G)) <= V(I) - 1.
    """
    v = cardinality_bound(inst)
    chosen = set()
    for gid in ctx.bounding_groups:
        g = inst.groups[gid]
        n = len(g.members)
        psi = next(i for i in range(1, n + 1) if -(-(n - i) // g.k) <= v - 1)
        # increasing size; among equal sizes the larger id counts as smaller
        ascending = sorted(g.members, key=lambda i: (inst.sizes[i], -i))
        part = ascending[:psi]
        assert len(part) <= g.k
        chosen.update(part)
    return chosen


def greedy_bound(inst: Instance, delta) -> Fraction:
    delta = parse_rational(delta)
    return (1 + 2 * delta) * max(inst.total_size(), Fraction(cardinality_bound(inst))) + 2


def _first_bin(inst: Instance, delta: Fraction) -> set:
    ctx = bounding_context(inst, delta)
    a = bounding_subset(inst, ctx)
    load = inst.total(a)
    count = {}
    for i in a:
        count[inst.group_id[i]] = count.get(inst.group_id[i], 0) + 1

    # fill: add the smallest-id item whose group still has room
    while load <= 1 - delta:
        for i in inst.items:
            if i not in a and count.get(inst.group_id[i], 0) < inst.group_of(i).k:
                break
        else:
            break
        a.add(i)
        load += inst.sizes[i]
        count[inst.group_id[i]] = count.get(inst.group_id[i], 0) + 1

    # swap: replace an item by a strictly larger one of its group
    while load <= 1 - delta:
        pair = None
        for out in sorted(a):
            g = inst.group_of(out)
            better = [y for y in g.members if y not in a and inst.sizes[y] > inst.sizes[out]]
            if better:
                pair = (out, min(better))
                break
        if pair is None:
            break
        out, y = pair
        a.discard(out)
        a.add(y)
        load += inst.sizes[y] - inst.sizes[out]
    return a


def greedy(inst: Instance, delta) -> Packing:
    """Pack ``inst`` (all sizes <= delta, 0 < delta < 1/2) bin by bin."""
    delta = parse_rational(delta)
    if not 0 < delta < Fraction(1, 2):
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    too_big = [i for i in inst.items if inst.sizes[i] > delta]
    if too_big:
        raise ValueError(f"items larger than delta={delta}: {too_big}")
    bound = greedy_bound(inst, delta)
    bins = []
    rest = inst
    while rest.items:
        if is_configuration(rest, rest.items):
            bins.append(tuple(rest.items))
            break
        a = _first_bin(rest, delta)
        assert a, "greedy made no progress"
        assert is_configuration(rest, a)
        bins.append(tuple(sorted(a)))
        rest = rest.restrict(set(rest.items) - a)
    assert len(bins) <= bound, f"greedy used {len(bins)} bins, bound {bound}"
    return Packing(tuple(bins))

