"""Structuring an arbitrary instance, and undoing it on a packing.

``reduce`` picks a size scale (the pivot w) whose band of item sizes
[eps^(w+1), eps^w) carries the least total size.  Groups with the most items
at or above that band keep their cap; in every other group the items of
size >= eps^w move into one union group with an effectively unbounded cap.
After that only a bounded number of groups hold items of size >= eps^2.

``reconstruct`` maps a packing of the reduced instance back: union-group
items are redistributed by linear shifting (``fill``) so that each bin
respects the original caps, medium items of the relaxed groups and any
light items that still break a cap are repacked with the small-item greedy.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import ConstantSet, Group, Instance, Packing, constants, is_structured, parse_rational
from .greedy import greedy


@dataclass
class ReductionMeta:
    pivot: int
    heavy: frozenset  # size >= eps^w
    medium: frozenset  # eps^(w+1) <= size < eps^w
    light: frozenset
    large_groups: tuple  # original group ids that keep their cap
    small_groups: tuple
    union: tuple  # heavy items of small groups, ids ascending (largest first)
    union_gid: int
    omega: frozenset  # medium items of small groups
    beta: object
    blocks: tuple  # the union split into blocks of equal length, largest first

    def block_of(self):
        return {i: n for n, block in enumerate(self.blocks) for i in block}


def pivot_range(eps: Fraction):
    return range(2, int(1 / eps) + 2)


def band(inst: Instance, eps: Fraction, i: int) -> tuple:
    lo, hi = eps ** (i + 1), eps ** i
    return tuple(j for j in inst.items if lo <= inst.sizes[j] < hi)


def minimal_pivot(inst: Instance, eps) -> int:
    """The band index with least total size; ties go to the smallest index."""
    eps = parse_rational(eps)
    return min(pivot_range(eps), key=lambda i: (inst.total(band(inst, eps, i)), i))


def union_blocks(union, beta) -> tuple:
    """Consecutive blocks of ceil(|union| / beta) items, the last one shorter."""
    if not union:
        return ()
    width = math.ceil(Fraction(len(union)) / beta)
    return tuple(tuple(union[p : p + width]) for p in range(0, len(union), width))


def reduce(inst: Instance, eps, consts: ConstantSet | None = None):
    """(structured instance, ReductionMeta); items and sizes are unchanged."""
    consts = consts if consts is not None else constants(parse_rational(eps))
    eps = consts.epsilon
    w = minimal_pivot(inst, eps)
    heavy = frozenset(i for i in inst.items if inst.sizes[i] >= eps ** w)
    medium = frozenset(band(inst, eps, w))
    light = frozenset(inst.items) - heavy - medium

    groups = inst.sorted_groups()
    count = {g.gid: sum(1 for i in g.members if i in heavy or i in medium) for g in groups}
    ranked = sorted(count, key=lambda gid: (-count[gid], gid))
    kappa = consts.kappa(w, len(ranked))
    large = tuple(sorted(ranked[:kappa]))
    small = tuple(sorted(ranked[kappa:]))

    union = tuple(sorted(i for gid in small for i in inst.groups[gid].members if i in heavy))
    omega = frozenset(i for gid in small for i in inst.groups[gid].members if i in medium)
    union_gid = max(inst.groups, default=-1) + 1
    new_groups = [inst.groups[gid] for gid in large]
    for gid in small:
        g = inst.groups[gid]
        rest = tuple(i for i in g.members if i not in heavy)
        if rest:
            new_groups.append(Group(gid, rest, g.k))
    if union:
        new_groups.append(Group(union_gid, union, len(union) + 1))
    reduced = inst.with_groups(new_groups)
    beta = consts.beta(w)
    meta = ReductionMeta(w, heavy, medium, light, large, small, union, union_gid, omega, beta, union_blocks(union, beta))
    assert is_structured(reduced, consts), "reduced instance is not structured"
    return reduced, meta


def check_fill(inst: Instance, meta: ReductionMeta, packing, filled, rest) -> list:
    """The two exact Fill conditions plus the partition property."""
    problems = []
    placed = [i for b in filled for i in b] + list(rest)
    if sorted(placed) != sorted(meta.union):
        problems.append("fill output is not a partition of the union group")
    block = meta.block_of()
    for n, (a, b) in enumerate(zip(packing.bins, filled)):
        for j in range(len(meta.blocks)):
            here = sum(1 for i in b if block[i] == j)
            if j == 0 and here:
                problems.append(f"bin {n} received items of the first block")
            if j > 0 and here > sum(1 for i in a if block.get(i) == j - 1):
                problems.append(f"bin {n} received too many items of block {j}")
        for gid in {inst.group_id[i] for i in b}:
            if sum(1 for i in b if inst.group_id[i] == gid) > inst.groups[gid].k:
                problems.append(f"bin {n} exceeds group {gid}")
    return problems


def fill(inst: Instance, meta: ReductionMeta, packing: Packing):
    """(B_1..B_m, R): each bin takes union items of the next smaller block,
    at most as many as it held of the block before, within original caps."""
    bins = [list(b) for b in packing.bins]
    filled = [[] for _ in bins]
    rest = set(meta.union)
    block = meta.block_of()
    # slots[i][j]: how many items of block j bin i may still receive
    slots = [[0] * len(meta.blocks) for _ in bins]
    for n, a in enumerate(bins):
        for i in a:
            if i in block and block[i] + 1 < len(meta.blocks):
                slots[n][block[i] + 1] += 1
    used = [dict() for _ in bins]
    moved = True
    while moved:
        moved = False
        for j in range(1, len(meta.blocks)):
            for n in range(len(bins)):
                for item in meta.blocks[j]:
                    if item not in rest or slots[n][j] == 0:
                        continue
                    gid = inst.group_id[item]
                    if used[n].get(gid, 0) >= inst.groups[gid].k:
                        continue
                    filled[n].append(item)
                    rest.discard(item)
                    slots[n][j] -= 1
                    used[n][gid] = used[n].get(gid, 0) + 1
                    moved = True
    return [tuple(sorted(b)) for b in filled], tuple(sorted(rest))


def discard_set(inst: Instance, meta: ReductionMeta, bins) -> list:
    """Per bin, the light items dropped to restore original caps: smallest
    items first until the group fits."""
    out = []
    for b in bins:
        dropped = []
        for gid in sorted({inst.group_id[i] for i in b}):
            members = [i for i in b if inst.group_id[i] == gid]
            excess = len(members) - inst.groups[gid].k
            if excess <= 0:
                continue
            lights = sorted((i for i in members if i in meta.light), key=lambda i: (inst.sizes[i], -i))
            assert len(lights) >= excess, f"cannot restore cap of group {gid}"
            dropped.extend(lights[:excess])
        out.append(tuple(sorted(dropped)))
    return out


def reconstruct(inst: Instance, eps, meta: ReductionMeta, packing: Packing, report=None) -> Packing:
    """A packing of the original instance from one of the reduced instance."""
    eps = parse_rational(eps)
    filled, rest = fill(inst, meta, packing)
    strip = set(meta.union) | meta.omega
    bins = [tuple(sorted([i for i in a if i not in strip] + list(b))) for a, b in zip(packing.bins, filled)]
    bins += [(i,) for i in rest]
    dropped = discard_set(inst, meta, bins)
    discarded = {i for d in dropped for i in d}
    extra_items = set(meta.omega) | discarded
    kept = [tuple(i for i in b if i not in extra_items) for b in bins]
    extra = greedy(inst.restrict(extra_items), eps).bins if extra_items else ()
    result = Packing(tuple(b for b in kept if b) + tuple(extra))
    if report is not None:
        report["filled"] = filled
        report["rest"] = rest
        report["discarded"] = tuple(sorted(discarded))
        report["greedy_bins"] = len(extra)
    return result
