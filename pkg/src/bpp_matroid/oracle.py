"""Ground truth for small instances: exact branch and bound, and FFD."""

import math
import time
from dataclasses import dataclass
from fractions import Fraction

from .core import Instance, Packing, cardinality_bound

OPTIMAL = "optimal"
CAP_EXCEEDED = "cap exceeded"


def first_fit_decreasing(inst: Instance) -> Packing:
    """Each item, largest first, goes to the first bin with room and group capacity."""
    loads = []
    counts = []
    bins = []
    for item in inst.items:  # ids are already in non-increasing size order
        s = inst.sizes[item]
        g = inst.group_id[item]
        k = inst.groups[g].k
        for b in range(len(bins)):
            if loads[b] + s <= 1 and counts[b].get(g, 0) < k:
                break
        else:
            bins.append([])
            loads.append(Fraction(0))
            counts.append({})
            b = len(bins) - 1
        bins[b].append(item)
        loads[b] += s
        counts[b][g] = counts[b].get(g, 0) + 1
    return Packing(tuple(tuple(b) for b in bins))


@dataclass
class ExactResult:
    status: str
    opt: int | None
    packing: Packing | None
    nodes: int
    lower_bound: int

    @property
    def solved(self):
        return self.status == OPTIMAL


def exact_opt(inst: Instance, node_limit=2_000_000, time_limit=None, lower_bound=0) -> ExactResult:
    """Minimum number of bins by branch and bound.

    The largest unpacked item goes into each open bin that admits it (bins
    with identical load and identical group counts are tried once) or into
    a new bin.
    ``lower_bound`` may pass an extra valid bound such as an LP value.
    """
    items = list(inst.items)
    lb = max(math.ceil(inst.total_size()), cardinality_bound(inst), lower_bound)
    best = first_fit_decreasing(inst)
    if not items or len(best) <= lb:
        return ExactResult(OPTIMAL, len(best), best, 0, lb)
    sizes = [inst.sizes[i] for i in items]
    gids = [inst.group_id[i] for i in items]
    caps = {g: inst.groups[g].k for g in inst.groups}
    suffix = [Fraction(0)] * (len(items) + 1)
    for p in range(len(items) - 1, -1, -1):
        suffix[p] = suffix[p + 1] + sizes[p]

    best_bins = [list(b) for b in best.bins]
    best_count = len(best_bins)
    loads, counts, contents = [], [], []
    nodes = 0
    deadline = None if time_limit is None else time.monotonic() + time_limit
    aborted = False

    def search(p):
        nonlocal best_count, best_bins, nodes, aborted
        if aborted:
            return
        nodes += 1
        if nodes > node_limit or (deadline is not None and nodes % 1024 == 0 and time.monotonic() > deadline):
            aborted = True
            return
        if p == len(items):
            if len(contents) < best_count:
                best_count = len(contents)
                best_bins = [list(b) for b in contents]
            return
        # remaining size beyond the free space of open bins needs new bins
        free = len(loads) - sum(loads, Fraction(0))
        extra = max(0, math.ceil(suffix[p] - free))
        if len(loads) + extra >= best_count:
            return
        s, g = sizes[p], gids[p]
        tried = set()
        for b in range(len(loads)):
            if loads[b] + s > 1 or counts[b].get(g, 0) >= caps[g]:
                continue
            key = (loads[b], frozenset((h, n) for h, n in counts[b].items() if n))
            if key in tried:
                continue
            tried.add(key)
            loads[b] += s
            counts[b][g] = counts[b].get(g, 0) + 1
            contents[b].append(items[p])
            search(p + 1)
            contents[b].pop()
            counts[b][g] -= 1
            loads[b] -= s
            if best_count <= lb:
                return
        if len(loads) + 1 < best_count:
            loads.append(s)
            counts.append({g: 1})
            contents.append([items[p]])
            search(p + 1)
            contents.pop()
            counts.pop()
            loads.pop()

    search(0)
    packing = Packing(tuple(tuple(b) for b in best_bins))
    if aborted and best_count > lb:
        return ExactResult(CAP_EXCEEDED, None, packing, nodes, lb)
    return ExactResult(OPTIMAL, best_count, packing, nodes, lb)
