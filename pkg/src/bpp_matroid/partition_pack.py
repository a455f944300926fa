"""From a good prototype to a packing.

``partition`` rounds the prototype up, takes a near-integral vertex of its
assignment polytope and turns it into a nice partition: explicit bins built
from copies of the support configurations (slots replaced by the items
assigned to them), plus per-configuration completions of small items that
still have to ride along.  ``pack`` then adds every completion to its
category's bins with the small-item greedy.

The number of copies of a configuration can be astronomically large, so a
category keeps its nonempty bins explicitly and only counts the empty ones.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .config_lp import Prototype
from .core import ConstantSet, Instance, Packing, canonical, constants, fit_threshold, is_configuration, parse_rational, within_log_bound
from .greedy import greedy
from .polytope import Config, Slot, build_polytope, fractional_bound, fractional_items, vertex_with_tight_cover


class PartitionError(AssertionError):
    pass


def _order(c):
    return (len(c), c)


def integralize(z) -> Prototype:
    """Entrywise ceiling; the norm grows by less than the support size."""
    out = Prototype({c: Fraction(math.ceil(v)) for c, v in z.items() if v > 0})
    assert out.norm() <= z.norm() + len(z)
    return out


@dataclass
class AssignmentGraph:
    """Items placed whole on a slot, and the slot copies they may fill.

    Item l on slot j is adjacent to every copy (C, j, k) with j in C and
    k < copies[C], so the graph is a disjoint union of complete bipartite
    blocks, one per slot; the copies are never listed explicitly.
    """

    on_slot: dict  # slot j -> items assigned to j
    copies: dict  # configuration -> number of copies

    @property
    def left(self):
        return sorted(i for items in self.on_slot.values() for i in items)

    def slot_capacity(self, j):
        return sum((n for c, n in self.copies.items() if j in c), 0)

    def has_edge(self, item, node):
        c, j, k = node
        return item in self.on_slot.get(j, ()) and j in c and 0 <= k < self.copies.get(c, 0)


def assignment_graph(point, copies) -> AssignmentGraph:
    on_slot = {}
    for (i, t), v in sorted(point.items(), key=lambda e: e[0][0]):
        if v == 1 and isinstance(t, Slot):
            on_slot.setdefault(t.item, []).append(i)
    return AssignmentGraph(on_slot, dict(copies))


def maximum_matching(graph: AssignmentGraph, order=None) -> dict:
    """item -> (C, j, k), covering every item of the graph.

    Copies are filled one at a time, configurations in ``order`` (default:
    canonical), each copy taking one waiting item for each of its slots.
    Within a block every copy is adjacent to every item, so this is a
    maximum matching; it also keeps the number of touched copies small.
    """
    waiting = {j: list(items) for j, items in graph.on_slot.items() if items}
    configs = list(order) if order is not None else sorted(graph.copies, key=_order)
    matching = {}
    for c in configs:
        k = 0
        limit = graph.copies.get(c, 0)
        while k < limit and any(waiting.get(j) for j in c):
            for j in c:
                if waiting.get(j):
                    matching[waiting[j].pop(0)] = (c, j, k)
            k += 1
        if not any(waiting.values()):
            break
    left = [i for items in waiting.values() for i in items]
    if left:
        raise PartitionError(f"matching misses items {left[:10]}")
    return matching


def bipartite_matching(adjacency: dict) -> dict:
    """Maximum matching by augmenting paths; ``adjacency`` maps left -> rights."""
    owner = {}

    def augment(u, seen):
        for v in adjacency[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in owner or augment(owner[v], seen):
                owner[v] = u
                return True
        return False

    for u in adjacency:
        augment(u, set())
    return {u: v for v, u in owner.items()}


def allowed_in(inst: Instance, bin_items, config) -> bool:
    """Each item of the bin maps to its own slot of ``config`` that it fits."""
    bin_items = list(bin_items)
    if len(bin_items) > len(config):
        return False
    adjacency = {
        i: [j for j in config if inst.group_id[j] == inst.group_id[i] and inst.sizes[i] <= inst.sizes[j]]
        for i in bin_items
    }
    return len(bipartite_matching(adjacency)) == len(bin_items)


@dataclass
class NicePartition:
    """Categories keyed by configuration, in the order they are emitted.

    ``families[C]`` lists the nonempty bins of the category of C, ``empty[C]``
    counts its empty bins and ``completions[C]`` is the set of items that
    still have to be added to those bins.
    """

    families: dict = field(default_factory=dict)
    empty: dict = field(default_factory=dict)
    completions: dict = field(default_factory=dict)
    fractional: tuple = ()

    @property
    def categories(self):
        return list(self.families)

    def category_size(self, c) -> int:
        return len(self.families[c]) + self.empty.get(c, 0)

    @property
    def size(self) -> int:
        return sum(self.category_size(c) for c in self.families)

    @property
    def bins(self):
        """The nonempty bins of the packing, category by category."""
        return [b for c in self.families for b in self.families[c]]

    def packed_items(self):
        return {i for b in self.bins for i in b}


def check_good_prototype(inst: Instance, z, consts: ConstantSet) -> list:
    problems = []
    if not within_log_bound(len(z), consts.support_log_cap):
        problems.append(f"support has {len(z)} configurations")
    for c in z:
        if len(c) > consts.config_cap:
            problems.append(f"configuration {c} too long")
        if not is_configuration(inst, c):
            problems.append(f"{c} is not a configuration")
    return problems


def partition(inst: Instance, z, eps, consts: ConstantSet | None = None, report=None) -> NicePartition:
    consts = consts if consts is not None else constants(parse_rational(eps))
    eps = consts.epsilon
    problems = check_good_prototype(inst, z, consts)
    if problems:
        raise PartitionError("; ".join(problems))
    zs = integralize(z)
    spec = build_polytope(inst, zs, eps)
    point = vertex_with_tight_cover(spec)
    frac = sorted(fractional_items(point))
    bound = fractional_bound(zs)
    if len(frac) > bound:
        raise PartitionError(f"{len(frac)} fractional items, more than {bound}")
    fractional = set(frac)
    integral = {k: v for k, v in point.items() if k[0] not in fractional}

    graph = assignment_graph(integral, {c: int(v) for c, v in zs.items()})
    # heavier configurations first: they are the ones the LP actually used
    order = sorted(zs, key=lambda c: (-z[c], -len(c), c))
    matching = maximum_matching(graph, order)
    if len(matching) != len(graph.left):
        raise PartitionError("matching does not cover the slot-assigned items")

    bins = {}
    for item, (c, j, k) in matching.items():
        bins.setdefault((c, k), []).append(item)
    result = NicePartition()
    for h in frac:
        key = (h,)
        result.families.setdefault(key, []).append(key)
    for c in sorted(zs, key=_order):
        used = sorted((k, tuple(sorted(b))) for (cc, k), b in bins.items() if cc == c)
        result.families.setdefault(c, []).extend(b for _, b in used)
        result.empty[c] = int(zs[c]) - len(used)
    for c in result.families:
        result.empty.setdefault(c, 0)
        result.completions[c] = ()
    on_config = {}
    for (i, t), v in integral.items():
        if isinstance(t, Config):
            assert v == 1
            on_config.setdefault(t.items, []).append(i)
    for c, items in on_config.items():
        result.completions[c] = tuple(sorted(items))
    result.fractional = tuple(frac)
    if report is not None:
        report["integralized"] = zs
        report["vertex_source"] = spec.extra.get("vertex_source")
        report["fractional"] = tuple(frac)
        report["matching"] = len(matching)
    excess = result.size - zs.norm() - len(frac)
    assert excess <= 0, "partition larger than the rounded prototype plus fractional items"
    return result


def check_nice_partition(inst: Instance, np: NicePartition, consts: ConstantSet) -> list:
    """Every condition of a nice partition, re-verified from scratch."""
    eps = consts.epsilon
    problems = []
    if not within_log_bound(len(np.families), consts.partition_log_cap()):
        problems.append(f"{len(np.families)} categories")
    seen = {}
    for c, family in np.families.items():
        if not is_configuration(inst, c):
            problems.append(f"category key {c} is not a configuration")
            continue
        if np.empty.get(c, 0) < 0:
            problems.append(f"category {c} has a negative empty count")
        for b in family:
            if not is_configuration(inst, b):
                problems.append(f"bin {b} is not a configuration")
            if not allowed_in(inst, b, c):
                problems.append(f"bin {b} is not allowed in {c}")
            for i in b:
                if i in seen:
                    problems.append(f"item {i} packed twice")
                seen[i] = ("bin", c)
    for c, d in np.completions.items():
        if c not in np.families:
            problems.append(f"completion of unknown category {c}")
            continue
        size = np.category_size(c)
        for i in d:
            if i in seen:
                problems.append(f"item {i} both {seen[i][0]} and in completion of {c}")
            seen[i] = ("completion", c)
        limit = fit_threshold(inst, c, eps)
        if any(inst.sizes[i] > limit for i in d):
            problems.append(f"completion of {c} has items that do not fit")
        if inst.total(d) > (1 - inst.total(c)) * size:
            problems.append(f"completion of {c} exceeds the free space of its bins")
        for g in {inst.group_id[i] for i in d}:
            n = sum(1 for i in d if inst.group_id[i] == g)
            used = sum(1 for j in c if inst.group_id[j] == g)
            if n > size * (inst.groups[g].k - used):
                problems.append(f"completion of {c} exceeds group {g}")
    missing = [i for i in inst.items if i not in seen]
    if missing:
        problems.append(f"items neither packed nor in a completion: {missing[:10]}")
    return problems


def residual_instance(inst: Instance, config, items) -> Instance:
    """Items of a completion, sizes scaled to the free space of ``config``
    and group caps reduced by the slots ``config`` already uses."""
    items = canonical(items)
    free = 1 - inst.total(config)
    if items and free <= 0:
        raise PartitionError(f"completion of full configuration {config}")
    caps = {}
    for g in {inst.group_id[i] for i in items}:
        caps[g] = inst.groups[g].k - sum(1 for j in config if inst.group_id[j] == g)
    return inst.restrict(items, scale=free if free != 1 else None, caps=caps)


def add_bins(base, extra):
    """Element-wise union, the longer tuple's tail kept as is."""
    out = [tuple(b) for b in base]
    for n, b in enumerate(extra):
        if n < len(out):
            out[n] = tuple(sorted(out[n] + tuple(b)))
        else:
            out.append(tuple(b))
    return out


def pack(inst: Instance, np: NicePartition, eps, report=None) -> Packing:
    """Add each completion to its category's bins; empty bins are dropped."""
    eps = parse_rational(eps)
    bins = []
    counts = {}
    for c in np.families:
        family = np.families[c]
        t = np.category_size(c)
        d = np.completions.get(c, ())
        extra = greedy(residual_instance(inst, c, d), eps).bins if d else ()
        merged = add_bins(family, extra)
        used = max(t, len(extra))
        if used > (1 + 2 * eps) * t + 2:
            raise PartitionError(f"category {c} needs {used} bins")
        counts[c] = (t, len(extra))
        bins.extend(b for b in merged if b)
    if report is not None:
        report["category_counts"] = counts
    return Packing(tuple(bins))
