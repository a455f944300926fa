"""The assignment polytope of a prototype.

Items are assigned (fractionally) to types.  A slot type ``Slot(j)`` lets an
item no larger than ``j`` and of the same group replace ``j`` in any
configuration containing it; a configuration type ``Config(C)`` lets a small
item ride along in the unused capacity of ``C``.  Constraints:

  fit:       an item may only use a type it fits
  capacity:  sum of sizes on Config(C)        <= (1 - s(C)) * x_C
  group:     items of G on Config(C)          <= x_C * (k(G) - |C & G|)
  slot:      items on Slot(j)                 <= sum of x_C over C containing j
  cover:     total assignment of every item   >= 1   (== 1 for vertices)

Only types with a positive right-hand side get variables; rows that can
never bind (given that each item's total assignment is at most 1) are left
out of the LP.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .core import Instance, fit_threshold, parse_rational
from .exact_lp import EQ, LE, LinearProgram, feasible_vertex, solve_lp

log = logging.getLogger(__name__)


class PolytopeEmpty(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class Slot:
    item: int

    def __repr__(self):
        return f"Slot({self.item})"


@dataclass(frozen=True, order=True)
class Config:
    items: tuple

    def __repr__(self):
        return f"Config({self.items})"


def type_key(t):
    return (0, t.item) if isinstance(t, Slot) else (1, len(t.items), t.items)


class AssignmentPoint(dict):
    """Sparse map (item, type) -> value in (0, 1]."""

    def set(self, item, t, value):
        if value:
            self[(item, t)] = Fraction(value)
        else:
            self.pop((item, t), None)

    def add(self, item, t, value):
        self.set(item, t, self.get((item, t), Fraction(0)) + value)

    def row_sum(self, item):
        return sum((v for (i, _), v in self.items() if i == item), Fraction(0))

    def types_of(self, item):
        return {t: v for (i, t), v in self.items() if i == item}


@dataclass
class PolytopeSpec:
    inst: Instance
    prototype: dict
    eps: Fraction
    slot_caps: dict  # item j -> sum of x_C over C containing j
    configs: list  # support configurations, canonical order
    candidates: dict  # item -> list of types it fits, in preference order
    extra: dict = field(default_factory=dict)

    def pairs(self):
        return [(i, t) for i in self.inst.items for t in self.candidates[i]]


def build_polytope(inst: Instance, x, eps) -> PolytopeSpec:
    eps = parse_rational(eps)
    configs = sorted(x, key=lambda c: (len(c), c))
    slot_caps = {}
    for c in configs:
        for j in c:
            slot_caps[j] = slot_caps.get(j, Fraction(0)) + x[c]
    thresholds = {c: fit_threshold(inst, c, eps) for c in configs}
    # a small item riding on a configuration is packed next to its items by
    # Pack, while one put in a slot takes a bin copy on its own; so riding
    # comes first, on the fullest configurations first
    by_load = sorted(configs, key=lambda c: (-inst.total(c), len(c), c))
    candidates = {}
    for i in inst.items:
        s = inst.sizes[i]
        types = [Config(c) for c in by_load if s <= thresholds[c]]
        if i in slot_caps:
            types.append(Slot(i))
        others = [j for j in inst.group_of(i).members if j != i and j in slot_caps and inst.sizes[j] >= s]
        # tightest fitting slot first
        others.sort(key=lambda j: (inst.sizes[j], -j))
        types.extend(Slot(j) for j in others)
        candidates[i] = types
    return PolytopeSpec(inst, dict(x), eps, slot_caps, configs, candidates)


class _Budget:
    """Remaining right-hand sides of the slot, capacity and group rows."""

    def __init__(self, spec: PolytopeSpec):
        inst = spec.inst
        x = spec.prototype
        self.spec = spec
        self.slot = dict(spec.slot_caps)
        self.room = {c: (1 - inst.total(c)) * x[c] for c in spec.configs}
        self.group = {}
        for c in spec.configs:
            for g in inst.groups.values():
                used = sum(1 for j in c if inst.group_id[j] == g.gid)
                self.group[(c, g.gid)] = x[c] * (g.k - used)

    def available(self, item, t):
        if isinstance(t, Slot):
            return self.slot[t.item]
        c = t.items
        s = self.spec.inst.sizes[item]
        return min(self.room[c] / s, self.group[(c, self.spec.inst.group_id[item])])

    def take(self, item, t, amount):
        if isinstance(t, Slot):
            self.slot[t.item] -= amount
        else:
            c = t.items
            self.room[c] -= amount * self.spec.inst.sizes[item]
            self.group[(c, self.spec.inst.group_id[item])] -= amount


def greedy_point(spec: PolytopeSpec, integral: bool):
    """Assign items largest first to their preferred types with room left.

    Returns a point with every row sum exactly 1, or None if some item could
    not be covered.  With ``integral`` every entry is 0 or 1.
    """
    budget = _Budget(spec)
    point = AssignmentPoint()
    for i in spec.inst.items:
        need = Fraction(1)
        for t in spec.candidates[i]:
            avail = budget.available(i, t)
            if integral:
                if avail < 1:
                    continue
                amount = Fraction(1)
            else:
                amount = min(avail, need)
                if amount <= 0:
                    continue
            budget.take(i, t, amount)
            point.add(i, t, amount)
            need -= amount
            if not need:
                break
        if need:
            return None
    return point


def check_point(spec: PolytopeSpec, point, equality=True) -> list:
    """Violated constraints of ``point`` (exact); empty when feasible."""
    inst = spec.inst
    problems = []
    allowed = {i: set(ts) for i, ts in spec.candidates.items()}
    rows = {i: Fraction(0) for i in inst.items}
    slot_load, room_load, group_load = {}, {}, {}
    for (i, t), v in point.items():
        if v < 0 or v > 1:
            problems.append(f"entry {(i, t)} = {v} outside [0,1]")
        if i not in allowed or t not in allowed[i]:
            problems.append(f"item {i} does not fit type {t}")
            continue
        rows[i] += v
        if isinstance(t, Slot):
            slot_load[t.item] = slot_load.get(t.item, 0) + v
        else:
            room_load[t.items] = room_load.get(t.items, 0) + v * inst.sizes[i]
            key = (t.items, inst.group_id[i])
            group_load[key] = group_load.get(key, 0) + v
    for j, load in slot_load.items():
        if load > spec.slot_caps[j]:
            problems.append(f"slot {j} over capacity: {load} > {spec.slot_caps[j]}")
    x = spec.prototype
    for c, load in room_load.items():
        if load > (1 - inst.total(c)) * x[c]:
            problems.append(f"configuration {c} over size capacity")
    for (c, g), load in group_load.items():
        used = sum(1 for j in c if inst.group_id[j] == g)
        if load > x[c] * (inst.groups[g].k - used):
            problems.append(f"configuration {c} over group {g} capacity")
    for i, r in rows.items():
        if r < 1 or (equality and r != 1):
            problems.append(f"item {i} covered {r}")
    return problems


def to_lp(spec: PolytopeSpec):
    """(LinearProgram, variable list) with cover rows as equalities.

    Rows that cannot bind when every item is assigned exactly once are
    dropped; this does not change the feasible set.
    """
    inst = spec.inst
    x = spec.prototype
    variables = spec.pairs()
    index = {p: n for n, p in enumerate(variables)}
    names = [f"g[{i},{t}]" for i, t in variables]
    lp = LinearProgram(len(variables), names=names)
    on_slot, on_config = {}, {}
    for (i, t), n in index.items():
        if isinstance(t, Slot):
            on_slot.setdefault(t.item, []).append((i, n))
        else:
            on_config.setdefault(t.items, []).append((i, n))
    for c, entries in sorted(on_config.items(), key=lambda e: (len(e[0]), e[0])):
        rhs = (1 - inst.total(c)) * x[c]
        if sum(inst.sizes[i] for i, _ in entries) > rhs:
            lp.add_constraint({n: inst.sizes[i] for i, n in entries}, LE, rhs)
        by_group = {}
        for i, n in entries:
            by_group.setdefault(inst.group_id[i], []).append(n)
        for g, cols in sorted(by_group.items()):
            used = sum(1 for j in c if inst.group_id[j] == g)
            rhs = x[c] * (inst.groups[g].k - used)
            if len(cols) > rhs:
                lp.add_constraint({n: 1 for n in cols}, LE, rhs)
    for j, entries in sorted(on_slot.items()):
        if len(entries) > spec.slot_caps[j]:
            lp.add_constraint({n: 1 for _, n in entries}, LE, spec.slot_caps[j])
    for i in inst.items:
        cols = {index[(i, t)]: 1 for t in spec.candidates[i]}
        lp.add_constraint(cols, EQ, 1)
    # same preference as greedy_point: as much size riding on configurations as possible
    lp.set_objective({n: inst.sizes[i] for (i, t), n in index.items() if isinstance(t, Slot)})
    return lp, variables


def _point_from(values, variables):
    point = AssignmentPoint()
    for (i, t), v in zip(variables, values):
        if v:
            point.set(i, t, v)
    return point


def vertex_with_tight_cover(spec: PolytopeSpec) -> AssignmentPoint:
    """A vertex of the polytope with every cover row tight.

    An integral point with tight cover rows is always a vertex (each item's
    zero entries and its cover row pin down all of its variables), so the
    integral greedy assignment is tried first; otherwise the exact LP
    minimizing the size placed in slots is solved.
    """
    if not spec.inst.items:
        return AssignmentPoint()
    point = greedy_point(spec, integral=True)
    if point is not None:
        spec.extra["vertex_source"] = "integral"
        return point
    lp, variables = to_lp(spec)
    log.debug("vertex LP: %d variables, %d rows", lp.num_vars, len(lp.constraints))
    sol = solve_lp(lp)
    if not sol.optimal:
        raise PolytopeEmpty(f"polytope is empty ({sol.status}); {len(spec.configs)} support configurations")
    spec.extra["vertex_source"] = "lp"
    return _point_from(sol.values, variables)


def is_feasible(spec: PolytopeSpec, witness=None) -> bool:
    """Nonemptiness, proven by a checked witness or greedy point, else by LP."""
    if not spec.inst.items:
        return True
    if witness is not None and not check_point(spec, witness, equality=False):
        spec.extra["feasibility"] = "witness"
        return True
    point = greedy_point(spec, integral=False)
    if point is not None:
        assert not check_point(spec, point)
        spec.extra["feasibility"] = "greedy"
        return True
    lp, _ = to_lp(spec)
    spec.extra["feasibility"] = "lp"
    return feasible_vertex(lp).optimal


def fractional_items(point) -> set:
    return {i for (i, _), v in point.items() if 0 < v < 1}


def fractional_bound(prototype) -> int:
    """8 k^2 |supp|^2 with k the largest support configuration (at least 1)."""
    k = max((len(c) for c in prototype), default=0)
    return 8 * max(k, 1) ** 2 * len(prototype) ** 2


def dump(spec: PolytopeSpec) -> str:
    """Plain-text listing of the LP, one constraint per line."""
    lp, _ = to_lp(spec)
    return lp.to_text()
