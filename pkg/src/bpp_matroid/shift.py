"""Shift: fractional grouping of the important groups.

Each important group is cut, largest items first, into classes whose
frequency under the prototype reaches a threshold.  Every configuration is
then projected onto class representatives (the smallest items of each
class), which bounds the number of distinct configurations.  The projected
prototype is scaled up slightly and padded with empty bins and with copies
of each group's largest item so that the shifted items still have room.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .config_lp import Prototype
from .core import ConstantSet, Instance, canonical, constants, large_items, log_of, parse_rational, within_log_bound
from .polytope import build_polytope, is_feasible


class ShiftError(AssertionError):
    pass


def frequency(y, items) -> Fraction:
    items = set(items)
    return sum((v * len(items.intersection(c)) for c, v in y.items()), Fraction(0))


def important_groups(inst: Instance, y, consts: ConstantSet):
    """(significant group ids, massive group ids).

    Significant: the first eta groups by frequency of their small items
    (ties by group id).  Massive: groups holding a large item.
    """
    large = large_items(inst, consts.epsilon)
    freq = {}
    cover = y.coverages()
    for g in inst.sorted_groups():
        freq[g.gid] = sum((cover.get(i, Fraction(0)) for i in g.members if i not in large), Fraction(0))
    ranked = sorted(freq, key=lambda gid: (-freq[gid], gid))
    eta = consts.eta(len(ranked))
    significant = tuple(sorted(ranked[:eta]))
    massive = tuple(g.gid for g in inst.sorted_groups() if any(i in large for i in g.members))
    return significant, massive


def class_threshold(y, consts: ConstantSet) -> Fraction:
    """eps^upsilon * ||y||, unless overridden in test mode."""
    if consts.class_threshold is not None:
        return consts.class_threshold
    return consts.epsilon ** consts.upsilon * y.norm()


@dataclass
class ClassFamily:
    classes: dict  # group id -> list of classes (tuples of ids), largest items first
    significant: tuple
    massive: tuple
    threshold: Fraction

    @property
    def important(self):
        return tuple(sorted(set(self.significant) | set(self.massive)))

    def all_classes(self):
        for gid in sorted(self.classes):
            yield from self.classes[gid]

    def table(self, y):
        """Rows (group, class index, first id, last id, frequency)."""
        rows = []
        for gid in sorted(self.classes):
            for n, phi in enumerate(self.classes[gid], start=1):
                rows.append((gid, n, phi[0], phi[-1], frequency(y, phi)))
        return rows


def build_classes(inst: Instance, y, consts: ConstantSet) -> ClassFamily:
    """Cut each important group, in id order, into classes of frequency
    at least the threshold; the last class takes the remainder."""
    significant, massive = important_groups(inst, y, consts)
    threshold = class_threshold(y, consts)
    cover = y.coverages()
    classes = {}
    for gid in sorted(set(significant) | set(massive)):
        members = sorted(inst.groups[gid].members)
        parts, current, acc = [], [], Fraction(0)
        for i in members:
            current.append(i)
            acc += cover.get(i, Fraction(0))
            if acc >= threshold:
                parts.append(tuple(current))
                current, acc = [], Fraction(0)
        if current or not parts:
            parts.append(tuple(current))
        classes[gid] = parts
    return ClassFamily(classes, significant, massive, threshold)


def project_configuration(config, family: ClassFamily, inst: Instance | None = None) -> tuple:
    """Each class keeps its count in the configuration but moves it to the
    class's largest ids; items of other groups are dropped."""
    members = set(config)
    out = []
    for phi in family.all_classes():
        n = sum(1 for i in phi if i in members)
        if n:
            out.extend(phi[-n:])
    return canonical(out)


def shift(inst: Instance, y, eps, consts: ConstantSet | None = None, report=None) -> Prototype:
    """z = (1 + 2/threshold) * sum_C y_C 1[P(C)] + (4 eps ||y|| + eps^-3) 1[empty]
    + sum over important G of (threshold + 2) 1[{min G}]."""
    consts = consts if consts is not None else constants(parse_rational(eps))
    eps = consts.epsilon
    problems = check_shift_input(inst, y, consts)
    if problems:
        raise ShiftError("; ".join(problems[:5]))
    family = build_classes(inst, y, consts)
    norm = y.norm()
    z = Prototype()
    if norm:
        factor = 1 + 2 / family.threshold
        for c, v in y.items():
            z.add(project_configuration(c, family), factor * v)
    z.add((), 4 * eps * norm + eps ** -3)
    for gid in family.important:
        z.add((min(inst.groups[gid].members),), family.threshold + 2)
    if report is not None:
        report["family"] = family
    return z


def check_shift_input(inst: Instance, y, consts: ConstantSet) -> list:
    eps = consts.epsilon
    large = large_items(inst, eps)
    problems = []
    for c in y:
        if len(c) > consts.config_cap:
            problems.append(f"configuration {c} too long")
        if inst.total(i for i in c if i not in large) > eps:
            problems.append(f"configuration {c} has more than eps of small items")
    cover = y.coverages()
    if any(f > 2 for f in cover.values()):
        problems.append("some item has frequency above 2")
    small_weight = sum((f * inst.sizes[i] for i, f in cover.items() if i not in large), Fraction(0))
    if small_weight > eps * y.norm():
        problems.append(f"small items carry {small_weight} > eps * ||y||")
    return problems


def check_classes(inst: Instance, y, family: ClassFamily, consts: ConstantSet) -> list:
    """The four class conditions: count, nesting by size, and frequency
    between threshold and threshold + 2 (lower bound except the last)."""
    problems = []
    thr = family.threshold
    eps = consts.epsilon
    for gid, parts in family.classes.items():
        if sorted(i for p in parts for i in p) != sorted(inst.groups[gid].members):
            problems.append(f"classes of group {gid} do not partition it")
        if math.log(len(parts)) > (consts.upsilon + 10) * math.log(1 / eps) + 1e-9:
            problems.append(f"group {gid} has too many classes")
        for n, phi in enumerate(parts):
            f = frequency(y, phi)
            if f > thr + 2:
                problems.append(f"class {n + 1} of group {gid} has frequency {f} > threshold + 2")
            if n < len(parts) - 1 and f < thr:
                problems.append(f"class {n + 1} of group {gid} has frequency {f} < threshold")
            if n + 1 < len(parts):
                smallest = min(inst.sizes[i] for i in phi)
                if any(inst.sizes[j] > smallest for j in parts[n + 1]):
                    problems.append(f"class {n + 2} of group {gid} does not fit class {n + 1}")
    return problems


def check_projection(inst: Instance, config, projected, consts: ConstantSet) -> list:
    problems = []
    if inst.total(projected) > inst.total(config):
        problems.append(f"projection of {config} is larger")
    if len(projected) > consts.config_cap:
        problems.append(f"projection of {config} too long")
    for gid in {inst.group_id[i] for i in projected}:
        if sum(1 for i in projected if inst.group_id[i] == gid) > sum(1 for i in config if inst.group_id[i] == gid):
            problems.append(f"projection of {config} has more items of group {gid}")
    return problems


def check_shift(inst: Instance, y, z, family: ClassFamily, consts: ConstantSet) -> list:
    """Violations of the shifting contract (empty when it holds)."""
    eps = consts.epsilon
    problems = list(check_classes(inst, y, family, consts))
    projected = set()
    for c in y:
        p = project_configuration(c, family)
        projected.add(p)
        problems.extend(check_projection(inst, c, p, consts))
    # distinct projections + 3K <= Q, compared in log scale
    a, b = math.log(len(projected)) if projected else -math.inf, math.log(3) + consts.K_log
    if max(a, b) + math.log1p(math.exp(min(a, b) - max(a, b))) > consts.Q_log * (1 + 1e-12):
        problems.append(f"{len(projected)} distinct projections, more than Q - 3K")
    excess = z.norm() - (1 + 5 * eps) * y.norm()
    if excess > 0 and not within_log_bound(excess, consts.Q_log):
        problems.append(f"norm of z exceeds (1+5eps)||y|| + Q: log excess {log_of(excess)}")
    if not within_log_bound(len(z), consts.support_log_cap):
        problems.append(f"support of z has {len(z)} configurations")
    for c in z:
        if len(c) > consts.config_cap:
            problems.append(f"configuration {c} of z too long")
    spec = build_polytope(inst, z, eps)
    if not is_feasible(spec):
        problems.append("shifted prototype has an empty polytope")
    return problems
