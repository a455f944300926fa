"""Evict: shrink support configurations to a bounded set of slots.

For a configuration C, the small items of C (size below eps^2) are scanned
largest first.  The slots kept are the large items plus the shortest prefix
U of small items after which every remaining small item fits with the kept
slots (the prefix is capped at alpha).  The evicted items are later placed
as extras on the kept configuration.  When the cap is hit, one of the
relatively large prefix items is also dropped, spreading the weight evenly
over all such choices.
"""

from dataclasses import dataclass
from fractions import Fraction

from .config_lp import Prototype
from .core import ConstantSet, Instance, canonical, constants, fit_threshold, large_items, parse_rational
from .polytope import AssignmentPoint, Config, Slot, build_polytope, is_feasible


class EvictError(AssertionError):
    pass


@dataclass(frozen=True)
class Relaxation:
    source: tuple
    kept: tuple  # R(C): large items of C plus the prefix
    prefix: tuple  # U_C
    droppable: tuple  # prefix items of relatively large size
    vector: dict  # configuration -> weight

    @property
    def evicted(self):
        keep = set(self.kept)
        return tuple(i for i in self.source if i not in keep)


def _consts(eps, consts):
    return consts if consts is not None else constants(parse_rational(eps))


def compute_relaxation(inst: Instance, config, eps, consts: ConstantSet | None = None, large=None) -> Relaxation:
    consts = _consts(eps, consts)
    eps = consts.epsilon
    large = large_items(inst, eps) if large is None else large
    config = canonical(config)
    big = [i for i in config if i in large]
    # ids are in non-increasing size order, so sorting ids sorts by size
    small = sorted(i for i in config if i not in large)
    r = len(small)

    # least h' such that every later small item fits with big + small[:h']
    base = inst.total(big)
    prefix_size = [base]
    for i in small:
        prefix_size.append(prefix_size[-1] + inst.sizes[i])
    h_star = r
    for h in range(r + 1):
        bound = min(eps * eps, eps * (1 - prefix_size[h]))
        # the largest later item decides
        if h == r or inst.sizes[small[h]] <= bound:
            h_star = h
            break
    h = min(consts.alpha, h_star)
    prefix = tuple(small[:h])
    kept = canonical(big + list(prefix))
    slack = 1 - inst.total(kept)
    droppable = tuple(i for i in prefix if inst.sizes[i] >= slack / eps)

    if h == consts.alpha:
        n = len(droppable)
        if n < 2:
            raise EvictError(f"configuration {config}: only {n} droppable items with a full prefix")
        if "alpha" not in consts.overrides and n < 1 / eps ** 4:
            raise EvictError(f"configuration {config}: {n} droppable items, fewer than eps^-4")
        weight = Fraction(1, n - 1)
        vector = {}
        for i in droppable:
            key = tuple(j for j in kept if j != i)
            vector[key] = vector.get(key, Fraction(0)) + weight
    else:
        vector = {kept: Fraction(1)}
    return Relaxation(config, kept, prefix, droppable, vector)


def evict(inst: Instance, x, eps, consts: ConstantSet | None = None, relaxations=None) -> Prototype:
    """y = sum over C of x_C times the relaxation of C (equal keys merged).

    ``relaxations``, if given, is a dict filled with the relaxation of
    every support configuration.
    """
    consts = _consts(eps, consts)
    cover = x.coverages() if isinstance(x, Prototype) else Prototype(x).coverages()
    bad = [i for i in inst.items if cover.get(i, 0) != 1]
    if bad:
        raise ValueError(f"prototype does not cover items exactly once: {bad[:10]}")
    large = large_items(inst, consts.epsilon)
    y = Prototype()
    for c in sorted(x):
        rel = compute_relaxation(inst, c, consts.epsilon, consts, large)
        if relaxations is not None:
            relaxations[c] = rel
        for key, w in rel.vector.items():
            y.add(key, x[c] * w)
    return y


def evict_witness(inst: Instance, x, relaxations) -> AssignmentPoint:
    """A point of the y-polytope with no cross-slot assignments.

    Kept items stay on their own slot; an evicted item of C rides along on
    every key of C's relaxation with weight x_C times the key's weight.
    """
    point = AssignmentPoint()
    for c, rel in relaxations.items():
        kept = set(rel.kept)
        for i in c:
            if i in kept:
                point.add(i, Slot(i), x[c])
            else:
                for key, w in rel.vector.items():
                    point.add(i, Config(key), x[c] * w)
    return point


def check_evict(inst: Instance, x, y, consts: ConstantSet, relaxations) -> list:
    """Violations of the eviction contract (empty list when it holds)."""
    eps = consts.epsilon
    large = large_items(inst, eps)
    problems = []
    # the norm bounds rest on the full-size prefix cap
    exact_alpha = "alpha" not in consts.overrides
    if exact_alpha and y.norm() > (1 + eps) * x.norm():
        problems.append(f"norm grew too much: {y.norm()} > (1+eps) * {x.norm()}")
    for item, f in y.coverages().items():
        if f > 2:
            problems.append(f"item {item} has frequency {f} > 2")
    for c in y:
        if len(c) > consts.config_cap:
            problems.append(f"configuration {c} has {len(c)} items")
        if inst.total(i for i in c if i not in large) > eps:
            problems.append(f"configuration {c} has more than eps of small items")
    for c, rel in relaxations.items():
        total = sum(rel.vector.values(), Fraction(0))
        if exact_alpha and total > 1 + 2 * eps ** 4:
            problems.append(f"relaxation of {c} has norm {total}")
        evicted = rel.evicted
        out_size = inst.total(evicted)
        for key in rel.vector:
            threshold = fit_threshold(inst, key, eps)
            if any(inst.sizes[i] > threshold for i in evicted):
                problems.append(f"evicted items of {c} do not fit with {key}")
            if out_size > 1 - inst.total(key):
                problems.append(f"evicted items of {c} overflow {key}")
            for g in {inst.group_id[i] for i in evicted}:
                out = sum(1 for i in evicted if inst.group_id[i] == g)
                inside = sum(1 for i in key if inst.group_id[i] == g)
                if out > inst.groups[g].k - inside:
                    problems.append(f"evicted items of {c} exceed group {g} on {key}")
    spec = build_polytope(inst, y, eps)
    if not is_feasible(spec, evict_witness(inst, x, relaxations)):
        problems.append("evicted prototype has an empty polytope")
    return problems
