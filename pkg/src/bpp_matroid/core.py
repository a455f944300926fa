"""Data model for bin packing with a partition matroid.

Item ids are positive integers ordered so that a smaller id never has a
smaller size.  Derived instances (residual, reduced, "I minus A") keep the
ids of their parent, so packings can be moved between them without any
relabelling.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

Configuration = tuple  # sorted tuple of item ids

# Integer caps above this are stored as math.inf ("unbounded").
SATURATION = 2 ** 62


class InstanceError(ValueError):
    """Raised by validate_instance; carries every violation found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def parse_rational(value) -> Fraction:
    """Exact rational from an int, a "p/q" string or a decimal string/float."""
    if isinstance(value, bool):
        raise TypeError("booleans are not sizes")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # repr round-trips, so 0.1 means 1/10 rather than its binary expansion
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def canonical(items: Iterable[int]) -> Configuration:
    return tuple(sorted(set(items)))


@dataclass(frozen=True)
class Group:
    gid: int
    members: tuple
    k: int


class Instance:
    """Items with exact sizes in (0,1], partitioned into capped groups."""

    def __init__(self, sizes: Mapping[int, Fraction], groups: Iterable[Group], labels=None):
        self.sizes = dict(sizes)
        self.items = tuple(sorted(self.sizes))
        self.groups = {g.gid: g for g in groups if g.members}
        self.group_id = {}
        for g in self.groups.values():
            for item in g.members:
                self.group_id[item] = g.gid
        self.labels = dict(labels) if labels is not None else {i: i for i in self.items}
        self._order_checked = False

    def __len__(self):
        return len(self.items)

    def __repr__(self):
        return f"Instance(n={len(self.items)}, groups={len(self.groups)})"

    def size(self, item: int) -> Fraction:
        return self.sizes[item]

    def group_of(self, item: int) -> Group:
        return self.groups[self.group_id[item]]

    def total(self, items: Iterable[int]) -> Fraction:
        sizes = self.sizes
        return sum((sizes[i] for i in items), Fraction(0))

    def total_size(self) -> Fraction:
        return self.total(self.items)

    def sorted_groups(self):
        return [self.groups[g] for g in sorted(self.groups)]

    def restrict(self, items: Iterable[int], scale: Fraction | None = None, caps: Mapping[int, int] | None = None):
        """Sub-instance on ``items`` with the same ids.

        ``scale`` divides every size (residual instances), ``caps`` overrides
        per-group cardinality bounds by group id.
        """
        keep = set(items)
        if scale is None:
            sizes = {i: self.sizes[i] for i in keep}
        else:
            sizes = {i: self.sizes[i] / scale for i in keep}
        groups = []
        for g in self.groups.values():
            members = tuple(i for i in g.members if i in keep)
            if members:
                k = g.k if caps is None or g.gid not in caps else caps[g.gid]
                groups.append(Group(g.gid, members, k))
        return Instance(sizes, groups, {i: self.labels.get(i, i) for i in keep})

    def with_groups(self, groups: Iterable[Group]):
        return Instance(self.sizes, groups, self.labels)


def validate_instance(raw) -> Instance:
    """Canonical Instance from a raw description, or InstanceError.

    ``raw`` is the JSON shape ``{"items": [{"id", "size", "group"}],
    "groups": [{"id", "k"}]}``; groups may alternatively list ``members``.
    Items are re-numbered 1..n by non-increasing size, ties by input order.
    """
    errors = []
    raw_items = list(raw.get("items", []))
    raw_groups = list(raw.get("groups", []))

    caps = {}
    listed = {}
    for g in raw_groups:
        gid = g.get("id")
        if gid in caps:
            errors.append(f"duplicate group id {gid}")
            continue
        k = g.get("k")
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            errors.append(f"group {gid}: k must be an integer >= 1, got {k!r}")
        caps[gid] = k
        for member in g.get("members", ()):
            listed.setdefault(member, []).append(gid)

    seen = set()
    order = []
    for pos, item in enumerate(raw_items):
        iid = item.get("id")
        if iid in seen:
            errors.append(f"duplicate item id {iid}")
            continue
        seen.add(iid)
        try:
            size = parse_rational(item.get("size"))
        except (TypeError, ValueError, ZeroDivisionError):
            errors.append(f"item {iid}: unparseable size {item.get('size')!r}")
            continue
        if not 0 < size <= 1:
            errors.append(f"item {iid}: size out of (0,1]")
        memberships = list(listed.get(iid, []))
        if "group" in item:
            memberships.append(item["group"])
        distinct = set(memberships)
        if not distinct:
            errors.append(f"item {iid}: not a partition (belongs to no group)")
        elif len(distinct) > 1:
            errors.append(f"item {iid}: not a partition (listed in groups {sorted(distinct)})")
        else:
            gid = next(iter(distinct))
            if gid not in caps:
                errors.append(f"item {iid}: unknown group {gid}")
        order.append((pos, iid, size, distinct))
    for member in listed:
        if member not in seen:
            errors.append(f"group member {member} is not an item")
    if errors:
        raise InstanceError(errors)

    order.sort(key=lambda t: (-t[2], t[0]))
    sizes, labels, members = {}, {}, {}
    for new_id, (_, iid, size, distinct) in enumerate(order, start=1):
        sizes[new_id] = size
        labels[new_id] = iid
        members.setdefault(next(iter(distinct)), []).append(new_id)
    groups = [Group(gid, tuple(members.get(gid, ())), caps[gid]) for gid in caps]
    inst = Instance(sizes, groups, labels)
    assert sizes_non_increasing(inst)
    return inst


def sizes_non_increasing(inst: Instance) -> bool:
    sizes = [inst.sizes[i] for i in inst.items]
    return all(a >= b for a, b in zip(sizes, sizes[1:]))


def instance_from_json(data) -> Instance:
    return validate_instance(data)


def instance_to_json(inst: Instance) -> dict:
    """Inverse of validate_instance, using the original (label) ids."""
    return {
        "items": [
            {"id": inst.labels[i], "size": str(inst.sizes[i]), "group": inst.group_id[i]}
            for i in inst.items
        ],
        "groups": [{"id": g.gid, "k": g.k} for g in inst.sorted_groups()],
    }


def make_instance(sizes, groups=None, caps=None) -> Instance:
    """Shorthand for tests and generators.

    ``sizes`` is a list of rationals; ``groups`` a parallel list of group ids
    (default: one group); ``caps`` maps group id -> k (default: group size).
    """
    sizes = [parse_rational(s) for s in sizes]
    if groups is None:
        groups = [0] * len(sizes)
    gids = sorted(set(groups))
    if caps is None:
        caps = {g: max(1, groups.count(g)) for g in gids}
    raw = {
        "items": [{"id": i + 1, "size": s, "group": g} for i, (s, g) in enumerate(zip(sizes, groups))],
        "groups": [{"id": g, "k": caps[g]} for g in gids],
    }
    return validate_instance(raw)


def is_configuration(inst: Instance, items: Iterable[int]) -> bool:
    items = list(items)
    for i in items:
        if i not in inst.sizes:
            raise KeyError(f"unknown item id {i}")
    if len(set(items)) != len(items):
        return False
    if inst.total(items) > 1:
        return False
    counts = {}
    for i in items:
        gid = inst.group_id[i]
        counts[gid] = counts.get(gid, 0) + 1
        if counts[gid] > inst.groups[gid].k:
            return False
    return True


def cardinality_bound(inst: Instance) -> int:
    """V(I): max over groups of ceil(|G| / k(G)); 0 for an empty instance."""
    return max((-(-len(g.members) // g.k) for g in inst.groups.values()), default=0)


def fit_slot(inst: Instance, item: int) -> frozenset:
    """Items of the same group that are no larger than ``item``."""
    s = inst.size(item)
    return frozenset(j for j in inst.group_of(item).members if inst.sizes[j] <= s)


def fit_threshold(inst: Instance, config: Iterable[int], eps: Fraction) -> Fraction:
    return min(eps * eps, eps * (1 - inst.total(config)))


def fit_config(inst: Instance, config: Iterable[int], eps: Fraction) -> frozenset:
    """Items that may ride along with configuration ``config`` as extras."""
    bound = fit_threshold(inst, config, eps)
    return frozenset(i for i in inst.items if inst.sizes[i] <= bound)


@dataclass(frozen=True)
class Packing:
    bins: tuple = ()

    def __len__(self):
        return len(self.bins)

    def items(self):
        return {i for b in self.bins for i in b}

    def nonempty(self):
        return Packing(tuple(b for b in self.bins if b))

    def to_json(self, inst: Instance | None = None):
        if inst is None:
            return {"bins": [list(b) for b in self.bins]}
        return {"bins": [[inst.labels[i] for i in b] for b in self.bins]}


def validate_packing(inst: Instance, packing, complete: bool = True) -> list:
    """Violations of ``packing`` for ``inst``; an empty list means valid."""
    problems = []
    seen = {}
    for b, content in enumerate(packing.bins if isinstance(packing, Packing) else packing):
        unknown = [i for i in content if i not in inst.sizes]
        if unknown:
            problems.append(f"bin {b}: unknown items {unknown}")
            continue
        if not is_configuration(inst, content):
            problems.append(f"bin {b}: not a configuration {tuple(content)}")
        for i in content:
            if i in seen:
                problems.append(f"item {i} in bins {seen[i]} and {b}")
            seen[i] = b
    if complete:
        missing = [i for i in inst.items if i not in seen]
        if missing:
            problems.append(f"items not packed: {missing}")
    return problems


def log_of(x) -> float:
    """Natural log of a positive rational (or int) of any magnitude."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log of a non-positive number")
    return math.log(x.numerator) - math.log(x.denominator)


def within_log_bound(x, log_bound: float) -> bool:
    """x <= exp(log_bound), compared in log scale."""
    if log_bound == math.inf or Fraction(x) <= 0:
        return True
    return log_of(x) <= log_bound * (1 + 1e-12) + 1e-12


def _power_cap(eps: Fraction, exponent: int):
    value = math.ceil(Fraction(1) / eps ** exponent)
    return value if value <= SATURATION else math.inf


@dataclass(frozen=True)
class ConstantSet:
    """Parameter constants for a given epsilon.

    ``K_log`` and ``Q_log`` are natural logs of K(eps) and Q(eps); integer
    caps beyond SATURATION are math.inf.  ``overrides`` holds the test-mode
    substitutions that were applied (keys: alpha, upsilon, eta,
    class_threshold, config_cap, support_cap, kappa, beta).
    """

    epsilon: Fraction
    K_log: float
    Q_log: float
    alpha: int
    upsilon: int
    eta_cap: object
    config_cap: object
    test_mode: bool = False
    overrides: dict = field(default_factory=dict)

    def eta(self, group_count: int):
        if "eta" in self.overrides:
            return min(group_count, self.overrides["eta"])
        return min(group_count, self.eta_cap)

    @property
    def class_threshold(self):
        return self.overrides.get("class_threshold")

    @property
    def support_log_cap(self) -> float:
        if "support_cap" in self.overrides:
            return math.log(self.overrides["support_cap"])
        return self.Q_log

    def kappa(self, w: int, group_count: int):
        if "kappa" in self.overrides:
            return min(group_count, self.overrides["kappa"])
        return min(group_count, _power_cap(self.epsilon, 3 * w + 5))

    def beta(self, w: int):
        if "beta" in self.overrides:
            return self.overrides["beta"]
        return _power_cap(self.epsilon, w + 2)

    def partition_log_cap(self) -> float:
        """ln of eps^-22 * Q(eps)^2, the category-count cap."""
        return 22 * math.log(1 / self.epsilon) + 2 * self.Q_log


OVERRIDE_KEYS = {"alpha", "upsilon", "eta", "class_threshold", "config_cap", "support_cap", "kappa", "beta"}


def admissible_epsilon(eps: Fraction) -> bool:
    return 0 < eps < Fraction(1, 10) and eps.numerator == 1


def constants(eps, overrides: Mapping | None = None, test_mode: bool = False) -> ConstantSet:
    eps = parse_rational(eps)
    overrides = dict(overrides or {})
    unknown = set(overrides) - OVERRIDE_KEYS
    if unknown:
        raise ValueError(f"unknown override keys {sorted(unknown)}")
    if overrides and not test_mode:
        raise ValueError("constant overrides require test mode")
    if test_mode:
        if not 0 < eps < Fraction(1, 2):
            raise ValueError(f"epsilon {eps} outside (0, 1/2) even in test mode")
    elif not admissible_epsilon(eps):
        raise ValueError(f"epsilon {eps} must be 1/m with m >= 11 (use test mode otherwise)")
    inv = 1 / eps
    if "class_threshold" in overrides:
        overrides["class_threshold"] = parse_rational(overrides["class_threshold"])
    alpha = overrides.get("alpha", _power_cap(eps, 5))
    upsilon = overrides.get("upsilon", math.ceil(3 * inv * inv))
    return ConstantSet(
        epsilon=eps,
        K_log=float(inv * inv) * math.log(inv),
        Q_log=float(inv ** 17),
        alpha=alpha,
        upsilon=upsilon,
        eta_cap=_power_cap(eps, 12),
        config_cap=overrides.get("config_cap", _power_cap(eps, 10)),
        test_mode=test_mode,
        overrides=overrides,
    )


def large_items(inst: Instance, eps: Fraction) -> frozenset:
    """L: items of size at least eps^2."""
    bound = eps * eps
    return frozenset(i for i in inst.items if inst.sizes[i] >= bound)


def is_structured(inst: Instance, consts: ConstantSet) -> bool:
    """At most K(eps) groups hold an item of size >= eps^2 (log compare)."""
    big = large_items(inst, consts.epsilon)
    count = len({inst.group_id[i] for i in big})
    return count == 0 or math.log(count) <= consts.K_log
