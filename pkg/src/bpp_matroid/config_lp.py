"""Configuration LP by column generation.

The restricted master is the covering form  min sum x_C  s.t. every item is
covered at least once; the pricing problem is the configuration maximization
problem (a knapsack with a partition matroid) with the master duals as item
weights.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import mpq

from .core import Instance, canonical, is_configuration, parse_rational
from .exact_lp import OPTIMAL, RevisedSimplex, to_fraction
from .oracle import first_fit_decreasing

log = logging.getLogger(__name__)

EXACT_PRICING_LIMIT = 64
# improving incumbents from one pricing call added next to the best column
EXTRA_COLUMNS = 4


class Prototype(dict):
    """Sparse nonnegative vector over configurations; zero entries are absent."""

    def add(self, config, value):
        if value == 0:
            return
        if value < 0:
            raise ValueError("prototype entries are nonnegative")
        config = tuple(config)
        total = self.get(config, Fraction(0)) + value
        if total:
            self[config] = total
        else:
            self.pop(config, None)

    def norm(self) -> Fraction:
        return sum(self.values(), Fraction(0))

    def support(self):
        return sorted(self)

    def coverage(self, item) -> Fraction:
        return sum((v for c, v in self.items() if item in c), Fraction(0))

    def coverages(self) -> dict:
        cov = {}
        for c, v in self.items():
            for i in c:
                cov[i] = cov.get(i, Fraction(0)) + v
        return cov

    def copy(self):
        return Prototype(self)


def _as_q(x):
    x = parse_rational(x) if not isinstance(x, Fraction) else x
    return mpq(x.numerator, x.denominator)


def _exact_cmp(inst: Instance, weights, found=None, floor=None):
    """Branch and bound over items in density order.

    Feasibility and incumbent values are exact; the pruning bound (minimum of
    a fractional-knapsack bound over the items that still fit and a per-group
    cardinality bound) is computed in floating point and only prunes when it
    is below the incumbent by more than a rounding tolerance, so the optimum
    found is exact.  Every improved
    incumbent is appended to ``found`` as (config, value) when given.

    With ``floor`` the search only looks for values above it: subtrees that
    cannot beat the floor are pruned, so a result at or below the floor
    proves the optimum is too, but is not itself the optimum.
    """
    items = [i for i in inst.items if weights.get(i, 0) > 0]
    if not items:
        return (), Fraction(0)
    w = {i: _as_q(weights[i]) for i in items}
    s = {i: _as_q(inst.sizes[i]) for i in items}
    # identical items end up adjacent
    order = sorted(items, key=lambda i: (-(w[i] / s[i]), s[i], inst.group_id[i], i))
    n = len(order)
    gid = [inst.group_id[i] for i in order]
    ws = [w[i] for i in order]
    ss = [s[i] for i in order]
    wf = [float(v) for v in ws]
    sf = [float(v) for v in ss]
    caps = {g: inst.groups[g].k for g in set(gid)}
    tol = 1e-9 * (1 + sum(wf))
    # twin_end[p]: first position after the run of items identical to p
    twin_end = [n] * n
    for p in range(n - 2, -1, -1):
        same = ss[p] == ss[p + 1] and ws[p] == ws[p + 1] and gid[p] == gid[p + 1]
        twin_end[p] = twin_end[p + 1] if same else p + 1

    # cap_sums[p][g]: prefix sums of group g's weights at positions >= p, largest first
    cap_sums = [None] * (n + 1)
    cap_sums[n] = {}
    remaining = {}
    for p in range(n - 1, -1, -1):
        remaining.setdefault(gid[p], []).append(wf[p])
        sums = {}
        for g, vals in remaining.items():
            acc = [0.0]
            for v in sorted(vals, reverse=True)[: caps[g]]:
                acc.append(acc[-1] + v)
            sums[g] = acc
        cap_sums[p] = sums

    # greedy incumbent by density
    best_val = mpq(0)
    best_set = []
    room = mpq(1)
    used = {g: 0 for g in caps}
    for t in range(n):
        if ss[t] <= room and used[gid[t]] < caps[gid[t]]:
            room -= ss[t]
            used[gid[t]] += 1
            best_val += ws[t]
            best_set.append(order[t])
    best_f = float(best_val)
    if found is not None:
        found.append((canonical(best_set), best_val))
    floor_f = float(floor) if floor is not None else -1.0
    used = {g: 0 for g in caps}
    chosen = []

    def bound(p, room_f, value_f):
        card = value_f
        for g, acc in cap_sums[p].items():
            left = caps[g] - used[g]
            if left > 0:
                card += acc[min(left, len(acc) - 1)]
        if card <= max(best_f, floor_f) - tol:
            return card
        frac = value_f
        r = room_f
        fits = room_f + 1e-12
        for t in range(p, n):
            # items too big for the room left here never enter this subtree
            if sf[t] > fits or used[gid[t]] >= caps[gid[t]]:
                continue
            if sf[t] <= r:
                r -= sf[t]
                frac += wf[t]
            else:
                frac += wf[t] * r / sf[t]
                break
        return min(frac, card)

    def dfs(p, room, value, value_f):
        nonlocal best_val, best_set, best_f
        if value > best_val:
            best_val = value
            best_f = float(value)
            best_set = list(chosen)
            if found is not None:
                found.append((canonical(best_set), best_val))
        if p == n or bound(p, float(room), value_f) <= max(best_f, floor_f) - tol:
            return
        g = gid[p]
        if ss[p] <= room and used[g] < caps[g]:
            used[g] += 1
            chosen.append(order[p])
            dfs(p + 1, room - ss[p], value + ws[p], value_f + wf[p])
            chosen.pop()
            used[g] -= 1
        # leaving p out: identical items are only ever taken as a prefix
        dfs(twin_end[p], room, value, value_f)

    dfs(0, mpq(1), mpq(0), 0.0)
    return canonical(best_set), to_fraction(best_val)


def _fptas_cmp(inst: Instance, weights, eps_prime):
    """Profit-scaling FPTAS: weight >= (1 - eps_prime) * optimum."""
    eps_prime = parse_rational(eps_prime)
    items = [i for i in inst.items if weights.get(i, 0) > 0]
    if not items:
        return (), Fraction(0)
    w = {i: parse_rational(weights[i]) for i in items}
    top = max(w.values())
    scale = eps_prime * top / len(items)
    profit = {i: int(w[i] / scale) for i in items}
    size = {i: _as_q(inst.sizes[i]) for i in items}
    by_group = {}
    for i in items:
        by_group.setdefault(inst.group_id[i], []).append(i)

    one = mpq(1)
    # dp: scaled profit -> (min size, chosen items)
    dp = {0: (mpq(0), ())}
    for g in sorted(by_group):
        members = by_group[g]
        k = inst.groups[g].k
        # inner table over (count, profit) -> (min size, chosen)
        inner = [{0: (mpq(0), ())}] + [dict() for _ in range(k)]
        for i in members:
            for c in range(min(k, len(members)) - 1, -1, -1):
                for p, (sz, sel) in list(inner[c].items()):
                    nsz = sz + size[i]
                    if nsz > one:
                        continue
                    np_ = p + profit[i]
                    cur = inner[c + 1].get(np_)
                    if cur is None or nsz < cur[0]:
                        inner[c + 1][np_] = (nsz, sel + (i,))
        group_best = {}
        for table in inner:
            for p, entry in table.items():
                cur = group_best.get(p)
                if cur is None or entry[0] < cur[0]:
                    group_best[p] = entry
        merged = {}
        for p, (sz, sel) in dp.items():
            for gp, (gsz, gsel) in group_best.items():
                nsz = sz + gsz
                if nsz > one:
                    continue
                key = p + gp
                cur = merged.get(key)
                if cur is None or nsz < cur[0]:
                    merged[key] = (nsz, sel + gsel)
        dp = merged
    best = max(dp)
    chosen = canonical(dp[best][1])
    return chosen, sum((w[i] for i in chosen), Fraction(0))


def price_configuration(inst: Instance, weights, mode="exact", eps_prime=None, found=None, floor=None):
    """Configuration of (near) maximum total weight.

    ``mode`` is "exact", "fptas" (needs ``eps_prime``) or "auto" (exact up to
    EXACT_PRICING_LIMIT items with positive weight).  Returns (config, value).
    In exact mode, ``found`` collects the intermediate incumbents, and
    ``floor`` restricts the search to beating it.
    """
    if any(v < 0 for v in weights.values()):
        raise ValueError("pricing weights must be nonnegative")
    if mode == "auto":
        positive = sum(1 for i in inst.items if weights.get(i, 0) > 0)
        mode = "exact" if positive <= EXACT_PRICING_LIMIT else "fptas"
    if mode == "exact":
        return _exact_cmp(inst, weights, found, floor)
    if mode == "fptas":
        if eps_prime is None:
            raise ValueError("fptas pricing needs eps_prime")
        return _fptas_cmp(inst, weights, eps_prime)
    raise ValueError(f"unknown pricing mode {mode!r}")


@dataclass
class ColumnGenerationResult:
    prototype: Prototype  # covering form, coverage >= 1
    objective: Fraction
    iterations: int
    columns: int  # generated by pricing, beyond the seed
    last_price: Fraction
    pivots: int = 0
    history: list = field(default_factory=list)
    lower_bound: Fraction = Fraction(0)  # certified: at most the LP optimum


def column_generation(inst: Instance, eps, pricing="exact", max_iterations=100000, optimal=True) -> ColumnGenerationResult:
    """Restricted master + pricing loop.

    The master starts from the singleton configurations plus the bins of a
    first-fit-decreasing packing.
    With ``optimal`` it stops when the priced value is at most 1, which with
    exact pricing is the LP optimum.  Otherwise it stops as soon as the
    objective is provably within 1/(1 - eps/2) <= 1 + eps of the optimum:
    if no configuration is worth more than v under the duals, scaling them
    by 1/v gives a feasible dual solution, so objective / v is a lower
    bound.  An FPTAS of error eps/2 stopping at value 1 gives the same factor.
    """
    eps = parse_rational(eps)
    items = list(inst.items)
    if not items:
        return ColumnGenerationResult(Prototype(), Fraction(0), 0, 0, Fraction(0))
    row = {item: r for r, item in enumerate(items)}
    n = len(items)
    configs = [(item,) for item in items]
    for b in first_fit_decreasing(inst).bins:
        cfg = canonical(b)
        if len(cfg) > 1:
            configs.append(cfg)
    columns = [[(row[i], 1) for i in cfg] for cfg in configs] + [[(r, -1)] for r in range(n)]
    costs = [1] * len(configs) + [0] * n
    sx = RevisedSimplex([1] * n, columns, costs, list(range(n)))
    config_col = {c: j for j, c in enumerate(configs)}
    seeded = len(configs)
    col_config = {j: c for c, j in config_col.items()}
    eps_prime = eps / 2
    stop = Fraction(1) if optimal else 1 / (1 - eps_prime)
    iterations = 0
    history = []
    while True:
        status = sx.solve()
        if status != OPTIMAL:
            raise RuntimeError(f"master LP ended {status}")
        iterations += 1
        duals = {item: to_fraction(sx.y[row[item]]) for item in items}
        mode = pricing
        if mode == "auto":
            positive = sum(1 for v in duals.values() if v > 0)
            mode = "exact" if positive <= EXACT_PRICING_LIMIT else "fptas"
        found = []
        exact = mode == "exact"
        config, value = price_configuration(inst, duals, mode, eps_prime, found, floor=stop if exact else 1)
        objective = to_fraction(sx.objective())
        history.append((objective, value))
        # an upper bound on the best configuration value under these duals
        ceiling = max(stop if exact else Fraction(1), value) / (1 if exact else 1 - eps_prime)
        lower_bound = objective / max(Fraction(1), ceiling)
        if value <= 1 or (exact and value <= stop) or iterations >= max_iterations:
            break
        if config in config_col:
            # an FPTAS may rediscover an existing column; nothing left to add
            break
        # the best column plus the latest other improving incumbents
        extra = [c for c, v in reversed(found) if v > 1 and c != config]
        for cfg in [config] + extra[: EXTRA_COLUMNS]:
            if cfg in config_col:
                continue
            j = sx.add_column([(row[i], 1) for i in cfg], 1)
            config_col[cfg] = j
            col_config[j] = cfg
    values = sx.values()
    proto = Prototype()
    for j, v in enumerate(values):
        if v != 0 and j in col_config:
            proto.add(col_config[j], to_fraction(v))
    log.debug("column generation: %d iterations, %d columns, objective %s", iterations, len(config_col), objective)
    return ColumnGenerationResult(proto, proto.norm(), iterations, len(config_col) - seeded, value, sx.pivots, history, lower_bound)


def normalize_to_equality(inst: Instance, x_ge: Prototype) -> Prototype:
    """Shift over-coverage from C to C minus {item}; the norm is unchanged.

    Weight is taken from the smallest configurations containing the item
    first (by cardinality, then canonical order).
    """
    x = Prototype(x_ge)
    cover = x.coverages()
    for item in inst.items:
        c = cover.get(item, Fraction(0))
        if c < 1:
            raise ValueError(f"item {item} is under-covered ({c})")
        excess = c - 1
        if not excess:
            continue
        holders = sorted((cfg for cfg in x if item in cfg), key=lambda cfg: (len(cfg), cfg))
        for cfg in holders:
            if not excess:
                break
            move = min(x[cfg], excess)
            x[cfg] -= move
            if not x[cfg]:
                del x[cfg]
            x.add(tuple(i for i in cfg if i != item), move)
            excess -= move
    return x


def solve_configuration_lp(inst: Instance, eps, pricing="exact") -> Prototype:
    """Exact-coverage prototype of norm at most (1+eps) times the LP optimum."""
    result = column_generation(inst, eps, pricing, optimal=False)
    x = normalize_to_equality(inst, result.prototype)
    for cfg in x:
        assert is_configuration(inst, cfg), cfg
    return x
