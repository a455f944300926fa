"""End-to-end solver: reduce, solve the structured instance, reconstruct.

The structured solver runs LP -> evict -> shift -> partition -> pack and, by
default, re-checks every stage's contract on the way; a failed check is a
bug and raises ``StageError`` naming the stage.
"""

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .config_lp import column_generation, normalize_to_equality
from .core import ConstantSet, Instance, Packing, cardinality_bound, constants, is_configuration, is_structured, log_of, parse_rational, validate_packing
from .evict import check_evict, evict
from .partition_pack import check_nice_partition, pack, partition
from .reduce import check_fill, reconstruct, reduce
from .shift import check_shift, check_shift_input, shift

log = logging.getLogger(__name__)

PRACTICAL_EPSILON = Fraction(1, 11)


class StageError(AssertionError):
    def __init__(self, stage, problems):
        self.stage = stage
        self.problems = list(problems)
        super().__init__(f"{stage}: " + "; ".join(self.problems[:5]))


def _require(stage, problems):
    if problems:
        raise StageError(stage, problems)


def number(x):
    """JSON form of an exact value: a string, or its natural log when huge."""
    x = Fraction(x)
    if abs(x.numerator) < 10 ** 18 and x.denominator < 10 ** 18:
        return str(x)
    return {"ln": log_of(x)} if x > 0 else str(x)


@dataclass
class SolveResult:
    packing: Packing
    bins: int
    lp_lower_bound: Fraction
    epsilon_used: Fraction
    stage_stats: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def report(self):
        return {
            "bins": self.bins,
            "lp_lower_bound": number(self.lp_lower_bound),
            "epsilon": str(self.epsilon_used),
            "stages": self.stage_stats,
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
        }


def afptas_structured(inst: Instance, eps, consts: ConstantSet | None = None, pricing="exact", checks=True, stats=None, dump=False):
    """Packing of a structured instance.

    Returns (packing, certified lower bound on the configuration LP).
    """
    consts = consts if consts is not None else constants(parse_rational(eps))
    eps = consts.epsilon
    stats = stats if stats is not None else {}
    if not is_structured(inst, consts):
        raise ValueError("instance is not structured")
    if not inst.items:
        return Packing(), Fraction(0)
    clock = time.perf_counter

    t = clock()
    cg = column_generation(inst, eps, pricing, optimal=False)
    x = normalize_to_equality(inst, cg.prototype)
    stats["lp"] = {
        "objective": number(cg.objective),
        "lower_bound": number(cg.lower_bound),
        "iterations": cg.iterations,
        "columns": cg.columns,
        "support": len(x),
        "seconds": clock() - t,
    }
    if checks:
        _require("lp", [f"{c} is not a configuration" for c in x if not is_configuration(inst, c)])
        _require("lp", [f"item {i} covered {v}" for i, v in x.coverages().items() if v != 1])

    t = clock()
    relaxations = {}
    y = evict(inst, x, eps, consts, relaxations)
    stats["evict"] = {"norm": number(y.norm()), "support": len(y), "seconds": clock() - t}
    if checks:
        _require("evict", check_evict(inst, x, y, consts, relaxations))
        _require("shift input", check_shift_input(inst, y, consts))

    t = clock()
    shift_report = {}
    z = shift(inst, y, eps, consts, shift_report)
    family = shift_report["family"]
    stats["shift"] = {
        "norm": number(z.norm()),
        "support": len(z),
        "important_groups": len(family.important),
        "classes": sum(len(p) for p in family.classes.values()),
        "seconds": clock() - t,
    }
    if dump:
        stats["shift"]["class_table"] = [
            {"group": g, "class": n, "first": a, "last": b, "frequency": number(f)}
            for g, n, a, b, f in family.table(y)
        ]
    if checks:
        _require("shift", check_shift(inst, y, z, family, consts))

    t = clock()
    part_report = {}
    nice = partition(inst, z, eps, consts, part_report)
    stats["partition"] = {
        "size": number(nice.size),
        "nonempty_bins": len(nice.bins),
        "categories": len(nice.families),
        "fractional": len(part_report["fractional"]),
        "vertex": part_report["vertex_source"],
        "seconds": clock() - t,
    }
    if checks:
        _require("partition", check_nice_partition(inst, nice, consts))

    t = clock()
    pack_report = {}
    packing = pack(inst, nice, eps, pack_report)
    stats["pack"] = {"bins": len(packing), "seconds": clock() - t}
    if checks:
        _require("pack", validate_packing(inst, packing))
    return packing, cg.lower_bound


def gen_afptas(inst: Instance, eps, consts: ConstantSet | None = None, pricing="exact", checks=True, dump=False) -> SolveResult:
    """Packing of an arbitrary instance: reduce, solve, reconstruct."""
    consts = consts if consts is not None else constants(parse_rational(eps))
    eps = consts.epsilon
    clock = time.perf_counter
    timings = {}
    stats = {}

    t = clock()
    reduced, meta = reduce(inst, eps, consts)
    timings["reduce"] = clock() - t
    stats["reduce"] = {
        "pivot": meta.pivot,
        "large_groups": len(meta.large_groups),
        "small_groups": len(meta.small_groups),
        "union": len(meta.union),
        "medium_of_small": len(meta.omega),
    }

    t = clock()
    structured, lp_value = afptas_structured(reduced, eps, consts, pricing, checks, stats, dump)
    timings["solve"] = clock() - t

    t = clock()
    rec = {}
    packing = reconstruct(inst, eps, meta, structured, rec)
    timings["reconstruct"] = clock() - t
    stats["reconstruct"] = {
        "rest": len(rec["rest"]),
        "discarded": len(rec["discarded"]),
        "greedy_bins": rec["greedy_bins"],
        "bins": len(packing),
    }
    if checks:
        _require("fill", check_fill(inst, meta, structured, rec["filled"], rec["rest"]))
        _require("reconstruct", validate_packing(inst, packing))
    return SolveResult(packing, len(packing), lp_value, eps, stats, timings)


@dataclass(frozen=True)
class AutoEpsilon:
    epsilon: Fraction
    mode: str
    practical: Fraction
    loglog_w: str


def auto_epsilon(inst: Instance) -> AutoEpsilon:
    """eps = 1 / floor((ln ln W)^(1/17)) with W = s(I) + V(I) + c and
    c = exp(exp(100^17)).

    ln ln W = 100^17 + ln(1 + (s(I) + V(I)) / exp(exp(100^17)) ...), and the
    correction is far below 1 for any input that fits in memory, so
    100^17 <= ln ln W < 100^17 + 1 <= 101^17 and the root's floor is 100.
    """
    base = 100 ** 17
    # ln(1 + extra / c) < extra / c < 1 whatever the instance
    extra = inst.total_size() + cardinality_bound(inst)
    assert extra >= 0
    low, high = base, base + 1
    m = round(low ** (1 / 17))
    while m ** 17 > low:
        m -= 1
    while (m + 1) ** 17 <= low:
        m += 1
    assert (m + 1) ** 17 >= high, "floor of the root is not determined"
    return AutoEpsilon(Fraction(1, m), "theory-mode", PRACTICAL_EPSILON, "100^17 + o(1)")
