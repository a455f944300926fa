"""Instance generators and the benchmark runner.

A suite is a dict::

    {"specs": [{"n": 20, "group_count": 3, "k_range": [1, 3],
                "size_distribution": "uniform", "seed": 7, "count": 5}],
     "solvers": ["afptas", "ffd"], "eps": "1/11", "oracle": true}

Every (instance, solver) pair becomes one row.  Rows are deterministic
unless timing is requested.
"""

import csv
import io
import json
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from .core import Instance, cardinality_bound, constants, make_instance, parse_rational, validate_packing
from .oracle import exact_opt, first_fit_decreasing

SCHEMA_VERSION = 1
DISTRIBUTIONS = ("uniform", "clustered", "heavy_dust")
SOLVERS = ("afptas", "ffd", "exact")
COLUMNS = (
    "schema", "spec", "instance", "seed", "n", "groups", "distribution", "solver",
    "status", "bins", "lower_bound", "lp_bound", "oracle_opt", "ratio", "seconds", "error",
)


def generate_instance(spec) -> Instance:
    """Deterministic random instance.

    ``uniform``: sizes on the grid {1..D}/D.  ``clustered``: sizes near 1/t for
    t in 2..6.  ``heavy_dust``: a ``heavy_fraction`` of sizes at least eps^2,
    the rest below it.
    """
    n = int(spec.get("n", 10))
    group_count = int(spec.get("group_count", 1))
    lo, hi = spec.get("k_range", (1, 1))
    dist = spec.get("size_distribution", "uniform")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if lo < 1 or lo > hi:
        raise ValueError(f"empty k range {lo}..{hi}")
    if group_count < 1:
        raise ValueError("group_count must be at least 1")
    if dist not in DISTRIBUTIONS:
        raise ValueError(f"unknown size distribution {dist!r}")
    rng = random.Random(spec.get("seed", 0))
    denom = int(spec.get("denominator", 400))
    eps = parse_rational(spec.get("eps", "1/11"))
    sizes = []
    for _ in range(n):
        if dist == "uniform":
            s = Fraction(rng.randint(1, denom), denom)
        elif dist == "clustered":
            t = rng.randint(2, 6)
            s = Fraction(1, t) + Fraction(rng.randint(-10, 10), 1000)
            s = min(max(s, Fraction(1, 1000)), Fraction(1))
        else:
            small = eps * eps
            if rng.random() < float(spec.get("heavy_fraction", 0.5)):
                s = small + (1 - small) * Fraction(rng.randint(0, denom), denom)
            else:
                s = small * Fraction(rng.randint(1, denom - 1), denom)
        sizes.append(s)
    groups = [rng.randrange(group_count) for _ in range(n)]
    caps = {g: rng.randint(lo, hi) for g in range(group_count)}
    return make_instance(sizes, groups, caps)


def _specs(suite):
    for index, spec in enumerate(suite.get("specs", [])):
        base = int(spec.get("seed", 0))
        for copy in range(int(spec.get("count", 1))):
            yield index, copy, dict(spec, seed=base + copy)


def _run_cell(args):
    index, copy, spec, solver, options = args
    # imported here so worker processes only pay for what they use
    from .pipeline import gen_afptas

    row = dict.fromkeys(COLUMNS, "")
    row.update(schema=SCHEMA_VERSION, spec=index, instance=copy, seed=spec["seed"], solver=solver)
    row["distribution"] = spec.get("size_distribution", "uniform")
    try:
        inst = generate_instance(spec)
        row["n"] = len(inst)
        row["groups"] = len(inst.groups)
        row["lower_bound"] = max(math.ceil(inst.total_size()), cardinality_bound(inst))
        eps = parse_rational(options.get("eps", "1/11"))
        if solver not in SOLVERS:
            raise ValueError(f"unknown solver {solver!r}")
        t = time.perf_counter()
        if solver == "afptas":
            consts = constants(eps, options.get("overrides"), options.get("test_mode", False))
            result = gen_afptas(inst, eps, consts, options.get("pricing", "exact"))
            packing = result.packing
            row["lp_bound"] = str(result.lp_lower_bound)
        elif solver == "ffd":
            packing = first_fit_decreasing(inst)
        elif solver == "exact":
            res = exact_opt(inst, node_limit=options.get("node_limit", 2_000_000))
            if not res.solved:
                raise RuntimeError(res.status)
            packing = res.packing
        elapsed = time.perf_counter() - t
        problems = validate_packing(inst, packing)
        if problems:
            raise AssertionError(problems[0])
        row["bins"] = len(packing)
        if options.get("timing"):
            row["seconds"] = f"{elapsed:.4f}"
        if options.get("oracle"):
            res = exact_opt(inst, node_limit=options.get("node_limit", 2_000_000))
            if res.solved:
                row["oracle_opt"] = res.opt
                if res.opt:
                    row["ratio"] = f"{len(packing) / res.opt:.6f}"
        row["status"] = "ok"
    except Exception as exc:  # a failed cell is recorded, the suite goes on
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"[:300]
    return row


def run_bench(suite, workers=1, timing=False):
    """Rows (dicts keyed by COLUMNS), in suite order."""
    options = {
        "eps": suite.get("eps", "1/11"),
        "oracle": bool(suite.get("oracle", False)),
        "pricing": suite.get("pricing", "exact"),
        "overrides": suite.get("overrides"),
        "test_mode": bool(suite.get("test_mode", False)),
        "timing": timing,
    }
    solvers = suite.get("solvers", ["afptas"])
    cells = [(i, c, spec, solver, options) for i, c, spec in _specs(suite) for solver in solvers]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(cell) for cell in cells]


def rows_to_csv(rows) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def rows_to_json(rows) -> str:
    return json.dumps({"schema": SCHEMA_VERSION, "columns": list(COLUMNS), "rows": rows}, indent=1, sort_keys=True)
