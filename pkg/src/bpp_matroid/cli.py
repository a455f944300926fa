"""Command-line front end.

    bpp-matroid solve inst.json --eps 1/11 [--dump-stages] [--oracle]
    bpp-matroid exact inst.json
    bpp-matroid ffd inst.json
    bpp-matroid greedy inst.json --delta 1/4
    bpp-matroid gen --n 30 --groups 4 --k-range 1,3 --dist uniform --seed 7
    bpp-matroid bench suite.json --csv out.csv --json out.json
    bpp-matroid check inst.json packing.json

Packings are read and written as {"bins": [[item ids]...]} using the ids of
the instance file.
"""

import argparse
import json
import logging
import math
import re
import sys

from .bench import DISTRIBUTIONS, generate_instance, rows_to_csv, rows_to_json, run_bench
from .core import InstanceError, Packing, cardinality_bound, constants, instance_to_json, parse_rational, validate_instance, validate_packing
from .greedy import greedy, greedy_bound
from .oracle import exact_opt, first_fit_decreasing
from .pipeline import StageError, auto_epsilon, gen_afptas, number

log = logging.getLogger("bpp_matroid")


class CliError(Exception):
    pass


def _line_of(text, item_id):
    """1-based line where the item with this id is declared, if it can be found."""
    pattern = re.compile(r'"id"\s*:\s*' + re.escape(json.dumps(item_id)) + r"\s*[,}]")
    for n, line in enumerate(text.splitlines(), start=1):
        if pattern.search(line):
            return n
    return None


def parse_instance_text(text, name="<input>"):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{name}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise CliError(f"{name}:1: expected a JSON object with 'items' and 'groups'")
    try:
        return validate_instance(raw)
    except InstanceError as exc:
        messages = []
        for error in exc.errors:
            m = re.match(r"item (\S+?):", error)
            line = None
            if m:
                token = m.group(1)
                line = _line_of(text, int(token) if token.lstrip("-").isdigit() else token)
            messages.append(f"{name}:{line}: {error}" if line else f"{name}: {error}")
        raise CliError("\n".join(messages)) from None


def parse_instance(path):
    """Validated Instance from a JSON file; errors carry file:line context."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from None
    return parse_instance_text(text, path)


def read_packing(inst, path):
    """A packing file {"bins": [[ids]...]}, or a solver report (its "packing")."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    listed = data.get("packing", data.get("bins")) if isinstance(data, dict) else None
    if not isinstance(listed, list) or not all(isinstance(b, list) for b in listed):
        raise CliError(f"{path}: expected {{\"bins\": [[item ids]...]}}")
    ids = {label: i for i, label in inst.labels.items()}
    bins = []
    for n, b in enumerate(listed):
        unknown = [x for x in b if x not in ids]
        if unknown:
            raise CliError(f"{path}: bin {n} has unknown items {unknown}")
        bins.append(tuple(ids[x] for x in b))
    return Packing(tuple(bins))


def _overrides(pairs):
    out = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise CliError(f"--override expects key=value, got {pair!r}")
        key = key.strip()
        out[key] = parse_rational(value) if key == "class_threshold" else int(value)
    return out


def _emit(obj, path=None):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _packing_report(inst, packing, extra=None):
    out = {
        "bins": len(packing),
        "lower_bound": max(math.ceil(inst.total_size()), cardinality_bound(inst)),
        "packing": packing.to_json(inst)["bins"],
        "valid": not validate_packing(inst, packing),
    }
    out.update(extra or {})
    return out


def cmd_solve(args):
    inst = parse_instance(args.instance)
    if args.auto_eps:
        auto = auto_epsilon(inst)
        eps = auto.epsilon
    else:
        eps = parse_rational(args.eps)
    consts = constants(eps, _overrides(args.override), args.test_mode)
    result = gen_afptas(inst, eps, consts, args.pricing, dump=args.dump_stages)
    report = _packing_report(inst, result.packing, result.report())
    if args.auto_eps:
        report["epsilon_mode"] = auto.mode
        report["practical_epsilon"] = str(auto.practical)
    if args.oracle:
        res = exact_opt(inst, node_limit=args.node_limit)
        report["oracle"] = {"status": res.status, "opt": res.opt}
    _emit(report, args.output)
    return 0


def cmd_exact(args):
    inst = parse_instance(args.instance)
    res = exact_opt(inst, node_limit=args.node_limit, time_limit=args.time_limit)
    _emit(_packing_report(inst, res.packing, {"status": res.status, "opt": res.opt, "nodes": res.nodes}), args.output)
    return 0 if res.solved else 3


def cmd_ffd(args):
    inst = parse_instance(args.instance)
    _emit(_packing_report(inst, first_fit_decreasing(inst)), args.output)
    return 0


def cmd_greedy(args):
    inst = parse_instance(args.instance)
    delta = parse_rational(args.delta)
    packing = greedy(inst, delta)
    _emit(_packing_report(inst, packing, {"bound": number(greedy_bound(inst, delta))}), args.output)
    return 0


def cmd_gen(args):
    lo, _, hi = args.k_range.partition(",")
    spec = {
        "n": args.n,
        "group_count": args.groups,
        "k_range": [int(lo), int(hi or lo)],
        "size_distribution": args.dist,
        "seed": args.seed,
        "eps": args.eps,
    }
    _emit(instance_to_json(generate_instance(spec)), args.output)
    return 0


def cmd_bench(args):
    with open(args.suite) as fh:
        suite = json.load(fh)
    if args.oracle:
        suite["oracle"] = True
    rows = run_bench(suite, workers=args.workers, timing=args.timing)
    csv_text = rows_to_csv(rows)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(csv_text)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(rows_to_json(rows) + "\n")
    if not args.csv and not args.json:
        sys.stdout.write(csv_text)
    return 0 if all(r["status"] == "ok" for r in rows) else 4


def cmd_check(args):
    inst = parse_instance(args.instance)
    packing = read_packing(inst, args.packing)
    problems = validate_packing(inst, packing)
    for p in problems:
        print(p)
    print("valid" if not problems else f"invalid ({len(problems)} problems)")
    return 0 if not problems else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="bpp-matroid", description="Bin packing with a partition matroid.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_output(p):
        p.add_argument("-o", "--output", help="write JSON here instead of stdout")
        return p

    p = with_output(sub.add_parser("solve", help="run the approximation scheme"))
    p.add_argument("instance")
    p.add_argument("--eps", default="1/11", help="p/q, default 1/11")
    p.add_argument("--auto-eps", action="store_true", help="use the theoretical epsilon (always 1/100)")
    p.add_argument("--test-mode", action="store_true", help="allow any eps in (0,1/2) and overrides")
    p.add_argument("--override", action="append", metavar="KEY=VAL", help="replace a constant (test mode)")
    p.add_argument("--pricing", choices=("exact", "fptas", "auto"), default="exact")
    p.add_argument("--dump-stages", action="store_true", help="include per-class tables in the report")
    p.add_argument("--oracle", action="store_true", help="also run the exact solver")
    p.add_argument("--node-limit", type=int, default=2_000_000)
    p.set_defaults(func=cmd_solve)

    p = with_output(sub.add_parser("exact", help="exact branch and bound"))
    p.add_argument("instance")
    p.add_argument("--node-limit", type=int, default=2_000_000)
    p.add_argument("--time-limit", type=float)
    p.set_defaults(func=cmd_exact)

    p = with_output(sub.add_parser("ffd", help="first fit decreasing"))
    p.add_argument("instance")
    p.set_defaults(func=cmd_ffd)

    p = with_output(sub.add_parser("greedy", help="greedy for small items"))
    p.add_argument("instance")
    p.add_argument("--delta", required=True, help="upper bound on item sizes, p/q")
    p.set_defaults(func=cmd_greedy)

    p = with_output(sub.add_parser("gen", help="generate a random instance"))
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--groups", type=int, default=3)
    p.add_argument("--k-range", default="1,3", help="lo,hi")
    p.add_argument("--dist", choices=DISTRIBUTIONS, default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", default="1/11", help="small/large boundary for heavy_dust")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("suite")
    p.add_argument("--csv")
    p.add_argument("--json")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="record wall time (reports stop being byte-identical)")
    p.add_argument("--oracle", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", help="validate a packing file")
    p.add_argument("instance")
    p.add_argument("packing")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"internal error in stage {exc.stage}: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
