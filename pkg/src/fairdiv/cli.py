"""``fairdiv`` command line.

Every command prints one JSON document on stdout.  Exit status is 0 on
success, 1 when a fairness check fails or a system is infeasible, 2 on bad
input, and 3 if an internal invariant breaks.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

from . import __version__
from .audit import run_audit
from .bench import ALGORITHMS as BENCH_ALGORITHMS
from .bench import run_bench
from .ece import (
    LexicographicPolicy,
    RandomPolicy,
    enumerate_ece_outcomes,
    run_ece,
    run_ordered_ece,
)
from .errors import InputError, InvariantViolation, OracleLimitError
from .exante import find_exante_prop_lottery, lottery_report
from .generate import gen_random_instance
from .hard import DEFAULT_DELTA, DEFAULT_EPS, HardParams, make_hard_instance, verify_all
from .model import (
    Instance,
    allocation_from_dict,
    allocation_to_dict,
    format_rational,
    instance_to_dict,
    lottery_to_dict,
    parse_allocation,
    parse_instance,
    parse_lottery,
    parse_rational,
    require_valid,
    load_json,
    validate_lottery,
)
from .twoagent import bobw_chores, bobw_goods

log = logging.getLogger("fairdiv")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

RUN_ALGORITHMS = ("bobw-goods", "bobw-chores", "ece", "ordered-ece")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_instance(path: str) -> Instance:
    return parse_instance(_read(path))


def _policy(name: str, seed: int):
    if name == "lex":
        return LexicographicPolicy()
    return RandomPolicy(seed)


def _int_list(text: str) -> list[int]:
    try:
        out = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out or any(v < 1 for v in out):
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return out


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# ------------------------------------------------------------------ commands


def cmd_run(args):
    inst = _load_instance(args.instance)
    algo = args.algo
    if algo in ("bobw-goods", "bobw-chores"):
        fn = bobw_goods if algo == "bobw-goods" else bobw_chores
        res = fn(inst, args.seed)
        out = {
            "algo": algo,
            "seed": args.seed,
            "lottery": lottery_to_dict(res.lottery),
            "coin": res.coin,
            "sample": allocation_to_dict(res.sample),
            "ordered_twins": [allocation_to_dict(a) for a in res.ordered_twins],
        }
        summary = f"{algo}: sampled support element {res.coin + 1} of 2"
    elif algo == "ece":
        alloc, path = run_ece(inst, _policy(args.policy, args.seed))
        out = {
            "algo": algo,
            "policy": args.policy,
            "seed": args.seed,
            "allocation": allocation_to_dict(alloc),
            "path": path.to_dict(),
        }
        cycles = sum(len(r.cycles) for r in path.rounds)
        summary = f"ece: {inst.m} rounds, {cycles} cycles resolved"
    else:
        alloc = run_ordered_ece(inst, _policy(args.policy, args.seed))
        out = {"algo": algo, "policy": args.policy, "seed": args.seed,
               "allocation": allocation_to_dict(alloc)}
        summary = "ordered-ece: done"
    return EXIT_OK, out, summary


def cmd_audit(args):
    inst = _load_instance(args.instance)
    alloc = parse_allocation(_read(args.alloc))
    report = run_audit(inst, alloc, args.notions)
    failed = [v["notion"] for v in report["verdicts"] if not v["satisfied"]]
    summary = "all notions satisfied" if not failed else "failed: " + ", ".join(failed)
    return (EXIT_OK if report["satisfied"] else EXIT_FAIL), report, summary


def cmd_lottery_audit(args):
    inst = _load_instance(args.instance)
    lottery = parse_lottery(_read(args.lottery))
    problem = validate_lottery(inst, lottery)
    if problem is not None:
        raise InputError(f"invalid lottery: {problem}")
    report = lottery_report(inst, lottery)
    if args.ex_post:
        report["ex_post"] = [run_audit(inst, a, args.ex_post) for a in lottery.allocations]
        report["satisfied"] = report["satisfied"] and all(r["satisfied"] for r in report["ex_post"])
    summary = "lottery passes" if report["satisfied"] else "lottery fails"
    return (EXIT_OK if report["satisfied"] else EXIT_FAIL), report, summary


def _load_allocations(path: str):
    obj = load_json(_read(path))
    entries = obj.get("allocations") if isinstance(obj, dict) else obj
    if not isinstance(entries, list):
        raise InputError("allocations file must be a list or {'allocations': [...]}")
    out = []
    for k, entry in enumerate(entries):
        if isinstance(entry, list):
            entry = {"bundles": entry}
        try:
            out.append(allocation_from_dict(entry))
        except InputError as exc:
            raise InputError(f"allocations[{k}]: {exc}") from None
    return out


def cmd_feasibility(args):
    inst = _load_instance(args.instance)
    allocs = _load_allocations(args.allocs)
    for a in allocs:
        require_valid(inst, a)
    res = find_exante_prop_lottery(inst, allocs)
    out = res.to_dict()
    out["allocations"] = len(allocs)
    summary = "feasible" if res.feasible else "infeasible: " + out["certificate"]["derived"]
    return (EXIT_OK if res.feasible else EXIT_FAIL), out, summary


def cmd_enumerate(args):
    inst = _load_instance(args.instance)
    outcomes = enumerate_ece_outcomes(inst, max_paths=args.max_paths)
    paths = [
        {"path": p.to_dict(), "receivers": list(p.receivers()), "allocation": allocation_to_dict(a)}
        for p, a in outcomes.items()
    ]
    distinct = {a for a in outcomes.values()}
    out = {"count": len(paths), "distinct_allocations": len(distinct), "paths": paths}
    return EXIT_OK, out, f"{len(paths)} paths, {len(distinct)} distinct allocations"


def _figures(kind, report, directory):
    if not directory:
        return []
    from .plotting import write_figures

    return write_figures(kind, report, directory)


def cmd_verify_hard(args):
    report = verify_all(args.delta, args.eps, full_grid=args.full_grid)
    report = json.loads(json.dumps(report, default=format_rational))
    report["figures"] = _figures("verify-hard", report, args.figures)
    checks = ", ".join(f"{r['check']}={'ok' if r['passed'] else 'FAIL'}" for r in report["reports"])
    return (EXIT_OK if report["passed"] else EXIT_FAIL), report, checks


def cmd_bench(args):
    records, summary = run_bench(args.algo, args.m, trials=args.trials, seed=args.seed)
    out = {
        "records": [r.to_dict() for r in records],
        "summary": summary,
        "figures": _figures("bench", summary, args.figures),
    }
    ratios = ", ".join(f"{r['time_ratio']:.2f}" for r in summary["ratios"])
    text = f"{args.algo}: doubling ratios [{ratios}], total {summary['total_time']:.2f}s"
    return EXIT_OK, out, text


def cmd_gen(args):
    if args.family == "hard":
        inst = make_hard_instance(HardParams(args.delta, args.eps, tuple(args.permutation)))
    else:
        inst = gen_random_instance(args.kind, args.n, args.m, args.low, args.high, args.seed)
    return EXIT_OK, instance_to_dict(inst), f"{inst.kind.value} instance, n={inst.n}, m={inst.m}"


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true",
                        help="indent JSON and print a one-line summary on stderr")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")

    parser = argparse.ArgumentParser(prog="fairdiv", description="Exact fair-division toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run an allocation algorithm")
    p.add_argument("--algo", "--pipeline", dest="algo", choices=RUN_ALGORITHMS, required=True)
    p.add_argument("--in", dest="instance", required=True, help="instance JSON ('-' for stdin)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=("lex", "random"), default="lex",
                   help="ECE choice policy; 'random' is seeded by --seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", parents=[common], help="check fairness notions of an allocation")
    p.add_argument("--in", dest="instance", required=True)
    p.add_argument("--alloc", required=True)
    p.add_argument("--notions", default="ef,prop,efx,ef1,eefx,mms",
                   help="comma list from ef, prop, efx, ef1, eefx, mms[:alpha]")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("lottery-audit", parents=[common], help="ex-ante checks of a lottery")
    p.add_argument("--in", dest="instance", required=True)
    p.add_argument("--lottery", required=True)
    p.add_argument("--ex-post", default="",
                   help="notions to audit on every support allocation as well")
    p.set_defaults(func=cmd_lottery_audit)

    p = sub.add_parser("feasibility", parents=[common],
                       help="is some lottery over the given allocations ex-ante PROP?")
    p.add_argument("--in", dest="instance", required=True)
    p.add_argument("--allocs", required=True)
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("enumerate", parents=[common], help="all ECE execution paths")
    p.add_argument("--in", dest="instance", required=True)
    p.add_argument("--max-paths", "--budget", dest="max_paths", type=int, default=100_000)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("verify-hard", parents=[common],
                       help="check the three-agent hard instance claims")
    p.add_argument("--delta", type=_rational, default=DEFAULT_DELTA)
    p.add_argument("--eps", type=_rational, default=DEFAULT_EPS)
    p.add_argument("--full-grid", action="store_true")
    p.add_argument("--figures", metavar="DIR", help="write figures into DIR")
    p.set_defaults(func=cmd_verify_hard)

    p = sub.add_parser("bench", parents=[common], help="time a two-agent pipeline")
    p.add_argument("--algo", choices=sorted(BENCH_ALGORITHMS), default="bobw-goods")
    p.add_argument("--m", type=_int_list, default=[100_000, 200_000, 400_000])
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--figures", metavar="DIR", help="write figures into DIR")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", parents=[common], help="generate an instance")
    p.add_argument("--family", choices=("random", "hard"), default="random")
    p.add_argument("--kind", choices=("goods", "chores"), default="goods")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--low", type=int)
    p.add_argument("--high", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=_rational, default=DEFAULT_DELTA)
    p.add_argument("--eps", type=_rational, default=DEFAULT_EPS)
    p.add_argument("--permutation", type=_int_list, default=[1, 2, 3])
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        code, payload, summary = args.func(args)
    except OracleLimitError as exc:
        print(f"fairdiv: limit exceeded: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"fairdiv: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"fairdiv: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    json.dump(payload, sys.stdout, indent=2 if args.pretty else None)
    sys.stdout.write("\n")
    if args.pretty:
        print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
