"""Command-line driver for verification suites and batch experiments.

Two subcommands: `verify` runs a named assertion suite and exits 0 only
when every check passes; `run` produces JSON and CSV reports for value,
reduction, sampling, and bound computations.  All randomness is seeded,
so identical invocations reproduce identical payloads.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, suites
from .corrsamp import corr_sample_experiment
from .depbreak import DepBreakComputer
from .games import Game, fixture, load_game
from .prob import FiniteDistribution
from .reduction import (ReductionConfig, main_bound_compare, report_to_csv,
                        report_to_json, run_reduction)
from .strategy import EntangledStrategy, load_strategy, strategy_fixture
from .values import classical_value, seesaw_best, theorem1_bound

GAME_FIXTURES = ("chsh", "always_win", "asym3")
STRATEGY_FIXTURES = ("tsirelson", "printing", "detprod")


class UsageError(ValueError):
    pass


def _load_game(spec: str) -> Game:
    if spec in GAME_FIXTURES:
        return fixture(spec)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"unknown game fixture or missing file: {spec}")
    return load_game(path)


def _load_strategy(spec: str, n: int) -> EntangledStrategy:
    if spec in STRATEGY_FIXTURES:
        return strategy_fixture(spec, n)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"unknown strategy fixture or missing file: {spec}")
    s = load_strategy(path)
    if s.n != n:
        raise UsageError(f"strategy file is for n={s.n}, requested n={n}")
    return s


def _parse_c(spec: str, n: int) -> tuple | str:
    """Coordinate set given 1-based, or 'auto'; empty string means empty."""
    if spec == "auto":
        return "auto"
    if spec.strip() in ("", "none"):
        return ()
    vals = []
    for tok in spec.split(","):
        v = int(tok)
        if v < 1 or v > n:
            raise UsageError(f"coordinate {v} outside 1..{n}")
        vals.append(v - 1)
    return tuple(sorted(set(vals)))


def _parse_n_grid(spec: str) -> list:
    """Grid like '2^10..2^60', a comma list, or one integer."""
    spec = spec.strip()
    if ".." in spec:
        lo, hi = spec.split("..")
        if not (lo.startswith("2^") and hi.startswith("2^")):
            raise UsageError("grid ranges must use the 2^a..2^b form")
        a, b = int(lo[2:]), int(hi[2:])
        if a > b:
            raise UsageError("empty grid range")
        return [2 ** k for k in range(a, b + 1)]
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        out.append(2 ** int(tok[2:]) if tok.startswith("2^") else int(tok))
    return out


def _emit(payload: dict, rows: list, header: list, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    if out:
        Path(out + ".json").write_text(text + "\n")
        Path(out + ".csv").write_text(buf.getvalue())
        print(f"wrote {out}.json and {out}.csv")
    else:
        print(text)


def _check_rows(checks: list) -> list:
    return [[c.name, c.trials, c.violations, repr(c.max_slack), c.details]
            for c in checks]


def _suite_payload(name: str, config: dict, checks: list) -> dict:
    return {
        "version": __version__,
        "suite": name,
        "config": config,
        "checks": [{
            "name": c.name, "trials": c.trials,
            "violations": c.violations, "max_slack": c.max_slack,
            "details": c.details, "ok": c.ok,
        } for c in checks],
        "passed": all(c.ok for c in checks),
    }


def cmd_verify(args) -> int:
    from .infotheory import CheckResult

    config = {"suite": args.suite, "trials": args.trials, "seed": args.seed,
              "game": args.game, "strategy": args.strategy, "n": args.n,
              "C": args.C}
    checks = []
    if args.suite == "matcore":
        checks = [suites.sweep_ando(args.trials, args.seed),
                  suites.sweep_powers_stormer(args.trials, args.seed),
                  suites.sweep_pure_state_bound(args.trials, args.seed)]
    elif args.suite == "entropy":
        checks = [suites.sweep_fuchs_van_de_graaf(args.trials, args.seed),
                  suites.sweep_pinsker(args.trials, args.seed),
                  suites.sweep_min_entropy(args.trials, args.seed),
                  suites.sweep_raz(min(args.trials, 500), args.seed),
                  suites.sweep_chain_rule(args.trials, args.seed)]
    elif args.suite == "all":
        checks = suites.run_all(args.trials, args.seed,
                                min(args.trials, 500))
    elif args.suite in ("usefulness", "skew", "xi", "sampleability"):
        g = _load_game(args.game)
        s = _load_strategy(args.strategy, args.n)
        c_spec = _parse_c(args.C, args.n)
        if c_spec == "auto":
            raise UsageError("verification suites need an explicit C")
        comp = DepBreakComputer(g, args.n, s, c_spec)
        if args.suite == "usefulness":
            rep = comp.usefulness_check()
            wrep = comp.weight_check()
            checks = [
                CheckResult("usefulness", rep.contexts,
                            0 if rep.ok() else 1, rep.max_residual,
                            f"null_mass={rep.max_null_mass:.3e}"),
                CheckResult("weights", wrep.contexts,
                            0 if wrep.ok() else 1, wrep.max_abs_error,
                            f"sum_error={wrep.max_sum_error:.3e}"),
            ]
        elif args.suite == "skew":
            rep = comp.skew_report()
            bounded = all(0.0 <= v <= 1.0 for v in
                          (rep.avg1, rep.avg2, rep.avg3))
            checks = [CheckResult(
                "skew_distances", len(rep.free), 0 if bounded else 1,
                max(rep.avg1, rep.avg2, rep.avg3),
                f"avg1={rep.avg1:.6e} avg2={rep.avg2:.6e} "
                f"avg3={rep.avg3:.6e} delta={rep.delta:.6e}")]
        elif args.suite == "xi":
            rep = comp.xi_raz_check(side=args.side)
            checks = [CheckResult(
                "xi_information_bound", len(rep.per_coord),
                0 if rep.ok else 1, rep.avg_mi,
                f"delta={rep.delta:.6e} tight={rep.tight_bound:.6e}")]
        else:
            rep = comp.sampleability_distances()
            ok = rep.max_triangle_slack <= 1e-9
            checks = [CheckResult(
                "sampleability", len(rep.per_coord), 0 if ok else 1,
                rep.max_triangle_slack,
                f"d_alice={rep.d_alice:.6e} d_bob={rep.d_bob:.6e} "
                f"d_cross={rep.d_cross:.6e}")]
    else:
        raise UsageError(f"unknown suite: {args.suite}")

    payload = _suite_payload(args.suite, config, checks)
    _emit(payload, _check_rows(checks),
          ["name", "trials", "violations", "max_slack", "details"],
          args.out)
    return 0 if payload["passed"] else 1


def _run_values(args) -> int:
    g = _load_game(args.game)
    rows = []
    entries = []
    for k in range(1, args.n + 1):
        v = classical_value(g, k)
        entries.append({"n": k, "classical_value": v})
        rows.append([k, repr(v), ""])
    best = seesaw_best(g, args.d, seeds=range(args.seeds),
                       max_iters=500, workers=args.workers)
    entries.append({"n": 1, "seesaw_value": best.value,
                    "iterations": best.iterations})
    rows.append([1, "", repr(best.value)])
    payload = {"version": __version__,
               "config": {"game": args.game, "n": args.n, "d": args.d,
                          "seeds": args.seeds, "seed": args.seed},
               "results": entries}
    _emit(payload, rows, ["n", "classical_value", "seesaw_value"], args.out)
    return 0


def _run_reduction(args) -> int:
    g = _load_game(args.game)
    s = _load_strategy(args.strategy, args.n)
    cfg = ReductionConfig(
        game=g, n=args.n, strategy=s, C=_parse_c(args.C, args.n),
        mode_classical=args.mode_classical, mode_quantum=args.mode_quantum,
        dprime=args.dprime, alpha=args.alpha, seed=args.seed,
        trials=args.trials, max_draws=args.max_draws)
    report = run_reduction(cfg)
    compare = main_bound_compare(report)
    payload = json.loads(report_to_json(report))
    payload["compare"] = compare
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        Path(args.out + ".json").write_text(text + "\n")
        Path(args.out + ".csv").write_text(report_to_csv(report))
        print(f"wrote {args.out}.json and {args.out}.csv")
    else:
        print(text)
    return 0


def _run_bound(args) -> int:
    grid = _parse_n_grid(args.n_grid)
    rows = []
    entries = []
    for n in grid:
        rep = theorem1_bound(args.eps, args.s, n, c=args.c,
                             log_base=args.log_base)
        entries.append({"n": n, "raw_value": rep.raw_value,
                        "bound_value": rep.bound_value,
                        "vacuous": rep.vacuous})
        rows.append([n, repr(rep.raw_value), repr(rep.bound_value),
                     int(rep.vacuous)])
    payload = {"version": __version__,
               "config": {"eps": args.eps, "s": args.s, "c": args.c,
                          "log_base": args.log_base, "n_grid": args.n_grid},
               "results": entries}
    _emit(payload, rows, ["n", "raw_value", "bound_value", "vacuous"],
          args.out)
    return 0


def _run_corrsamp(args) -> int:
    if not 0.0 <= args.tv < 0.25:
        raise UsageError("tv must lie in [0, 0.25) for the 4-point pair")
    names = ("u",)
    base = np.full(4, 0.25)
    # moving tv of mass from one cell to another leaves the total at one
    # and makes the pair's total variation distance exactly tv
    shifted = np.array([0.25 - args.tv, 0.25 + args.tv, 0.25, 0.25])
    p = FiniteDistribution(names, base.copy())
    q = FiniteDistribution(names, shifted)
    stats = corr_sample_experiment(p, q, args.trials, args.seed,
                                   args.max_draws)
    payload = {"version": __version__,
               "config": {"tv": args.tv, "trials": args.trials,
                          "seed": args.seed, "max_draws": args.max_draws},
               "results": {
                   "agree_rate": stats.agree_rate,
                   "fail_rate": stats.fail_rate,
                   "tv_a": stats.tv_a, "tv_b": stats.tv_b,
                   "chi2_pvalue_a": stats.chi2_pvalue_a}}
    rows = [[stats.n_runs, repr(stats.agree_rate), repr(stats.fail_rate),
             repr(stats.tv_a), repr(stats.tv_b)]]
    _emit(payload, rows,
          ["runs", "agree_rate", "fail_rate", "tv_a", "tv_b"], args.out)
    return 0


def cmd_run(args) -> int:
    if args.target == "values":
        return _run_values(args)
    if args.target == "reduction":
        return _run_reduction(args)
    if args.target == "bound":
        return _run_bound(args)
    if args.target == "corrsamp":
        return _run_corrsamp(args)
    raise UsageError(f"unknown run target: {args.target}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repgames",
        description="verification and experiment driver for repeated-game "
                    "strategy analysis")
    parser.add_argument("--config", default=None,
                        help="JSON file of flag defaults; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    ver = sub.add_parser("verify", help="run an assertion suite")
    ver.add_argument("--suite", required=True,
                     help="matcore | entropy | all | usefulness | skew | "
                          "xi | sampleability")
    ver.add_argument("--trials", type=int, default=1000)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--game", default="chsh")
    ver.add_argument("--strategy", default="tsirelson")
    ver.add_argument("--n", type=int, default=2)
    ver.add_argument("--C", default="2",
                     help="1-based coordinate list, e.g. '2' or '1,3'")
    ver.add_argument("--side", default="alice", choices=("alice", "bob"))
    ver.add_argument("--workers", type=int, default=1)
    ver.add_argument("--out", default=None)

    run = sub.add_parser("run", help="run an experiment and emit reports")
    run.add_argument("target",
                     help="values | reduction | bound | corrsamp")
    run.add_argument("--game", default="chsh")
    run.add_argument("--strategy", default="tsirelson")
    run.add_argument("--n", type=int, default=2)
    run.add_argument("--C", default="")
    run.add_argument("--mode", default=None,
                     choices=("exact", "holenstein", "embezzle"),
                     help="shorthand setting both sampling modes")
    run.add_argument("--mode-classical", default="exact_conditional",
                     choices=("exact_conditional", "holenstein"))
    run.add_argument("--mode-quantum", default="oracle_state",
                     choices=("oracle_state", "embezzle"))
    run.add_argument("--dprime", type=int, default=256)
    run.add_argument("--alpha", type=float, default=0.01)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--trials", type=int, default=10000)
    run.add_argument("--max-draws", type=int, default=4000)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--d", type=int, default=2)
    run.add_argument("--seeds", type=int, default=10,
                     help="number of seesaw restarts")
    run.add_argument("--eps", type=float, default=0.25)
    run.add_argument("--s", type=float, default=2.0)
    run.add_argument("--c", type=float, default=1.0)
    run.add_argument("--log-base", type=float, default=2.0)
    run.add_argument("--n-grid", default="2^10..2^40")
    run.add_argument("--tv", type=float, default=0.1)
    run.add_argument("--out", default=None)
    parser.sub_commands = {"verify": ver, "run": run}
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            defaults = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        # defaults must land on the subcommand parsers: each subparser
        # re-applies its own defaults over the shared namespace, so setting
        # them on the top-level parser alone has no effect.
        for sub in parser.sub_commands.values():
            dests = {a.dest for a in sub._actions}
            known = {k: v for k, v in defaults.items() if k in dests}
            if known:
                sub.set_defaults(**known)
        args = parser.parse_args(argv)
    if getattr(args, "mode", None):
        mapping = {"exact": ("exact_conditional", "oracle_state"),
                   "holenstein": ("holenstein", "oracle_state"),
                   "embezzle": ("holenstein", "embezzle")}
        args.mode_classical, args.mode_quantum = mapping[args.mode]
    try:
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_run(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
