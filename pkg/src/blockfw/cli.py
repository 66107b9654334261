"""Command line front-end: ``blockfw {gen,solve,multistart,mbh,report}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from blockfw.diagnostics import run_diagnostics, write_diagnostics_csv
from blockfw.domain import ProductSimplexDomain
from blockfw.globalopt import (ALGORITHMS, MBHConfig, algorithm_config, mbh_campaign, multistart_run,
                               write_aggregate_csv)
from blockfw.problems import InstanceFormatError, gen_multistqp, load_instance, save_instance
from blockfw.rng import Stream
from blockfw.solver import Reason, run, write_trace_csv, write_trajectory_csv

logger = logging.getLogger("blockfw")


def _algorithm_table() -> str:
    lines = ["algorithm ids:"]
    for name, cfg in ALGORITHMS.items():
        ssc = "SSC" if cfg.use_ssc else "no SSC, single short FW step"
        lines.append(f"  {name:<10} strategy={cfg.strategy.value:<8} method={cfg.method.value:<4} {ssc}")
    return "\n".join(lines)


class _Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def _alg_list(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    for name in names:
        if name not in ALGORITHMS:
            raise argparse.ArgumentTypeError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockfw", description=__doc__, epilog=_algorithm_table(),
                                     formatter_class=_Formatter)
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a Multi-StQP instance file", formatter_class=_Formatter)
    p.add_argument("--l", type=int, required=True, help="simplex dimension per block")
    p.add_argument("--m", type=int, required=True, help="number of blocks")
    p.add_argument("--seed", type=int, default=0, help="instance seed")
    p.add_argument("--epsilon", type=float, default=None, help="coupling weight (default 1/(2 m^2))")
    p.add_argument("--out", required=True, help="output instance path")

    p = sub.add_parser("solve", help="run one solver and write its trajectory CSV",
                       formatter_class=_Formatter, epilog=_algorithm_table())
    p.add_argument("--instance", default=None, help="instance file; otherwise generated from --l/--m/--instance-seed")
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--instance-seed", type=int, default=0)
    p.add_argument("--algorithm", default="pafw-ssc", choices=list(ALGORITHMS))
    p.add_argument("--budget-grads", type=int, default=None, help="block gradient budget")
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=1e-6, help="stationarity tolerance on the max block FW gap")
    p.add_argument("--seed", type=int, default=0, help="seed for the start point and block sampling")
    p.add_argument("--start", choices=["uniform", "barycenter"], default="uniform")
    p.add_argument("--check-descent", action="store_true", help="verify sufficient decrease at every chain step")
    p.add_argument("--record-time", action="store_true", help="fill elapsed_ms (output no longer reproducible)")
    p.add_argument("--out", required=True, help="trajectory CSV path")
    p.add_argument("--trace-out", default=None, help="optional chain trace sidecar CSV")
    p.add_argument("--diag-out", default=None, help="optional diagnostics CSV")

    p = sub.add_parser("multistart", help="multistart campaign on generated instances",
                       formatter_class=_Formatter, epilog=_algorithm_table())
    p.add_argument("--l", type=int, default=20)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--objective-seeds", type=int, default=5, help="number of random objectives")
    p.add_argument("--start-seeds", type=int, default=4, help="starting points per objective")
    p.add_argument("--algorithms", type=_alg_list, default="bcfw,pafw-ssc,bcafw-ssc")
    p.add_argument("--budget-grads", type=int, default=None, help="shared block gradient budget (default 50 m)")
    p.add_argument("--axis", choices=["grad_evals", "block_updates"], default="grad_evals")
    p.add_argument("--tick-step", type=int, default=1)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=None, help="coupling weight (default 1/(2 m^2))")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--replay", default=None, help="manifest to replay; overrides the campaign flags")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("mbh", help="monotonic basin hopping campaign",
                       formatter_class=_Formatter, epilog=_algorithm_table())
    p.add_argument("--l", type=int, default=20)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--objective-seeds", type=int, default=1, help="number of random objectives")
    p.add_argument("--runs", type=int, default=10, help="basin hopping runs per objective")
    p.add_argument("--i-max", type=int, default=9)
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--lo-budget", type=int, default=None, help="gradient budget per local search (default 10 m)")
    p.add_argument("--algorithms", type=_alg_list, default="bcfw,pafw-ssc,bcafw-ssc")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=None, help="coupling weight (default 1/(2 m^2))")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--replay", default=None, help="manifest to replay; overrides the campaign flags")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("report", help="turn aggregate CSVs into one long-format CSV", formatter_class=_Formatter)
    p.add_argument("--inputs", nargs="+", required=True, help="aggregate CSV files")
    p.add_argument("--out", required=True, help="long-format CSV path")
    return parser


def objective_seed_list(master_seed: int, count: int) -> list[int]:
    return [master_seed * 1000 + i for i in range(count)]


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v)
    return "none" if v is None else str(v)


def write_manifest(path, entries: dict) -> None:
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={_fmt_value(value)}\n")


def read_manifest(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key] = value
    return out


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _opt_float(text: str):
    return None if text == "none" else float(text)


def _executor(jobs: int):
    return ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None


def _status_entries(keys, failed) -> dict:
    out = {}
    for key in keys:
        label = "run." + ".".join(str(k) for k in key)
        out[label] = "failed: " + failed[key] if key in failed else "ok"
    return out


def cmd_gen(args) -> int:
    problem = gen_multistqp(args.l, args.m, args.seed, epsilon=args.epsilon)
    save_instance(problem, args.out)
    return 0


def cmd_solve(args) -> int:
    if args.instance is not None:
        problem = load_instance(args.instance)
    elif args.l is not None and args.m is not None:
        problem = gen_multistqp(args.l, args.m, args.instance_seed)
    else:
        raise ValueError("give --instance or both --l and --m")
    domain = ProductSimplexDomain(problem.layout)
    if args.start == "uniform":
        x0 = domain.sample_uniform(Stream(args.seed, "solve-start"))
    else:
        x0 = domain.barycenter()
    cfg = algorithm_config(args.algorithm, max_grad_evals=args.budget_grads, max_iter=args.max_iter,
                           tol=args.tol, seed=args.seed, check_descent=args.check_descent,
                           record_traces=args.trace_out is not None, record_time=args.record_time)
    res = run(problem, x0, cfg)
    write_trajectory_csv(args.out, res, [args.algorithm])
    if args.trace_out:
        write_trace_csv(args.trace_out, res)
    if args.diag_out:
        write_diagnostics_csv(args.diag_out, [run_diagnostics(problem, res)], [args.algorithm])
    return 0 if res.reason in (Reason.STATIONARY, Reason.BUDGET) else 1


def _multistart_params(args) -> dict:
    if args.replay:
        man = read_manifest(args.replay)
        if man.get("command") != "multistart":
            raise ValueError(f"{args.replay}: not a multistart manifest")
        return dict(l=int(man["l"]), m=int(man["m"]), objective_seeds=_int_list(man["objective_seeds"]),
                    start_seeds=_int_list(man["start_seeds"]), algorithms=man["algorithms"].split(","),
                    budget=int(man["budget_grads"]), master_seed=int(man["master_seed"]),
                    axis=man["axis"], tick_step=int(man["tick_step"]), epsilon=_opt_float(man["epsilon"]))
    return dict(l=args.l, m=args.m, objective_seeds=objective_seed_list(args.master_seed, args.objective_seeds),
                start_seeds=list(range(args.start_seeds)), algorithms=args.algorithms,
                budget=args.budget_grads if args.budget_grads is not None else 50 * args.m,
                master_seed=args.master_seed, axis=args.axis, tick_step=args.tick_step, epsilon=args.epsilon)


def cmd_multistart(args) -> int:
    prm = _multistart_params(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    algorithms = {name: ALGORITHMS[name] for name in prm["algorithms"]}
    pool = _executor(args.jobs)
    try:
        res = multistart_run(prm["l"], prm["m"], prm["objective_seeds"], prm["start_seeds"], algorithms,
                             prm["budget"], master_seed=prm["master_seed"], axis=prm["axis"],
                             epsilon=prm["epsilon"], tick_step=prm["tick_step"],
                             runner=pool.map if pool else None, skip_failures=True)
    finally:
        if pool:
            pool.shutdown()
    write_aggregate_csv(out / "aggregate.csv", res.aggregates.values())
    keys = [(o, s, a) for o in prm["objective_seeds"] for s in prm["start_seeds"] for a in prm["algorithms"]]
    done = [k for k in keys if k in res.runs]
    write_trajectory_csv(out / "trajectories.csv", [res.runs[k] for k in done],
                         [f"{o}-{s}-{a}" for o, s, a in done])
    manifest = dict(command="multistart", l=prm["l"], m=prm["m"], objective_seeds=prm["objective_seeds"],
                    start_seeds=prm["start_seeds"], algorithms=prm["algorithms"], budget_grads=prm["budget"],
                    master_seed=prm["master_seed"], axis=prm["axis"], tick_step=prm["tick_step"],
                    epsilon=prm["epsilon"], gap_offset=1e-5, complete=not res.failed)
    manifest.update({f"f_ref.{o}": v for o, v in res.f_ref.items()})
    manifest.update(_status_entries(keys, res.failed))
    write_manifest(out / "manifest.txt", manifest)
    if res.failed:
        for key, msg in res.failed.items():
            logger.error("run %s failed: %s", key, msg)
        return 1
    return 0


def _mbh_params(args) -> dict:
    if args.replay:
        man = read_manifest(args.replay)
        if man.get("command") != "mbh":
            raise ValueError(f"{args.replay}: not an mbh manifest")
        return dict(l=int(man["l"]), m=int(man["m"]), objective_seeds=_int_list(man["objective_seeds"]),
                    runs=int(man["runs"]), i_max=int(man["i_max"]), gamma=float(man["gamma"]),
                    lo_budget=int(man["lo_budget"]), algorithms=man["algorithms"].split(","),
                    master_seed=int(man["master_seed"]), epsilon=_opt_float(man["epsilon"]))
    return dict(l=args.l, m=args.m, objective_seeds=objective_seed_list(args.master_seed, args.objective_seeds),
                runs=args.runs, i_max=args.i_max, gamma=args.gamma,
                lo_budget=args.lo_budget if args.lo_budget is not None else 10 * args.m,
                algorithms=args.algorithms, master_seed=args.master_seed, epsilon=args.epsilon)


def cmd_mbh(args) -> int:
    prm = _mbh_params(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    algorithms = {name: ALGORITHMS[name] for name in prm["algorithms"]}
    cfg = MBHConfig(i_max=prm["i_max"], gamma=prm["gamma"], lo_budget=prm["lo_budget"])
    pool = _executor(args.jobs)
    try:
        res = mbh_campaign(prm["l"], prm["m"], prm["objective_seeds"], prm["runs"], algorithms, cfg,
                           master_seed=prm["master_seed"], epsilon=prm["epsilon"],
                           runner=pool.map if pool else None, skip_failures=True)
    finally:
        if pool:
            pool.shutdown()
    write_aggregate_csv(out / "aggregate.csv", res.aggregates.values())
    keys = [(o, r, a) for o in prm["objective_seeds"] for r in range(prm["runs"]) for a in prm["algorithms"]]
    with open(out / "incumbents.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["objective_seed", "run", "algorithm_id", "i", "f_incumbent", "l0", "lo_grad_evals"])
        for key in keys:
            if key not in res.runs:
                continue
            mres = res.runs[key]
            for i, (f, l0, lo) in enumerate(zip(mres.incumbent, mres.incumbent_l0, mres.lo_results)):
                w.writerow([*key, i, f"{f:.17g}", l0, lo.grad_evals[-1]])
    manifest = dict(command="mbh", l=prm["l"], m=prm["m"], objective_seeds=prm["objective_seeds"],
                    runs=prm["runs"], i_max=prm["i_max"], gamma=prm["gamma"], lo_budget=prm["lo_budget"],
                    algorithms=prm["algorithms"], master_seed=prm["master_seed"], epsilon=prm["epsilon"],
                    gap_offset=1e-1, complete=not res.failed)
    manifest.update({f"lo_calls.{o}.{r}.{a}": res.runs[(o, r, a)].lo_calls for (o, r, a) in keys
                     if (o, r, a) in res.runs})
    manifest.update({f"f_ref.{o}": v for o, v in res.f_ref.items()})
    manifest.update(_status_entries(keys, res.failed))
    write_manifest(out / "manifest.txt", manifest)
    if res.failed:
        for key, msg in res.failed.items():
            logger.error("run %s failed: %s", key, msg)
        return 1
    return 0


def cmd_report(args) -> int:
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "algorithm_id", "axis_tick", "metric", "mean", "std"])
        for src in args.inputs:
            with open(src, newline="") as inp:
                for row in csv.DictReader(inp):
                    for metric in ("gap", "l0"):
                        w.writerow([src, row["algorithm_id"], row["axis_tick"], metric,
                                    row[f"mean_{metric}"], row[f"std_{metric}"]])
    return 0


COMMANDS = dict(gen=cmd_gen, solve=cmd_solve, multistart=cmd_multistart, mbh=cmd_mbh, report=cmd_report)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, InstanceFormatError, OSError) as exc:
        print(f"blockfw {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
