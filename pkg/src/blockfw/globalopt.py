"""Multistart and monotonic basin hopping around the block-coordinate solver."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from blockfw.domain import ProductSimplexDomain
from blockfw.problems import gen_multistqp
from blockfw.rng import Stream
from blockfw.solver import Method, RunResult, SolverConfig, Strategy, run

MULTISTART_OFFSET = 1e-5
MBH_OFFSET = 1e-1

ALGORITHMS = {
    "bcfw": SolverConfig(Strategy.RANDOM, Method.FW, use_ssc=False),
    "bcafw-ssc": SolverConfig(Strategy.RANDOM, Method.AFW),
    "pafw-ssc": SolverConfig(Strategy.PARALLEL, Method.AFW),
    "gsafw-ssc": SolverConfig(Strategy.GS, Method.AFW),
    "pfw-ssc": SolverConfig(Strategy.RANDOM, Method.PFW),
    "fdfw-ssc": SolverConfig(Strategy.RANDOM, Method.FDFW),
}


def algorithm_config(name: str, **overrides) -> SolverConfig:
    try:
        cfg = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return replace(cfg, **overrides)


def gap_reference(final_values, offset: float) -> float:
    """Estimated global optimum: best value found minus ``offset``."""
    return float(min(final_values)) - offset


def perturb(x_best: np.ndarray, gamma: float, layout, rng: Stream) -> np.ndarray:
    """Random point of ``{x + gamma (y - x) : y in C}`` with ``y`` uniform on ``C``."""
    y = ProductSimplexDomain(layout).sample_uniform(rng)
    return x_best + gamma * (y - x_best)


@dataclass(frozen=True)
class MBHConfig:
    i_max: int = 9
    gamma: float = 0.25
    lo_budget: int | None = None  # defaults to 10 * m
    seed: int = 0
    solver: SolverConfig = field(default_factory=lambda: ALGORITHMS["pafw-ssc"])

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.i_max < 0:
            raise ValueError("i_max must be nonnegative")

    def budget_for(self, m: int) -> int:
        return 10 * m if self.lo_budget is None else self.lo_budget


@dataclass
class MBHResult:
    x_best: np.ndarray
    incumbent: list  # f of the best point after each local optimization
    lo_results: list
    lo_calls: int
    incumbent_l0: list

    @property
    def f_best(self) -> float:
        return self.incumbent[-1]


def mbh_run(problem, cfg: MBHConfig = MBHConfig()) -> MBHResult:
    """Monotonic basin hopping: local search, keep the best, perturb it, repeat."""
    layout = problem.layout
    domain = ProductSimplexDomain(layout)
    rng = Stream(cfg.seed, "mbh")
    budget = cfg.budget_for(layout.m)
    start = domain.sample_uniform(rng)
    best_x = start
    best_f = problem.value(start)
    incumbent, incumbent_l0, lo_results = [], [], []
    for i in range(cfg.i_max + 1):
        solver_cfg = replace(cfg.solver, max_grad_evals=budget, seed=cfg.seed * 1000 + i)
        res = run(problem, start, solver_cfg)
        lo_results.append(res)
        if res.final_f < best_f:
            best_x, best_f = res.x, res.final_f
        incumbent.append(best_f)
        incumbent_l0.append(domain.l0(best_x))
        if i == cfg.i_max:
            break
        start = perturb(best_x, cfg.gamma, layout, rng)
    return MBHResult(best_x, incumbent, lo_results, len(lo_results), incumbent_l0)


@dataclass
class AggregateTrajectory:
    algorithm_id: str
    ticks: np.ndarray
    mean_gap: np.ndarray
    std_gap: np.ndarray
    mean_l0: np.ndarray
    std_l0: np.ndarray
    f_ref: dict  # objective seed -> gap reference


def step_values(res: RunResult, ticks, axis: str = "grad_evals"):
    """Value of f and l0 at each tick: the last recorded state at or before it."""
    xs = np.asarray(res.grad_evals if axis == "grad_evals" else res.block_updates)
    idx = np.searchsorted(xs, ticks, side="right") - 1
    idx = np.clip(idx, 0, len(xs) - 1)
    return np.asarray(res.f)[idx], np.asarray(res.l0)[idx]


def aggregate(algorithm_id, runs, f_ref, ticks, axis="grad_evals") -> AggregateTrajectory:
    """Mean/std over runs; ``runs`` is a list of ``(objective_seed, RunResult)``."""
    gaps, l0s = [], []
    for obj_seed, res in runs:
        f, l0 = step_values(res, ticks, axis)
        gaps.append(f - f_ref[obj_seed])
        l0s.append(l0.astype(np.float64))
    gaps, l0s = np.array(gaps), np.array(l0s)
    return AggregateTrajectory(algorithm_id, np.asarray(ticks), gaps.mean(0), gaps.std(0),
                               l0s.mean(0), l0s.std(0), dict(f_ref))


def start_point(layout, master_seed: int, objective_seed: int, start_seed: int) -> np.ndarray:
    rng = Stream(master_seed, "starts", objective_seed, start_seed)
    return ProductSimplexDomain(layout).sample_uniform(rng)


@dataclass
class MultistartResult:
    aggregates: dict  # algorithm_id -> AggregateTrajectory
    runs: dict  # (objective_seed, start_seed, algorithm_id) -> RunResult
    f_ref: dict
    failed: dict = field(default_factory=dict)  # key -> error message


def multistart_run(l: int, m: int, objective_seeds, start_seeds, algorithms, budget: int,
                   master_seed: int = 0, axis: str = "grad_evals", epsilon=None,
                   tick_step: int | None = None, solver_overrides=None,
                   runner=None, skip_failures: bool = False) -> MultistartResult:
    """Run every (objective, start, algorithm) triple under a shared budget.

    ``algorithms`` maps ids to :class:`SolverConfig`. The gap reference for
    an objective is the best final value over all its runs minus ``1e-5``.
    ``runner`` may replace the serial loop (e.g. a process pool ``map``);
    results are consumed in the fixed task order either way. With
    ``skip_failures`` a crashing run is recorded in ``failed`` and left out
    of the aggregates instead of aborting the campaign.
    """
    if not objective_seeds or not start_seeds:
        raise ValueError("need at least one objective seed and one start seed")
    solver_overrides = solver_overrides or {}
    tasks = []
    for os_ in objective_seeds:
        for ss in start_seeds:
            for alg, cfg in algorithms.items():
                cfg = replace(cfg, max_grad_evals=budget,
                              seed=master_seed * 1_000_003 + os_ * 1009 + ss, **solver_overrides)
                tasks.append((l, m, os_, ss, alg, cfg, master_seed, epsilon))
    task_fn = _guarded_multistart if skip_failures else _multistart_task
    outputs = list((runner or map)(task_fn, tasks))
    runs, failed = _split_failures([(t[2], t[3], t[4]) for t in tasks], outputs)
    f_ref = {os_: gap_reference([r.final_f for (o, _, _), r in runs.items() if o == os_], MULTISTART_OFFSET)
             for os_ in objective_seeds if any(o == os_ for (o, _, _) in runs)}
    if tick_step is None:
        tick_step = 1
    top = budget if axis == "grad_evals" else max((r.block_updates[-1] for r in runs.values()), default=0)
    ticks = np.arange(0, top + 1, tick_step)
    aggregates = {}
    for alg in algorithms:
        sel = [(o, r) for (o, _, a), r in runs.items() if a == alg]
        if sel:
            aggregates[alg] = aggregate(alg, sel, f_ref, ticks, axis)
    return MultistartResult(aggregates, runs, f_ref, failed)


def _split_failures(keys, outputs):
    runs, failed = {}, {}
    for key, out in zip(keys, outputs):
        if isinstance(out, _Failure):
            failed[key] = out.message
        else:
            runs[key] = out
    return runs, failed


@dataclass(frozen=True)
class _Failure:
    message: str


def _guarded_multistart(task):
    try:
        return _multistart_task(task)
    except Exception as exc:  # a failed run must not sink the campaign
        return _Failure(f"{type(exc).__name__}: {exc}")


def _guarded_mbh(task):
    try:
        return _mbh_task(task)
    except Exception as exc:
        return _Failure(f"{type(exc).__name__}: {exc}")


def _multistart_task(task):
    l, m, os_, ss, alg, cfg, master_seed, epsilon = task
    problem = gen_multistqp(l, m, os_, epsilon=epsilon)
    x0 = start_point(problem.layout, master_seed, os_, ss)
    return run(problem, x0, cfg)


@dataclass
class MBHCampaignResult:
    aggregates: dict  # algorithm_id -> AggregateTrajectory over LO calls
    runs: dict  # (objective_seed, run_index, algorithm_id) -> MBHResult
    f_ref: dict
    failed: dict = field(default_factory=dict)


def mbh_campaign(l: int, m: int, objective_seeds, n_runs: int, algorithms, cfg: MBHConfig = MBHConfig(),
                 master_seed: int = 0, epsilon=None, runner=None,
                 skip_failures: bool = False) -> MBHCampaignResult:
    """Repeated basin hopping runs; the gap reference is the best incumbent minus ``1e-1``.

    The aggregate axis is the local-optimization index ``i = 0..i_max``.
    """
    if not objective_seeds or n_runs < 1:
        raise ValueError("need at least one objective seed and one run")
    tasks = []
    for os_ in objective_seeds:
        for r in range(n_runs):
            for alg, solver_cfg in algorithms.items():
                run_cfg = replace(cfg, solver=solver_cfg,
                                  seed=master_seed * 1_000_003 + os_ * 1009 + r)
                tasks.append((l, m, os_, r, alg, run_cfg, epsilon))
    outputs = list((runner or map)(_guarded_mbh if skip_failures else _mbh_task, tasks))
    runs, failed = _split_failures([(t[2], t[3], t[4]) for t in tasks], outputs)
    f_ref = {os_: gap_reference([res.f_best for (o, _, _), res in runs.items() if o == os_], MBH_OFFSET)
             for os_ in objective_seeds if any(o == os_ for (o, _, _) in runs)}
    ticks = np.arange(cfg.i_max + 1)
    aggregates = {}
    for alg in algorithms:
        if not any(a == alg for (_, _, a) in runs):
            continue
        gaps = np.array([np.asarray(res.incumbent) - f_ref[o] for (o, _, a), res in runs.items() if a == alg])
        l0s = np.array([res.incumbent_l0 for (o, _, a), res in runs.items() if a == alg], dtype=np.float64)
        aggregates[alg] = AggregateTrajectory(alg, ticks, gaps.mean(0), gaps.std(0),
                                              l0s.mean(0), l0s.std(0), dict(f_ref))
    return MBHCampaignResult(aggregates, runs, f_ref, failed)


def _mbh_task(task):
    l, m, os_, r, alg, cfg, epsilon = task
    problem = gen_multistqp(l, m, os_, epsilon=epsilon)
    return mbh_run(problem, cfg)


AGGREGATE_COLUMNS = ["axis_tick", "mean_gap", "std_gap", "mean_l0", "std_l0", "algorithm_id"]


def write_aggregate_csv(path, aggregates):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for agg in aggregates:
            for row in zip(agg.ticks, agg.mean_gap, agg.std_gap, agg.mean_l0, agg.std_l0):
                t, mg, sg, ml, sl = row
                w.writerow([int(t), f"{mg:.17g}", f"{sg:.17g}", f"{ml:.17g}", f"{sl:.17g}", agg.algorithm_id])
