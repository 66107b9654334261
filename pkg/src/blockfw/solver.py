"""Block-coordinate loop: select blocks, run a short step chain on each.

Counting follows the usual block-coordinate convention: one block gradient
is charged every time a chain (or a plain FW step) is run on a block, and
one block update every time a block's coordinates actually change.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from blockfw.directions import SELECTORS, DirectionKind
from blockfw.domain import TOL_FEAS, ProductSimplexDomain, clean_block
from blockfw.rng import Stream
from blockfw.ssc import ssc_run

logger = logging.getLogger(__name__)

DESCENT_SLACK = 1e-10
SUFFICIENT_DECREASE_TOL = 1e-9


class Strategy(enum.Enum):
    PARALLEL = "PARALLEL"
    GS = "GS"
    RANDOM = "RANDOM"


class Method(enum.Enum):
    FW = "FW"
    AFW = "AFW"
    PFW = "PFW"
    FDFW = "FDFW"


class Reason(enum.Enum):
    STATIONARY = "STATIONARY"
    BUDGET = "BUDGET"
    MAX_ITER = "MAX_ITER"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    strategy: Strategy = Strategy.PARALLEL
    method: Method = Method.AFW
    use_ssc: bool = True
    tol: float = 1e-6
    max_iter: int = 10_000
    max_grad_evals: int | None = None
    seed: int = 0
    # plain (no-chain) steps use min(alpha_max, slope / (L ||d||^2))
    plain_step_rule: str = "short-step"
    ssc_max_steps: int | None = None
    check_descent: bool = False
    record_traces: bool = False
    record_time: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.max_grad_evals is not None and self.max_grad_evals < 1:
            raise ValueError("max_grad_evals must be positive")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")


@dataclass
class RunResult:
    k: list = field(default_factory=list)
    f: list = field(default_factory=list)
    max_gap: list = field(default_factory=list)
    grad_evals: list = field(default_factory=list)
    block_updates: list = field(default_factory=list)
    l0: list = field(default_factory=list)
    elapsed_ms: list = field(default_factory=list)
    supports: list = field(default_factory=list)  # np.packbits rows, one per recorded iterate
    traces: list = field(default_factory=list)  # (k, block, SSCTrace) when record_traces
    x: np.ndarray | None = None
    reason: Reason | None = None
    capped_chains: int = 0
    n: int = 0

    @property
    def iterations(self) -> int:
        return self.k[-1] if self.k else 0

    @property
    def final_f(self) -> float:
        return self.f[-1]

    def support_matrix(self) -> np.ndarray:
        """Boolean ``(iterations + 1, n)`` support history."""
        if not self.supports:
            return np.zeros((0, self.n), dtype=bool)
        return np.unpackbits(np.vstack(self.supports), axis=1, count=self.n).astype(bool)


def select_blocks(strategy: Strategy, m: int, rng: Stream | None = None, scores=None) -> list[int]:
    """Blocks to update: all, one uniform index, or the best GS score."""
    if strategy is Strategy.PARALLEL:
        return list(range(m))
    if strategy is Strategy.RANDOM:
        return [rng.index(m)]
    if scores is None:
        raise ValueError("GS selection needs per-block scores")
    return [int(np.argmax(scores))]


def block_gaps(x: np.ndarray, g: np.ndarray, offsets) -> np.ndarray:
    """FW gap of every block at once."""
    gaps = np.maximum.reduceat(g, offsets) - np.add.reduceat(g * x, offsets)
    return np.maximum(gaps, 0.0)


class _Objective:
    """Objective wrapper with the checks the solver needs."""

    def __init__(self, problem):
        self.problem = problem
        self.layout = problem.layout
        self.L = float(problem.L)

    def value(self, x):
        v = self.problem.value(x)
        if not math.isfinite(v):
            raise SolverError("objective is not finite")
        return v

    def gradient(self, x):
        g = self.problem.gradient(x)
        if not np.all(np.isfinite(g)):
            raise SolverError("gradient is not finite")
        return g


def _plain_step(x_blk, g_blk, method, L):
    direction = SELECTORS[method](x_blk, g_blk)
    if direction.is_zero:
        return x_blk.copy(), 0.0
    step = min(direction.alpha_max, direction.slope / (L * direction.norm ** 2))
    y = x_blk + step * direction.d
    if step == direction.alpha_max:
        if direction.kind is DirectionKind.FW:
            y = np.zeros_like(x_blk)
            y[direction.vertex] = 1.0
        else:
            y[direction.vertex] = 0.0
    return clean_block(y), step * direction.slope


def _check_chain(obj, x, f_x, sl, trace, k, i):
    L = obj.L
    for y in trace.iterates:
        z = x.copy()
        z[sl] = y
        diff = y - x[sl]
        bound = f_x - 0.5 * L * float(diff @ diff)
        fz = obj.value(z)
        if fz > bound + SUFFICIENT_DECREASE_TOL:
            raise SolverError(
                f"sufficient decrease violated at k={k}, block {i}: f={fz!r} > {bound!r}")


def _block_update(obj, x, g, sl, cfg: SolverConfig):
    """``(y, trace, gain)`` with ``gain`` the linearized progress ``<g, y - x>``."""
    if cfg.use_ssc:
        keep = cfg.check_descent or cfg.record_traces
        y, trace = ssc_run(x[sl], g[sl], cfg.method.value, obj.L, cfg.ssc_max_steps, keep_iterates=keep)
        return y, trace, trace.gain
    y, gain = _plain_step(x[sl], g[sl], cfg.method.value, obj.L)
    return y, None, gain


def run(problem, x0, config: SolverConfig = SolverConfig(), callback=None) -> RunResult:
    """Minimize ``problem`` over its product of simplices starting from ``x0``.

    Stops when the largest block FW gap is at most ``config.tol``, when the
    next iteration would exceed ``max_grad_evals``, or after ``max_iter``
    iterations. ``callback(k, x)``, if given, sees every iterate (read only).
    """
    obj = _Objective(problem)
    layout = obj.layout
    m = layout.m
    slices = layout.slices()
    offsets = np.asarray(layout.offsets)
    domain = ProductSimplexDomain(layout)
    x = np.array(x0, dtype=np.float64)
    if not domain.contains(x):
        raise ValueError("starting point is not feasible")
    for sl in slices:
        if x[sl].min() < 0.0:
            clean_block(x[sl])
    cfg = config
    rng = Stream(cfg.seed, "block-selection")
    cost = 1 if cfg.strategy is Strategy.RANDOM else m

    res = RunResult(n=layout.n)
    grad_evals = 0
    block_updates = 0
    t0 = time.perf_counter()
    f_x = obj.value(x)
    k = 0
    while True:
        g = -obj.gradient(x)
        max_gap = float(np.max(block_gaps(x, g, offsets)))
        res.k.append(k)
        res.f.append(f_x)
        res.max_gap.append(max_gap)
        res.grad_evals.append(grad_evals)
        res.block_updates.append(block_updates)
        mask = domain.support_mask(x)
        res.l0.append(int(mask.sum()))
        res.supports.append(np.packbits(mask))
        res.elapsed_ms.append((time.perf_counter() - t0) * 1e3 if cfg.record_time else 0.0)
        if callback is not None:
            view = x.view()
            view.flags.writeable = False
            callback(k, view)

        if max_gap <= cfg.tol:
            res.reason = Reason.STATIONARY
            break
        if cfg.max_grad_evals is not None and grad_evals + cost > cfg.max_grad_evals:
            res.reason = Reason.BUDGET
            break
        if k >= cfg.max_iter:
            res.reason = Reason.MAX_ITER
            break

        if cfg.strategy is Strategy.GS:
            candidates = [_block_update(obj, x, g, sl, cfg) for sl in slices]
            scores = [gain for _, _, gain in candidates]
            chosen = select_blocks(cfg.strategy, m, scores=scores)
            updates = {i: candidates[i] for i in chosen}
        else:
            chosen = select_blocks(cfg.strategy, m, rng)
            updates = {i: _block_update(obj, x, g, slices[i], cfg) for i in chosen}
        grad_evals += cost

        if cfg.check_descent and cfg.use_ssc:
            for i, (_, trace, _) in updates.items():
                _check_chain(obj, x, f_x, slices[i], trace, k, i)

        x_new = x.copy()
        for i, (y, trace, _) in updates.items():
            if trace is not None:
                if trace.capped:
                    res.capped_chains += 1
                    logger.warning("chain on block %d hit the step cap at iteration %d", i, k)
                if cfg.record_traces:
                    res.traces.append((k, i, trace))
            if not np.array_equal(y, x[slices[i]]):
                block_updates += 1
                x_new[slices[i]] = y
        f_new = obj.value(x_new)
        if f_new > f_x + DESCENT_SLACK:
            raise SolverError(f"objective increased at iteration {k}: {f_x!r} -> {f_new!r}")
        x, f_x = x_new, f_new
        k += 1

    res.x = x
    return res


TRAJECTORY_COLUMNS = ["run_id", "k", "grad_evals", "block_updates", "f", "max_gap", "l0_norm", "elapsed_ms"]


def _g17(v) -> str:
    return f"{v:.17g}"


def write_trajectory_csv(path, results, run_ids=None):
    """Write one or more runs to a trajectory CSV."""
    if isinstance(results, RunResult):
        results = [results]
    if run_ids is None:
        run_ids = list(range(len(results)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for rid, res in zip(run_ids, results):
            for row in zip(res.k, res.grad_evals, res.block_updates, res.f, res.max_gap, res.l0, res.elapsed_ms):
                k, ge, bu, f, gap, l0, ms = row
                w.writerow([rid, k, ge, bu, _g17(f), _g17(gap), l0, _g17(ms)])


def write_trace_csv(path, res: RunResult):
    """SSC sidecar: one line per inner step."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "block", "j", "kind", "alpha", "beta", "alpha_max", "unit_slope", "termination"])
        for k, i, trace in res.traces:
            for j, st in enumerate(trace.steps):
                w.writerow([k, i, j, st.kind.value, _g17(st.alpha), _g17(st.beta),
                            _g17(st.alpha_max), _g17(st.unit_slope), trace.reason.value])


def feasible(x, layout, tol=TOL_FEAS) -> bool:
    return ProductSimplexDomain(layout).contains(x, tol)
