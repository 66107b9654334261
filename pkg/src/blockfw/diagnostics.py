"""Post-run diagnostics: multipliers, complementarity, support identification, rate fits."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from blockfw.domain import support_mask

COMPLEMENTARITY_TOL = 1e-6
RATE_FLOOR = 1e-12


def multipliers(x: np.ndarray, grad: np.ndarray, layout) -> list[np.ndarray]:
    """Per-block ``grad_i - <grad_i, x_i> * 1``.

    These are nonnegative at a local minimizer, and vanish on its support.
    """
    return [grad[sl] - float(grad[sl] @ x[sl]) for sl in layout.slices()]


def strict_complementarity(x, grad, layout, tol: float = COMPLEMENTARITY_TOL) -> list[bool]:
    flags = []
    for sl, lam in zip(layout.slices(), multipliers(x, grad, layout)):
        off = ~support_mask(x[sl])
        flags.append(bool(np.all(lam[off] > tol)))
    return flags


def identification_iteration(supports) -> int | None:
    """First index from which the support never changes again.

    ``supports`` is a sequence of per-iterate support snapshots (boolean or
    packed rows). Returns ``None`` when the last two snapshots differ, i.e.
    nothing suggests the support has settled.
    """
    rows = [np.asarray(s) for s in supports]
    if not rows:
        return None
    if len(rows) >= 2 and not np.array_equal(rows[-1], rows[-2]):
        return None
    k = len(rows) - 1
    while k > 0 and np.array_equal(rows[k - 1], rows[-1]):
        k -= 1
    return k


@dataclass(frozen=True)
class RateFit:
    q_hat: float
    r_squared: float
    start: int
    stop: int


def rate_fit(gaps, min_points: int = 3) -> RateFit | None:
    """Fit ``gap_k ~ C q^k`` by least squares on ``log(gap)``.

    The window starts once the gap has dropped a decade below ``gap_0`` (the
    whole sequence if it never does) and ends before the gap falls under
    ``1e-12``. Returns ``None`` if fewer than ``min_points`` remain.
    """
    gaps = np.asarray(gaps, dtype=np.float64)
    if len(gaps) == 0 or gaps[0] <= 0:
        return None
    below = np.flatnonzero(gaps <= gaps[0] / 10.0)
    start = int(below[0]) if below.size else 0
    floor = np.flatnonzero(gaps < RATE_FLOOR)
    stop = int(floor[0]) if floor.size else len(gaps)
    if stop - start < min_points:
        return None
    ks = np.arange(start, stop, dtype=np.float64)
    ys = np.log(gaps[start:stop])
    slope, intercept = np.polyfit(ks, ys, 1)
    resid = ys - (slope * ks + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    # a flat sequence is fit exactly by slope 0
    r2 = 1.0 if ss_tot <= 1e-20 * len(ys) else 1.0 - ss_res / ss_tot
    return RateFit(float(np.exp(slope)), r2, start, stop)


def run_diagnostics(problem, result, f_star: float | None = None) -> dict:
    """Summary row for one finished run."""
    x = result.x
    grad = problem.gradient(x)
    k_id = identification_iteration(result.supports)
    flags = strict_complementarity(x, grad, problem.layout)
    if f_star is None:
        f_star = min(result.f)
    fit = rate_fit(np.asarray(result.f) - f_star)
    return dict(
        k_id=k_id,
        final_l0=result.l0[-1],
        strict_complementarity=flags,
        q_hat=None if fit is None else fit.q_hat,
        r_squared=None if fit is None else fit.r_squared,
    )


def write_diagnostics_csv(path, rows, run_ids=None):
    if run_ids is None:
        run_ids = list(range(len(rows)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "k_id", "final_l0", "strict_complementarity", "q_hat", "r_squared"])
        for rid, row in zip(run_ids, rows):
            sc = "".join("1" if b else "0" for b in row["strict_complementarity"])
            w.writerow([
                rid,
                "NONE" if row["k_id"] is None else row["k_id"],
                row["final_l0"],
                sc,
                "NONE" if row["q_hat"] is None else f"{row['q_hat']:.17g}",
                "NONE" if row["r_squared"] is None else f"{row['r_squared']:.17g}",
            ])
