"""Quadratic objectives on products of simplices and the Multi-StQP generator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from blockfw.blockvec import BlockLayout
from blockfw.rng import Stream

ALPHA = 0.5
L_SAFETY = 1.01
L_FLOOR = 1e-8
POWER_ITERS = 200
POWER_RTOL = 1e-10
POWER_SEED = 0


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed."""


def lipschitz_estimate(Qs: np.ndarray, seed: int = POWER_SEED) -> float:
    """``1.01 * ||2 Qs||_2`` by power iteration, floored at ``L_FLOOR``."""
    A = 2.0 * np.asarray(Qs, dtype=np.float64)
    n = A.shape[0]
    v = Stream(seed, "power-iteration", n).standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(POWER_ITERS):
        w = A @ v
        new = float(np.linalg.norm(w))
        if new == 0.0 or not math.isfinite(new):
            est = new
            break
        v = w / new
        if abs(new - est) <= POWER_RTOL * new:
            est = new
            break
        est = new
    return max(L_SAFETY * est, L_FLOOR)


@dataclass(frozen=True)
class QuadraticProblem:
    """``f(x) = x^T Q x`` on a product of simplices."""

    Q: np.ndarray
    layout: BlockLayout
    meta: dict = field(default_factory=dict)
    Qs: np.ndarray = field(init=False, repr=False)
    L: float = field(init=False)

    def __post_init__(self):
        Q = np.array(self.Q, dtype=np.float64)
        n = self.layout.n
        if Q.shape != (n, n):
            raise ValueError(f"Q has shape {Q.shape}, layout needs ({n}, {n})")
        Q.flags.writeable = False
        Qs = 0.5 * (Q + Q.T)
        Qs.flags.writeable = False
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "Qs", Qs)
        object.__setattr__(self, "L", lipschitz_estimate(Qs))

    @property
    def n(self) -> int:
        return self.layout.n

    def value(self, x: np.ndarray) -> float:
        return eval_f(self, x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return eval_grad(self, x)


def eval_f(p: QuadraticProblem, x: np.ndarray) -> float:
    val = float(x @ (p.Qs @ x))
    if not math.isfinite(val):
        raise FloatingPointError("objective is not finite")
    return val


def eval_grad(p: QuadraticProblem, x: np.ndarray) -> np.ndarray:
    g = 2.0 * (p.Qs @ x)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("gradient is not finite")
    return g


def clique_size(l: int) -> int:
    """Nearest integer to ``0.4 l`` (never a tie for integer ``l``), at least 2 once ``l >= 3``."""
    s = (4 * l + 5) // 10
    if l >= 3:
        s = max(s, 2)
    return s


def clique_density_p(l: int) -> float:
    """Edge probability making the expected number of ``s``-cliques equal to one.

    ``binom(l, s) * p**(s(s-1)/2) = 1`` gives
    ``p = binom(l, s) ** (-2 / (s (s - 1)))``.
    """
    s = clique_size(l)
    if s < 2:
        raise ValueError(f"clique size s={s} < 2: l={l} is too small")
    log_binom = math.lgamma(l + 1) - math.lgamma(s + 1) - math.lgamma(l - s + 1)
    p = math.exp(-2.0 * log_binom / (s * (s - 1)))
    return min(max(p, np.nextafter(0.0, 1.0)), 1.0)


def erdos_renyi_adjacency(l: int, p: float, rng: Stream) -> np.ndarray:
    iu = np.triu_indices(l, k=1)
    A = np.zeros((l, l))
    A[iu] = (rng.uniform(len(iu[0])) < p).astype(np.float64)
    return A + A.T


def gen_multistqp(l: int, m: int, seed: int, epsilon: float | None = None,
                  alpha: float = ALPHA) -> QuadraticProblem:
    """Random Multi-StQP instance on ``(Delta^l)^m``.

    ``Q = blockdiag(-(A_i + alpha I) / m) + epsilon * G`` with ``A_i``
    Erdos-Renyi adjacency matrices and ``G`` an ``n x n`` standard Gaussian
    matrix. ``epsilon`` defaults to ``1 / (2 m^2)``.
    """
    if l < 3:
        clique_density_p(l)  # raises the s < 2 error
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    p = clique_density_p(l)
    if epsilon is None:
        epsilon = 1.0 / (2.0 * m * m)
    rng = Stream(seed, "instance")
    n = l * m
    Qbar = np.zeros((n, n))
    weights = [1.0 / m] * m
    for i in range(m):
        A = erdos_renyi_adjacency(l, p, rng)
        blk = slice(i * l, (i + 1) * l)
        Qbar[blk, blk] = -weights[i] * (A + alpha * np.eye(l))
    Q = Qbar + epsilon * rng.standard_normal(n * n).reshape(n, n)
    meta = dict(l=l, m=m, seed=seed, epsilon=epsilon, alpha=alpha, p=p, weights=weights)
    return QuadraticProblem(Q, BlockLayout.uniform(l, m), meta)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def save_instance(p: QuadraticProblem, path) -> None:
    meta = p.meta
    lines = ["MSTQP 1",
             f"{meta['l']} {meta['m']} {meta['seed']} {_fmt(meta['epsilon'])} {_fmt(meta['alpha'])}"]
    lines.extend(" ".join(_fmt(v) for v in row) for row in p.Q)
    Path(path).write_text("\n".join(lines) + "\n")


def load_instance(path) -> QuadraticProblem:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].split() != ["MSTQP", "1"]:
        raise InstanceFormatError("line 1: expected header 'MSTQP 1'")
    if len(lines) < 2:
        raise InstanceFormatError("line 2: missing 'l m seed epsilon alpha'")
    head = lines[1].split()
    if len(head) != 5:
        raise InstanceFormatError(f"line 2: expected 5 fields, got {len(head)}")
    try:
        l, m, seed = int(head[0]), int(head[1]), int(head[2])
        epsilon, alpha = float(head[3]), float(head[4])
    except ValueError as exc:
        raise InstanceFormatError(f"line 2: {exc}") from None
    if l < 1 or m < 1:
        raise InstanceFormatError(f"line 2: l and m must be positive, got l={l} m={m}")
    n = l * m
    Q = np.empty((n, n))
    for r in range(n):
        lineno = r + 3
        if lineno > len(lines):
            raise InstanceFormatError(f"line {lineno}: missing row {r + 1} of {n}")
        toks = lines[lineno - 1].split()
        if len(toks) != n:
            raise InstanceFormatError(f"line {lineno}: expected {n} values, got {len(toks)}")
        try:
            Q[r] = [float(t) for t in toks]
        except ValueError as exc:
            raise InstanceFormatError(f"line {lineno}: {exc}") from None
    extra = [i + 1 for i in range(n + 2, len(lines)) if lines[i].strip()]
    if extra:
        raise InstanceFormatError(f"line {extra[0]}: unexpected data after {n} rows")
    meta = dict(l=l, m=m, seed=seed, epsilon=epsilon, alpha=alpha, weights=[1.0 / m] * m)
    if l >= 3:
        meta["p"] = clique_density_p(l)
    return QuadraticProblem(Q, BlockLayout.uniform(l, m), meta)
