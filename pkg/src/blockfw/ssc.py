"""Short Step Chain: repeated steps under one frozen gradient.

The chain runs a direction method on the linearized objective
``<g, y>`` (``g`` = negative gradient at the anchor) inside the trust
region formed by two balls,

* ``big ball``: center ``anchor + g/(2L)``, radius ``||g||/(2L)``
* ``small ball``: center ``anchor``, radius ``<g, d_hat_j>/L``

Staying inside the big ball is what yields
``f(y) <= f(anchor) - L/2 ||y - anchor||^2``. The chain ends on a zero
direction or on the first step cut short by the trust region.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from blockfw.directions import SELECTORS, Direction, DirectionKind
from blockfw.domain import clean_block

BALL_TOL = 1e-9


class Termination(enum.Enum):
    ZERO_DIRECTION = "ZERO_DIRECTION"
    BETA_STEP = "BETA_STEP"
    ITER_CAP = "ITER_CAP"


class TrustRegion:
    """Anchor, frozen negative gradient and ``L``; the big ball is precomputed."""

    def __init__(self, anchor: np.ndarray, g: np.ndarray, L: float):
        self.anchor = anchor
        self.g = g
        self.L = float(L)
        self.center = anchor + g / (2.0 * self.L)
        self.radius = math.sqrt(float(g @ g)) / (2.0 * self.L)

    def in_big_ball(self, y: np.ndarray, tol: float = BALL_TOL) -> bool:
        return float(np.linalg.norm(y - self.center)) <= self.radius + tol


@dataclass(frozen=True)
class SSCStep:
    kind: DirectionKind
    alpha: float
    beta: float
    alpha_max: float
    unit_slope: float


@dataclass
class SSCTrace:
    iterates: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    reason: Termination | None = None
    # sum of alpha_j <g, d_j>, i.e. <g, y_T - y_0> without the cancellation
    gain: float = 0.0

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def capped(self) -> bool:
        return self.reason is Termination.ITER_CAP


def _largest_root(b: float, c: float, scale: float) -> float:
    """Largest ``a >= 0`` with ``a^2 + 2 b a + c <= 0``, cancellation free.

    ``c`` is ``dist^2 - r^2``; points outside by more than ``BALL_TOL``
    (``scale`` is ``dist + r``) give 0.
    """
    if c > BALL_TOL * (scale + BALL_TOL):
        return 0.0
    disc = b * b - c
    if disc < 0.0:
        return 0.0
    root = math.sqrt(disc)
    if b <= 0.0:
        return -b + root
    # -b + root loses everything when b dominates; use the conjugate
    return max(0.0, -c / (b + root)) if c < 0.0 else 0.0


def ball_exit_step(y: np.ndarray, c: np.ndarray, r: float, d_unit: np.ndarray) -> float:
    """Largest ``a >= 0`` with ``||y + a*d_unit - c|| <= r``.

    Returns 0 when ``y`` is outside the ball by more than ``BALL_TOL``.
    """
    w = y - c
    ww = float(w @ w)
    return _largest_root(float(w @ d_unit), ww - r * r, math.sqrt(ww) + r)


def auxiliary_stepsize(tr: TrustRegion, y: np.ndarray, direction: Direction) -> float:
    """Maximal step along ``direction.d`` (stored scale) inside both balls.

    Both balls are written relative to the anchor, ``u = y - anchor``:
    the big ball is ``||u||^2 <= <g, u> / L`` and the small one
    ``||u|| <= <g, d_hat> / L``. At the anchor both constants vanish exactly,
    which keeps tiny steps from rounding to zero near stationarity.
    """
    nrm = direction.norm
    d_unit = direction.d / nrm
    L = tr.L
    u = y - tr.anchor
    uu = float(u @ u)
    ud = float(u @ d_unit)
    gd = direction.slope / nrm
    r_small = gd / L
    dist = math.sqrt(uu)
    a_big = _largest_root(ud - 0.5 * r_small, uu - float(tr.g @ u) / L, dist + tr.radius)
    a_small = _largest_root(ud, uu - r_small * r_small, dist + r_small)
    return min(a_big, a_small) / nrm


def _take_step(y: np.ndarray, direction: Direction, alpha: float, maximal: bool) -> np.ndarray:
    y_new = y + alpha * direction.d
    if maximal:
        # land exactly on the face the step was bounded by
        if direction.kind is DirectionKind.FW:
            y_new = np.zeros_like(y)
            y_new[direction.vertex] = 1.0
        else:
            y_new[direction.vertex] = 0.0
    return clean_block(y_new)


def ssc_run(anchor: np.ndarray, g: np.ndarray, method: str, L: float,
            max_steps: int | None = None, keep_iterates: bool = False):
    """Run the chain from ``anchor`` with frozen negative gradient ``g``.

    Parameters
    ----------
    anchor : feasible block point.
    g : negative gradient for this block, frozen for the whole chain.
    method : one of ``"FW"``, ``"AFW"``, ``"PFW"``, ``"FDFW"``.
    L : Lipschitz constant of the gradient (> 0).
    max_steps : safety cap, defaults to ``10 * len(anchor)``.
    keep_iterates : store every ``y_j`` in the trace.

    Returns
    -------
    (endpoint, SSCTrace)
    """
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    select = SELECTORS[method]
    if max_steps is None:
        max_steps = 10 * len(anchor)
    tr = TrustRegion(anchor, g, L)
    trace = SSCTrace()
    y = np.array(anchor, dtype=np.float64)
    if keep_iterates:
        trace.iterates.append(y.copy())
    for _ in range(max_steps):
        direction = select(y, g)
        if direction.is_zero:
            trace.reason = Termination.ZERO_DIRECTION
            return y, trace
        beta = auxiliary_stepsize(tr, y, direction)
        hit_beta = beta <= direction.alpha_max
        alpha = beta if hit_beta else direction.alpha_max
        y = _take_step(y, direction, alpha, maximal=not hit_beta)
        trace.steps.append(SSCStep(direction.kind, alpha, beta, direction.alpha_max, direction.unit_slope))
        trace.gain += alpha * direction.slope
        if keep_iterates:
            trace.iterates.append(y.copy())
        if hit_beta:
            trace.reason = Termination.BETA_STEP
            return y, trace
    trace.reason = Termination.ITER_CAP
    return y, trace
