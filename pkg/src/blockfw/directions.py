"""Feasible descent directions on one simplex block.

Throughout, ``g`` is the *negative* gradient, so a good direction has a
large ``<g, d>``. Vertices are standard basis vectors and the active set of
a point is its support, so no atom weights are tracked.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from blockfw.domain import away_vertex_block, lmo_block

ZERO_TOL = 1e-12
# slopes below this multiple of max|g| are round-off from <g, x>
SLOPE_NOISE = 8 * np.finfo(np.float64).eps


class DirectionKind(enum.Enum):
    FW = "FW"
    AWAY = "AWAY"
    PAIRWISE = "PAIRWISE"
    INFACE = "INFACE"
    ZERO = "ZERO"


@dataclass(frozen=True)
class Direction:
    kind: DirectionKind
    d: np.ndarray
    alpha_max: float
    slope: float
    # vertex whose coordinate hits zero on a maximal step (away/pairwise/in-face),
    # or the target vertex for FW
    vertex: int = -1
    norm: float = 0.0

    @property
    def is_zero(self) -> bool:
        return self.kind is DirectionKind.ZERO

    @property
    def unit_slope(self) -> float:
        nrm = self.norm
        return self.slope / nrm if nrm > 0 else 0.0


def _zero(n: int) -> Direction:
    return Direction(DirectionKind.ZERO, np.zeros(n), 0.0, 0.0)


def _noise(g_blk) -> float:
    return SLOPE_NOISE * float(np.abs(g_blk).max())


def _checked(kind, d, alpha_max, slope, vertex, g_blk) -> Direction:
    nrm = math.sqrt(float(d @ d))
    if slope <= _noise(g_blk) or nrm <= ZERO_TOL:
        return _zero(len(d))
    return Direction(kind, d, alpha_max, slope, vertex, nrm)


def block_fw_gap(x_blk: np.ndarray, g_blk: np.ndarray) -> float:
    gap = float(g_blk.max() - g_blk @ x_blk)
    return gap if gap > _noise(g_blk) else 0.0


def fw_direction(x_blk: np.ndarray, g_blk: np.ndarray) -> Direction:
    s = lmo_block(g_blk)
    d = -x_blk.astype(np.float64)
    d[s] += 1.0
    return _checked(DirectionKind.FW, d, 1.0, block_fw_gap(x_blk, g_blk), s, g_blk)


def _away_like(kind, x_blk, g_blk) -> Direction:
    q = away_vertex_block(x_blk, g_blk)
    d = x_blk.astype(np.float64)
    d[q] -= 1.0
    xq = float(x_blk[q])
    alpha_max = xq / (1.0 - xq) if xq < 1.0 else np.inf
    return _checked(kind, d, alpha_max, float(g_blk @ x_blk - g_blk[q]), q, g_blk)


def away_direction(x_blk: np.ndarray, g_blk: np.ndarray) -> Direction:
    return _away_like(DirectionKind.AWAY, x_blk, g_blk)


def pairwise_direction(x_blk: np.ndarray, g_blk: np.ndarray) -> Direction:
    s = lmo_block(g_blk)
    q = away_vertex_block(x_blk, g_blk)
    d = np.zeros(len(x_blk))
    if s == q:
        return _zero(len(x_blk))
    d[s] = 1.0
    d[q] = -1.0
    return _checked(DirectionKind.PAIRWISE, d, float(x_blk[q]), float(g_blk[s] - g_blk[q]), q, g_blk)


def afw_direction(x_blk: np.ndarray, g_blk: np.ndarray) -> Direction:
    """Better of the FW and away directions; ties go to FW."""
    fw = fw_direction(x_blk, g_blk)
    away = away_direction(x_blk, g_blk)
    return away if away.slope > fw.slope else fw


def fdfw_direction(x_blk: np.ndarray, g_blk: np.ndarray) -> Direction:
    """FW versus the in-face direction ``x - x_F``.

    On a simplex the minimal face of ``x`` is spanned by its support, and a
    linear function is minimized over it at a support vertex, so ``x_F`` is
    the away vertex.
    """
    fw = fw_direction(x_blk, g_blk)
    inface = _away_like(DirectionKind.INFACE, x_blk, g_blk)
    return inface if inface.slope > fw.slope else fw


SELECTORS = {
    "FW": fw_direction,
    "AFW": afw_direction,
    "PFW": pairwise_direction,
    "FDFW": fdfw_direction,
}
