"""Geometry of standard simplices and their Cartesian products."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from blockfw.blockvec import BlockLayout

TOL_FEAS = 1e-9
TOL_SUPP = 1e-10


def lmo_block(g_blk: np.ndarray) -> int:
    """Vertex of the simplex maximizing ``<g, e_j>``; lowest index on ties."""
    if len(g_blk) == 0:
        raise ValueError("empty block")
    return int(np.argmax(g_blk))


def support_mask(x_blk: np.ndarray) -> np.ndarray:
    return x_blk > TOL_SUPP


def away_vertex_block(x_blk: np.ndarray, g_blk: np.ndarray) -> int:
    """Support vertex minimizing ``<g, e_j>``; lowest index on ties."""
    supp = np.flatnonzero(support_mask(x_blk))
    if supp.size == 0:
        raise ValueError("empty support: point is not in the simplex")
    return int(supp[np.argmin(g_blk[supp])])


def max_feasible_step_block(x_blk: np.ndarray, d_blk: np.ndarray) -> float:
    """Largest step keeping ``x + a*d`` nonnegative (``inf`` if unbounded)."""
    if abs(float(np.sum(d_blk))) > TOL_FEAS:
        raise ValueError(f"direction leaves the affine hull (sum {np.sum(d_blk):.3e})")
    neg = d_blk < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(np.maximum(x_blk[neg], 0.0) / -d_blk[neg]))


def project_tangent_cone_block(x_blk: np.ndarray, g_blk: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``g`` onto the tangent cone of the simplex at ``x``.

    The cone is ``{d : sum(d) = 0, d_j >= 0 off supp(x)}``. The solution has
    the form ``d_j = g_j - mu`` on the support and ``max(g_j - mu, 0)`` off
    it; the shift ``mu`` only grows as off-support coordinates get clipped,
    so at most ``len(x)`` passes are needed.
    """
    g = np.asarray(g_blk, dtype=np.float64)
    free = np.ones(len(g), dtype=bool)
    off = ~support_mask(x_blk)
    while True:
        mu = g[free].mean()
        clip = free & off & (g < mu)
        if not np.any(clip):
            break
        free &= ~clip
    d = g - mu
    d[~free] = 0.0
    return d


def sample_uniform_block(n: int, rng) -> np.ndarray:
    """Uniform point of the simplex (normalized exponential draws)."""
    e = rng.exponential(n)
    return e / e.sum()


def clean_block(y: np.ndarray) -> np.ndarray:
    """Clamp round-off negatives to zero and restore the unit sum, in place."""
    neg = y < 0
    if np.any(neg):
        if np.any(y < -TOL_FEAS):
            raise ValueError(f"coordinate {y.min():.3e} is infeasible beyond tolerance")
        y[neg] = 0.0
    s = y.sum()
    if s != 1.0:
        y /= s
    return y


@dataclass(frozen=True)
class SupportSet:
    indices: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return sum(len(ix) for ix in self.indices)


@dataclass(frozen=True)
class ProductSimplexDomain:
    layout: BlockLayout

    def contains(self, x: np.ndarray, tol: float = TOL_FEAS) -> bool:
        x = np.asarray(x)
        if x.shape != (self.layout.n,):
            return False
        if np.any(x < -tol):
            return False
        return all(abs(x[s].sum() - 1.0) <= tol for s in self.layout.slices())

    def support(self, x: np.ndarray) -> SupportSet:
        return SupportSet(tuple(
            tuple(int(j) for j in np.flatnonzero(support_mask(x[s]))) for s in self.layout.slices()
        ))

    def support_mask(self, x: np.ndarray) -> np.ndarray:
        return support_mask(np.asarray(x))

    def l0(self, x: np.ndarray) -> int:
        return int(np.count_nonzero(support_mask(np.asarray(x))))

    def sample_uniform(self, rng) -> np.ndarray:
        return np.concatenate([sample_uniform_block(n, rng) for n in self.layout.block_sizes])

    def barycenter(self) -> np.ndarray:
        return np.concatenate([np.full(n, 1.0 / n) for n in self.layout.block_sizes])

    def stationarity_norm(self, x: np.ndarray, g: np.ndarray) -> float:
        """Norm of the projection of ``g`` onto the tangent cone at ``x``."""
        sq = 0.0
        for s in self.layout.slices():
            p = project_tangent_cone_block(x[s], g[s])
            sq += float(p @ p)
        return float(np.sqrt(sq))
