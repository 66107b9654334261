import numpy as np
import pytest

from blockfw.directions import (DirectionKind, afw_direction, away_direction, block_fw_gap, fdfw_direction,
                                fw_direction, pairwise_direction)
from blockfw.domain import max_feasible_step_block

X = np.array([0.2, 0.5, 0.3])
G = np.array([1.0, 3.0, 2.0])
ALL = [fw_direction, away_direction, pairwise_direction, afw_direction, fdfw_direction]


def random_point(rng, n):
    x = rng.exponential(size=n)
    x[rng.random(n) < 0.4] = 0.0
    if x.sum() == 0:
        x[rng.integers(n)] = 1.0
    return x / x.sum()


def random_pairs(count, nmax=6, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, nmax + 1))
        g = rng.standard_normal(n) if rng.random() < 0.7 else rng.integers(-2, 3, size=n).astype(float)
        yield random_point(rng, n), g


class TestFW:
    def test_example(self):
        d = fw_direction(X, G)
        assert d.kind is DirectionKind.FW
        np.testing.assert_allclose(d.d, [-0.2, 0.5, -0.3])
        assert d.slope == pytest.approx(0.7)
        assert d.alpha_max == 1.0

    def test_at_lmo_vertex(self):
        assert fw_direction(np.array([0.0, 1.0, 0.0]), G).is_zero

    def test_slope_is_gap(self):
        for x, g in random_pairs(200):
            d = fw_direction(x, g)
            assert d.slope == (0.0 if d.is_zero else block_fw_gap(x, g))


class TestAway:
    def test_example(self):
        d = away_direction(X, G)
        assert d.kind is DirectionKind.AWAY
        np.testing.assert_allclose(d.d, [-0.8, 0.5, 0.3])
        assert d.slope == pytest.approx(1.3)
        assert d.alpha_max == pytest.approx(0.25)

    def test_vertex_is_zero(self):
        assert away_direction(np.array([1.0, 0.0]), np.array([3.0, -1.0])).is_zero

    def test_alpha_max_matches_boundary_oracle(self):
        for x, g in random_pairs(1000, seed=1):
            d = away_direction(x, g)
            if not d.is_zero:
                assert d.alpha_max == pytest.approx(max_feasible_step_block(x, d.d), rel=1e-12)


class TestPairwise:
    def test_example(self):
        d = pairwise_direction(X, G)
        np.testing.assert_allclose(d.d, [-1.0, 1.0, 0.0])
        assert d.slope == pytest.approx(2.0)
        assert d.alpha_max == pytest.approx(0.2)

    def test_from_vertex(self):
        d = pairwise_direction(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        np.testing.assert_allclose(d.d, [-1.0, 1.0])
        assert d.alpha_max == 1.0
        assert max_feasible_step_block(np.array([1.0, 0.0]), d.d) == 1.0

    def test_same_vertex_is_zero(self):
        assert pairwise_direction(np.array([0.0, 1.0, 0.0]), G).is_zero

    def test_is_sum_of_fw_and_away(self):
        for x, g in random_pairs(500, seed=2):
            pw = pairwise_direction(x, g)
            fw, aw = fw_direction(x, g), away_direction(x, g)
            if pw.is_zero or fw.is_zero or aw.is_zero:
                continue
            np.testing.assert_allclose(pw.d, fw.d + aw.d, atol=1e-12)
            assert pw.slope == pytest.approx(fw.slope + aw.slope, abs=1e-12)


class TestAFW:
    def test_example_prefers_away(self):
        d = afw_direction(X, G)
        assert d.kind is DirectionKind.AWAY

    def test_tie_goes_to_fw(self):
        d = afw_direction(np.array([0.5, 0.5]), np.array([2.0, 0.0]))
        assert d.kind is DirectionKind.FW
        np.testing.assert_allclose(d.d, [0.5, -0.5])

    def test_stationary_vertex(self):
        assert afw_direction(np.array([0.0, 1.0, 0.0]), G).is_zero

    def test_slope_dominance(self):
        for x, g in random_pairs(1000, seed=3):
            a, f, w = afw_direction(x, g), fw_direction(x, g), away_direction(x, g)
            assert a.slope == max(f.slope, w.slope)


class TestFDFW:
    def test_example(self):
        d = fdfw_direction(X, G)
        assert d.kind is DirectionKind.INFACE
        np.testing.assert_allclose(d.d, [-0.8, 0.5, 0.3])

    def test_vertex_takes_fw_branch(self):
        d = fdfw_direction(np.array([1.0, 0.0, 0.0]), G)
        assert d.kind is DirectionKind.FW

    def test_coincides_with_afw(self):
        for x, g in random_pairs(2000, seed=4):
            a, f = afw_direction(x, g), fdfw_direction(x, g)
            np.testing.assert_array_equal(a.d, f.d)
            assert a.alpha_max == f.alpha_max
            assert {a.kind, f.kind} <= {DirectionKind.FW, DirectionKind.ZERO} or \
                (a.kind, f.kind) == (DirectionKind.AWAY, DirectionKind.INFACE)


class TestGap:
    def test_example(self):
        assert block_fw_gap(X, G) == pytest.approx(0.7)
        assert block_fw_gap(np.array([0.0, 1.0, 0.0]), G) == 0.0

    def test_zero_gap_means_all_zero(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            n = int(rng.integers(1, 6))
            x = random_point(rng, n)
            g = rng.integers(-2, 1, size=n).astype(float)
            g[x > 0] = 1.0
            assert block_fw_gap(x, g) == 0.0
            assert all(sel(x, g).is_zero for sel in ALL)


def test_every_direction_is_feasible_and_descent():
    rng = np.random.default_rng(6)
    for x, g in random_pairs(500, seed=7):
        for sel in ALL:
            d = sel(x, g)
            assert d.slope >= 0
            assert d.is_zero == (d.norm <= 1e-12)
            if d.is_zero:
                continue
            bound = min(d.alpha_max, max_feasible_step_block(x, d.d))
            for a in rng.uniform(0, bound, size=20):
                y = x + a * d.d
                assert y.min() >= -1e-9 and abs(y.sum() - 1) <= 1e-9
