import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from blockfw.blockvec import BlockLayout
from blockfw.diagnostics import (
    identification_iteration,
    multipliers,
    rate_fit,
    run_diagnostics,
    strict_complementarity,
    write_diagnostics_csv,
)
from blockfw.domain import ProductSimplexDomain
from blockfw.rng import Stream
from blockfw.solver import SolverConfig, block_gaps, run

finite = st.floats(-100, 100, allow_nan=False)


class TestMultipliers:
    def test_vertex_example(self):
        lam = multipliers(np.array([1.0, 0.0]), np.array([2.0, 5.0]), BlockLayout((2,)))
        np.testing.assert_array_equal(lam[0], [0.0, 3.0])

    def test_constant_gradient(self):
        layout = BlockLayout((3, 2))
        x = np.array([0.2, 0.3, 0.5, 0.9, 0.1])
        lam = multipliers(x, np.full(5, 4.0), layout)
        for blk in lam:
            np.testing.assert_allclose(blk, 0.0, atol=1e-14)

    @given(st.integers(0, 2**31), arrays(np.float64, 7, elements=finite))
    def test_orthogonality(self, seed, grad):
        layout = BlockLayout((3, 4))
        x = ProductSimplexDomain(layout).sample_uniform(Stream(seed, "x"))
        for sl, lam in zip(layout.slices(), multipliers(x, grad, layout)):
            assert abs(float(lam @ x[sl])) <= 1e-12 * max(1.0, np.abs(grad).max())


class TestStrictComplementarity:
    layout = BlockLayout((3,))

    def test_interior(self):
        x = np.full(3, 1 / 3)
        assert strict_complementarity(x, np.ones(3), self.layout) == [True]

    def test_zero_multiplier_off_support(self):
        x = np.array([0.5, 0.5, 0.0])
        assert strict_complementarity(x, np.array([1.0, 1.0, 1.0]), self.layout) == [False]

    def test_positive_multiplier_off_support(self):
        x = np.array([0.5, 0.5, 0.0])
        assert strict_complementarity(x, np.array([1.0, 1.0, 2.0]), self.layout) == [True]

    def test_per_block(self):
        layout = BlockLayout((2, 2))
        x = np.array([1.0, 0.0, 1.0, 0.0])
        assert strict_complementarity(x, np.array([0.0, 1.0, 0.0, 0.0]), layout) == [True, False]


class TestIdentification:
    def test_constant(self):
        s = [np.array([1, 0, 1], bool)] * 6
        assert identification_iteration(s) == 0

    def test_change_at_four(self):
        a, b = np.array([1, 1, 1], bool), np.array([1, 0, 1], bool)
        s = [a] * 5 + [b] * 5  # last change happens in step 4 -> 5
        assert identification_iteration(s) == 5

    def test_not_settled(self):
        a, b = np.array([1, 1], bool), np.array([1, 0], bool)
        assert identification_iteration([a, a, b]) is None

    def test_empty(self):
        assert identification_iteration([]) is None

    @given(st.lists(st.sampled_from([0, 1, 2]), min_size=2, max_size=30))
    def test_truncation_after_kid(self, labels):
        table = [np.array(v, bool) for v in ([1, 0], [0, 1], [1, 1])]
        s = [table[i] for i in labels]
        k = identification_iteration(s)
        if k is None:
            return
        for cut in range(max(k + 2, 2), len(s) + 1):
            assert identification_iteration(s[:cut]) == k

    def test_convex_fixture_identifies(self, convex_fixture):
        p, _ = convex_fixture
        res = run(p, ProductSimplexDomain(p.layout).barycenter(), SolverConfig(tol=1e-9, max_iter=50_000))
        k_id = identification_iteration(res.supports)
        assert k_id is not None and k_id < res.iterations
        assert res.l0[-1] < p.n
        assert all(strict_complementarity(res.x, p.gradient(res.x), p.layout))


class TestRateFit:
    def test_geometric(self):
        fit = rate_fit(0.5 ** np.arange(60))
        assert fit.q_hat == pytest.approx(0.5, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.start == 4 and fit.stop == 40

    def test_constant(self):
        fit = rate_fit(np.full(20, 3.0))
        assert fit.q_hat == pytest.approx(1.0) and fit.r_squared == 1.0

    def test_too_short(self):
        assert rate_fit([1.0, 0.01, 1e-13]) is None
        assert rate_fit([]) is None


def test_multiplier_sign_near_stationarity(convex_fixture):
    p, _ = convex_fixture
    res = run(p, ProductSimplexDomain(p.layout).barycenter(), SolverConfig(tol=1e-8, max_iter=50_000))
    grad = p.gradient(res.x)
    assert block_gaps(res.x, -grad, np.asarray(p.layout.offsets)).max() <= 1e-8
    assert min(float(lam.min()) for lam in multipliers(res.x, grad, p.layout)) >= -1e-6


def test_diagnostics_csv(tmp_path, convex_fixture):
    p, _ = convex_fixture
    res = run(p, ProductSimplexDomain(p.layout).barycenter(), SolverConfig(tol=1e-8, max_iter=50_000))
    row = run_diagnostics(p, res)
    write_diagnostics_csv(tmp_path / "d.csv", [row])
    out = list(csv.DictReader((tmp_path / "d.csv").open()))[0]
    assert out["strict_complementarity"] == "1111"
    assert int(out["final_l0"]) == res.l0[-1]
    assert float(out["q_hat"]) < 1
