import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg

from blockfw.blockvec import BlockLayout
from blockfw.problems import QuadraticProblem

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"

_criteria = []


def record_criterion(number, name, passed, detail=""):
    _criteria.append((number, name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_criteria, key=lambda c: c[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {name}  {detail}")


def strongly_convex_fixture(l=5, m=4, seed=2024, penalized=2):
    """Block-diagonal quadratic, strongly convex on every simplex block.

    Each block is ``M M^T / l + 0.5 I`` plus a term ``c (e_j 1^T + 1 e_j^T)``
    for a few coordinates ``j``. On the simplex that term equals ``2 c x_j``,
    a linear penalty that pushes those coordinates to zero with strict
    complementarity while leaving the curvature unchanged.
    """
    rng = np.random.default_rng(seed)
    blocks = []
    for _ in range(m):
        M = rng.standard_normal((l, l))
        B = M @ M.T / l + 0.5 * np.eye(l)
        ones = np.ones(l)
        for j in rng.choice(l, size=penalized, replace=False):
            e = np.zeros(l)
            e[j] = 1.0
            B = B + 0.5 * (np.outer(e, ones) + np.outer(ones, e))
        blocks.append(B)
    return QuadraticProblem(scipy.linalg.block_diag(*blocks), BlockLayout.uniform(l, m)), blocks


@pytest.fixture(scope="session")
def convex_fixture():
    return strongly_convex_fixture()
