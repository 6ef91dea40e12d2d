import numpy as np
import pytest

from proxsched.bench import build_lasso_problem


@pytest.fixture(scope="session")
def lasso():
    """Small dense lasso with exact prox, shared across rate/bound tests."""
    problem, oracle, info = build_lasso_problem(n_rows=60, dim=40, lam=0.1, seed=11)
    return problem, oracle, info


@pytest.fixture(scope="session")
def lasso_reference(lasso):
    """High-precision reference optimum from a long accelerated exact-prox run."""
    from proxsched.core import CostModel
    from proxsched.solvers import ACCELERATED, StopRule, run
    from proxsched.strategies import constant_source

    problem, oracle, _ = lasso
    x0 = np.zeros(problem.dim)
    trace = run(problem, oracle, ACCELERATED, constant_source(1),
                CostModel(1.0, 1.0), StopRule(max_outer=100_000), x0)
    f_star = min(trace.min_objectives()[-1], trace.f0)
    return f_star, trace.x_final
