"""Outer proximal-gradient loops (basic and momentum-accelerated) that draw
per-iteration inner counts from a pluggable source and emit cost-annotated
traces."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

import numpy as np
from numpy.typing import NDArray

from .bounds import BoundParams, rate_bound_accelerated, rate_bound_basic
from .core import CompositeProblem, CostModel, Trace, TraceRecord, evaluate_objective
from .oracles import ProxOracle, ProxResult, prox_synthetic

Vector = NDArray[np.float64]

BASIC = "basic"
ACCELERATED = "accelerated"


def momentum_beta(scheme: str, k: int) -> float:
    """Momentum weight beta_k: 0 for the basic scheme, (k-1)/(k+2) accelerated."""
    if scheme == BASIC:
        return 0.0
    if scheme == ACCELERATED:
        return (k - 1.0) / (k + 2.0)
    raise ValueError(f"unknown scheme {scheme!r}")


class InnerCountSource(Protocol):
    """Supplies the inner count for each outer iteration; may adapt to progress."""

    needs_observation: bool

    def next_l(self, k: int) -> int:
        ...

    def observe(self, k: int, f_before: float, f_after: float) -> None:
        ...


@dataclass(frozen=True)
class StopRule:
    """Stop when any active bound fires: outer count, cost budget, or target
    objective value. At least one bound must be set."""

    max_outer: Optional[int] = None
    cost_budget: Optional[float] = None
    objective_target: Optional[float] = None

    def __post_init__(self) -> None:
        if (self.max_outer is None and self.cost_budget is None
                and self.objective_target is None):
            raise ValueError("at least one stopping bound must be finite")
        if self.max_outer is not None and self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")


class DivergenceError(RuntimeError):
    """Objective became non-finite; carries the partial trace."""

    def __init__(self, message: str, trace: Trace):
        super().__init__(message)
        self.trace = trace


def run(
    problem: CompositeProblem,
    oracle: ProxOracle,
    scheme: str,
    source: InnerCountSource,
    costs: CostModel,
    stop: StopRule,
    x0: Vector,
    warm_start: bool = False,
) -> Trace:
    """Iterate x_k = oracle(y_{k-1} - grad g(y_{k-1})/L) under the stop rule.

    Each outer step k asks the source for l_k, charges c_in*l_k + c_out, and
    records f(x_k) and the objective at the running average of the iterates.
    Oracles are cold-started unless warm_start is set, in which case the dual
    state is threaded through via ProxResult.warm_out.
    """
    x0 = problem.check_dim(np.asarray(x0, dtype=float))
    L = problem.lipschitz_L
    f0 = evaluate_objective(problem, x0)
    trace = Trace(f0=f0, x_final=x0.copy())
    if not math.isfinite(f0):
        raise DivergenceError("objective non-finite at the starting point", trace)
    x_prev = x0
    x_cur = x0
    y = x0
    f_cur = f0
    cum_cost = 0.0
    sum_x = np.zeros_like(x0)
    warm = None
    k = 0
    while True:
        k += 1
        if stop.max_outer is not None and k > stop.max_outer:
            break
        l_k = int(source.next_l(k))
        if l_k < 1:
            raise ValueError(f"inner-count source returned {l_k} < 1")
        step_cost = costs.c_in * l_k + costs.c_out
        if stop.cost_budget is not None and cum_cost + step_cost > stop.cost_budget * (1 + 1e-12):
            break
        if source.needs_observation:
            f_before = f_cur if scheme == BASIC or k == 1 else evaluate_objective(problem, y)
        z = y - problem.grad_g(y) / L
        res: ProxResult = oracle(z, L, l_k, warm=warm if warm_start else None)
        if warm_start:
            warm = res.warm_out
        x_next = np.asarray(res.point, dtype=float)
        f_next = evaluate_objective(problem, x_next)
        if source.needs_observation:
            source.observe(k, f_before, f_next)
        cum_cost += step_cost
        sum_x += x_next
        f_avg = evaluate_objective(problem, sum_x / k)
        x_prev, x_cur, f_cur = x_cur, x_next, f_next
        trace.x_final = x_cur
        if not (math.isfinite(f_next) and math.isfinite(f_avg)):
            trace.records.append(TraceRecord(
                outer_index=k, inner_used=l_k, cum_cost=cum_cost,
                objective=f_next, avg_objective=f_avg))
            raise DivergenceError(f"objective diverged at outer step {k}", trace)
        trace.records.append(TraceRecord(
            outer_index=k, inner_used=l_k, cum_cost=cum_cost,
            objective=f_next, avg_objective=f_avg))
        y = x_cur + momentum_beta(scheme, k) * (x_cur - x_prev)
        if stop.objective_target is not None and f_next <= stop.objective_target:
            break
    return trace


class _EpsSequenceOracle:
    """Per-iteration synthetic oracle delivering a prescribed error sequence."""

    def __init__(self, exact: ProxOracle, h_eval: Callable[[Vector], float],
                 eps_sequence: Sequence[float]):
        self.exact = exact
        self.h_eval = h_eval
        self.eps = list(eps_sequence)
        self.calls = 0

    def __call__(self, z: Vector, L: float, l: int, warm=None) -> ProxResult:
        eps = self.eps[self.calls]
        self.calls += 1
        res = prox_synthetic(z, L, self.exact, self.h_eval, eps)
        return ProxResult(point=res.point, inner_used=l, epsilon_bound=eps)


def run_with_synthetic_errors(
    problem: CompositeProblem,
    scheme: str,
    eps_sequence: Sequence[float],
    costs: CostModel,
    x0: Vector,
    exact_oracle: ProxOracle,
    bound_params: Optional[BoundParams] = None,
) -> Trace:
    """Run len(eps_sequence) outer steps with exactly-known prox errors.

    Iteration i perturbs the exact prox point to a prox-objective gap of
    exactly eps_sequence[i]. When bound_params is given, each record stores
    the scheme's rate bound evaluated on the realized error prefix, which is
    what the validation harness compares f - f* against.
    """
    eps_sequence = [float(e) for e in eps_sequence]
    if any(e < 0 for e in eps_sequence):
        raise ValueError("prox errors must be nonnegative")
    from .strategies import constant_source  # local import to avoid a cycle

    oracle = _EpsSequenceOracle(exact_oracle, problem.eval_h, eps_sequence)
    trace = run(
        problem, oracle, scheme, constant_source(1), costs,
        StopRule(max_outer=len(eps_sequence)), x0,
    )
    if bound_params is not None:
        bound_fn = rate_bound_basic if scheme == BASIC else rate_bound_accelerated
        new_records = []
        for idx, rec in enumerate(trace.records):
            b = bound_fn(eps_sequence[: idx + 1], bound_params.L, bound_params.R0)
            new_records.append(dataclasses.replace(rec, bound_value=b))
        trace.records = new_records
    return trace
