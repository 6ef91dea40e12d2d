"""Convergence-rate bounds for inexact proximal-gradient runs.

Two families live here: the exact two-term bounds used for runtime
validation of realized error sequences, and the parameterized three-factor
bounds the planner optimizes (which upper-bound the former).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ErrorModel, Schedule, scenario_is_accelerated, scenario_rate_kind


@dataclass(frozen=True)
class BoundParams:
    """Problem constants entering the bounds: L, R0 = ||x0 - x*||, and the
    inner error model (only needed for the parameterized bounds)."""

    L: float
    R0: float
    model: Optional[ErrorModel] = None

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.R0 < 0:
            raise ValueError("R0 must be nonnegative")


def _check_eps(eps: Sequence[float]) -> np.ndarray:
    arr = np.asarray(eps, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("eps must be a nonempty 1-d sequence")
    if np.any(arr < 0):
        raise ValueError("prox errors must be nonnegative")
    return arr


def rate_bound_basic(eps: Sequence[float], L: float, R0: float) -> float:
    """Bound on f(mean of x_1..x_k) - f* for the basic scheme with errors eps."""
    arr = _check_eps(eps)
    k = arr.size
    root_terms = np.sqrt(2.0 * arr / L)
    inner = R0 + 2.0 * root_terms.sum() + np.sqrt(np.sum(2.0 * arr / L))
    return L / (2.0 * k) * inner**2


def rate_bound_accelerated(eps: Sequence[float], L: float, R0: float) -> float:
    """Bound on f(x_k) - f* for the accelerated scheme with errors eps."""
    arr = _check_eps(eps)
    k = arr.size
    i = np.arange(1, k + 1, dtype=float)
    inner = (
        R0
        + 2.0 * np.sum(i * np.sqrt(2.0 * arr / L))
        + np.sqrt(np.sum(2.0 * i**2 * arr / L))
    )
    return 2.0 * L / (k + 1.0) ** 2 * inner**2


def parametric_bound(
    scenario: str,
    k: int,
    schedule: Schedule | Sequence[float],
    params: BoundParams,
) -> float:
    """Three-factor bound B_j(k, {l_i}) for the scheme/rate scenario.

    Accepts real-valued inner counts so the planner can evaluate relaxed
    schedules; raises if the scenario's rate kind does not match the model.
    """
    counts = np.asarray(
        schedule.inner_counts if isinstance(schedule, Schedule) else schedule,
        dtype=float,
    )
    if counts.size != k:
        raise ValueError(f"schedule length {counts.size} != k = {k}")
    if np.any(counts < 1.0 - 1e-12):
        raise ValueError("inner counts must be >= 1")
    model = params.model
    if model is None:
        raise ValueError("parametric_bound needs BoundParams.model")
    if scenario_rate_kind(scenario) != model.kind:
        raise ValueError(
            f"scenario {scenario!r} expects a {scenario_rate_kind(scenario)} "
            f"error model, got {model.kind}"
        )
    if model.kind == "sublinear":
        eps = model.A / counts**model.alpha
    else:
        eps = model.A * (1.0 - model.gamma) ** counts
    root_terms = np.sqrt(2.0 * eps / params.L)
    if scenario_is_accelerated(scenario):
        i = np.arange(1, k + 1, dtype=float)
        inner = params.R0 + 3.0 * np.sum(i * root_terms)
        return 2.0 * params.L / (k + 1.0) ** 2 * inner**2
    inner = params.R0 + 3.0 * root_terms.sum()
    return params.L / (2.0 * k) * inner**2
