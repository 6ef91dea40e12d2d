"""Shared domain types: problems, error models, schedules, traces, cost accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]


class DimensionMismatchError(ValueError):
    """Raised when a vector does not match the problem's ambient dimension."""


@dataclass(frozen=True)
class CompositeProblem:
    """Composite objective f = g + h with smooth g and simple nonsmooth h.

    ``grad_g`` must be Lipschitz with constant ``lipschitz_L``; ``eval_h`` may
    return +inf outside the domain of h.
    """

    dim: int
    grad_g: Callable[[Vector], Vector]
    eval_g: Callable[[Vector], float]
    eval_h: Callable[[Vector], float]
    lipschitz_L: float

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if not self.lipschitz_L > 0:
            raise ValueError(f"lipschitz_L must be positive, got {self.lipschitz_L}")

    def check_dim(self, x: Vector) -> Vector:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"expected vector of length {self.dim}, got shape {x.shape}"
            )
        return x


@dataclass(frozen=True)
class CostModel:
    """Unit costs: c_in per inner iteration, c_out per outer iteration."""

    c_in: float
    c_out: float

    def __post_init__(self) -> None:
        if self.c_in < 0 or self.c_out < 0:
            raise ValueError("unit costs must be nonnegative")
        if self.c_in == 0 and self.c_out == 0:
            raise ValueError("at least one unit cost must be positive")


@dataclass(frozen=True)
class ErrorModel:
    """Inner-solver error decay: eps(l) = A/l^alpha or eps(l) = A*(1-gamma)^l.

    ``kind`` is "sublinear" (uses ``alpha``) or "linear" (uses ``gamma``),
    with a single constant A shared across outer iterations.
    """

    kind: str
    A: float
    alpha: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in ("sublinear", "linear"):
            raise ValueError(f"unknown error-model kind {self.kind!r}")
        if not self.A > 0:
            raise ValueError("A must be positive")
        if self.kind == "sublinear":
            if self.alpha is None or not self.alpha > 0:
                raise ValueError("sublinear model needs alpha > 0")
        else:
            if self.gamma is None or not 0 < self.gamma < 1:
                raise ValueError("linear model needs gamma in (0, 1)")

    @staticmethod
    def sublinear(A: float, alpha: float) -> "ErrorModel":
        return ErrorModel(kind="sublinear", A=A, alpha=alpha)

    @staticmethod
    def linear(A: float, gamma: float) -> "ErrorModel":
        return ErrorModel(kind="linear", A=A, gamma=gamma)


@dataclass(frozen=True)
class Schedule:
    """Per-outer-iteration inner counts l_1, ..., l_k (all >= 1)."""

    inner_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.inner_counts) < 1:
            raise ValueError("schedule must have at least one entry")
        if any(l < 1 or l != int(l) for l in self.inner_counts):
            raise ValueError("all inner counts must be integers >= 1")
        object.__setattr__(self, "inner_counts", tuple(int(l) for l in self.inner_counts))

    def __len__(self) -> int:
        return len(self.inner_counts)

    def __getitem__(self, i: int) -> int:
        return self.inner_counts[i]


@dataclass(frozen=True)
class TraceRecord:
    """One outer iteration: inner work, accumulated cost, objective values.

    ``avg_objective`` is the objective at the running average of the iterates,
    which is the quantity the basic-scheme bound controls.
    """

    outer_index: int
    inner_used: int
    cum_cost: float
    objective: float
    avg_objective: float
    bound_value: Optional[float] = None


@dataclass
class Trace:
    """Full run record: f(x0), the per-iteration records, and the final point."""

    f0: float
    records: list[TraceRecord] = field(default_factory=list)
    x_final: Optional[Vector] = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def realized_schedule(self) -> Optional[Schedule]:
        if not self.records:
            return None
        return Schedule(tuple(r.inner_used for r in self.records))

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    def min_objectives(self) -> np.ndarray:
        """Running minimum of f(x_k), including f(x0) as the starting level."""
        objs = self.objectives()
        return np.minimum.accumulate(np.minimum(objs, self.f0))

    def cum_costs(self) -> np.ndarray:
        return np.array([r.cum_cost for r in self.records])


@dataclass(frozen=True)
class Plan:
    """Planner output: outer count, integer schedule, and its certified bound/cost.

    ``case`` is "constrained" when the accuracy target is active (small rho)
    and "unconstrained" when the all-ones schedule already meets it (large rho).
    ``relaxed_schedule`` keeps the continuous optimizer the integers came from.
    """

    scenario: str
    k_star: int
    schedule: Schedule
    predicted_bound: float
    predicted_cost: float
    case: str
    relaxed_schedule: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.k_star < 1:
            raise ValueError("k_star must be >= 1")
        if len(self.schedule) != self.k_star:
            raise ValueError("schedule length must equal k_star")
        if self.case not in ("constrained", "unconstrained"):
            raise ValueError(f"unknown case {self.case!r}")


SCENARIOS = ("basic-sublinear", "basic-linear", "accel-sublinear", "accel-linear")


def scenario_is_accelerated(scenario: str) -> bool:
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    return scenario.startswith("accel")


def scenario_rate_kind(scenario: str) -> str:
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    return "sublinear" if scenario.endswith("sublinear") else "linear"


def evaluate_objective(problem: CompositeProblem, x: Vector) -> float:
    """f(x) = g(x) + h(x); non-finite values are propagated to the caller."""
    x = problem.check_dim(x)
    return float(problem.eval_g(x)) + float(problem.eval_h(x))


def schedule_cost(schedule: Schedule | Sequence[int], costs: CostModel) -> float:
    """Global cost c_in * sum(l_i) + k * c_out."""
    counts = schedule.inner_counts if isinstance(schedule, Schedule) else tuple(schedule)
    return costs.c_in * float(sum(counts)) + len(counts) * costs.c_out


def epsilon_of_l(model: ErrorModel, l: int | float) -> float:
    """Prox error guaranteed after l inner iterations under the model."""
    if l < 1:
        raise ValueError(f"inner count must be >= 1, got {l}")
    if model.kind == "sublinear":
        return model.A / float(l) ** model.alpha
    return model.A * (1.0 - model.gamma) ** float(l)


def l_of_epsilon(model: ErrorModel, eps: float) -> int:
    """Smallest integer l >= 1 with epsilon_of_l(model, l) <= eps."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if eps >= model.A:
        return 1
    if model.kind == "sublinear":
        guess = (model.A / eps) ** (1.0 / model.alpha)
    else:
        guess = math.log(eps / model.A) / math.log(1.0 - model.gamma)
    l = max(1, math.ceil(guess - 1e-12))
    while epsilon_of_l(model, l) > eps:
        l += 1
    while l > 1 and epsilon_of_l(model, l - 1) <= eps:
        l -= 1
    return l
