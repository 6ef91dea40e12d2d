"""Inner-count sources: constant, planned, rate-optimal reference, and the
adaptive controller that bumps the inner count when progress stalls."""

from __future__ import annotations

from .core import ErrorModel, Plan, l_of_epsilon
from .solvers import ACCELERATED, BASIC


class PlanExhaustedError(RuntimeError):
    """A planned source was queried past its final outer iteration."""


class ConstantSource:
    needs_observation = False

    def __init__(self, l: int):
        if l < 1:
            raise ValueError("constant inner count must be >= 1")
        self.l = int(l)

    def next_l(self, k: int) -> int:
        return self.l

    def observe(self, k: int, f_before: float, f_after: float) -> None:
        pass


class PlannedSource:
    """Replays a plan's schedule; running past k_star is a caller error, since
    the plan's guarantee says nothing beyond its own horizon."""

    needs_observation = False

    def __init__(self, plan: Plan):
        self.plan = plan

    def next_l(self, k: int) -> int:
        if k > self.plan.k_star:
            raise PlanExhaustedError(
                f"plan covers {self.plan.k_star} outer iterations, asked for {k}")
        return self.plan.schedule[k - 1]

    def observe(self, k: int, f_before: float, f_after: float) -> None:
        pass


class ConvergentSource:
    """Rate-optimal reference strategy: drives the prox error down fast enough
    (1/k^{2+delta} basic, 1/k^{4+delta} accelerated) that the error-free
    convergence rate is preserved, whatever the computational cost."""

    needs_observation = False

    def __init__(self, scheme: str, model: ErrorModel, delta: float,
                 scale: float | None = None):
        if scheme not in (BASIC, ACCELERATED):
            raise ValueError(f"unknown scheme {scheme!r}")
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.scheme = scheme
        self.model = model
        self.delta = delta
        self.scale = model.A if scale is None else float(scale)
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def target_eps(self, k: int) -> float:
        expo = 2.0 + self.delta if self.scheme == BASIC else 4.0 + self.delta
        return self.scale / float(k) ** expo

    def next_l(self, k: int) -> int:
        return l_of_epsilon(self.model, self.target_eps(k))

    def observe(self, k: int, f_before: float, f_after: float) -> None:
        pass


class SipSource:
    """Start with one inner iteration and add one whenever the objective
    decrease falls below tol * f; the count never decreases."""

    needs_observation = True

    def __init__(self, tol: float):
        if not tol > 0:
            raise ValueError("tol must be positive")
        self.tol = tol
        self.current_l = 1

    def next_l(self, k: int) -> int:
        return self.current_l

    def observe(self, k: int, f_before: float, f_after: float) -> None:
        if f_before > 0:
            stall = f_before - f_after < self.tol * f_before
        else:
            # objectives are normally nonnegative; keep the test total anyway
            stall = f_before - f_after < self.tol * abs(f_before) + 1e-30
        if stall:
            self.current_l += 1


def constant_source(l: int) -> ConstantSource:
    return ConstantSource(l)


def planned_source(plan: Plan) -> PlannedSource:
    return PlannedSource(plan)


def convergent_source(scheme: str, model: ErrorModel, delta: float,
                      scale: float | None = None) -> ConvergentSource:
    return ConvergentSource(scheme, model, delta, scale)


def sip_source(tol: float) -> SipSource:
    return SipSource(tol)
