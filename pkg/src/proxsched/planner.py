"""Cost-optimal inner/outer iteration planning.

Solves  min_{k, l_1..l_k}  c_in * sum(l_i) + k * c_out  s.t.  B(k, {l_i}) <= rho
by the continuous relaxation's KKT closed forms per scenario, a numeric search
over the outer count, and a floor/ceil refinement back to integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .bounds import BoundParams, parametric_bound
from .core import CostModel, Plan, Schedule, scenario_rate_kind, schedule_cost

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class InfeasiblePlanError(ValueError):
    """No (k, schedule) within the search horizon satisfies the target."""

    def __init__(self, message: str, interval: Optional[tuple[float, float]] = None):
        super().__init__(message)
        self.interval = interval


@dataclass(frozen=True)
class PlanRequest:
    scenario: str
    rho: float
    params: BoundParams
    costs: CostModel
    k_search_max: int = 10**6

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.params.model is None:
            raise ValueError("planning needs an error model")
        if scenario_rate_kind(self.scenario) != self.params.model.kind:
            raise ValueError("scenario rate kind does not match the error model")
        if self.k_search_max < 1:
            raise ValueError("k_search_max must be >= 1")


def _model_A(req: PlanRequest) -> float:
    return req.params.model.A


def _beta(req: PlanRequest) -> float:
    return math.sqrt(req.params.L) / (3.0 * math.sqrt(2.0 * _model_A(req)))


def c_of_k(k, req: PlanRequest):
    """Feasibility margin C(k) for the basic-scheme scenarios (may be negative)."""
    L, R0 = req.params.L, req.params.R0
    k = np.asarray(k, dtype=float)
    out = _beta(req) * (np.sqrt(2.0 * k * req.rho / L) - R0)
    return float(out) if out.ndim == 0 else out


def d_of_k(k, req: PlanRequest):
    """Feasibility margin D(k) for the accelerated-scheme scenarios."""
    L, R0 = req.params.L, req.params.R0
    k = np.asarray(k, dtype=float)
    out = _beta(req) * (np.sqrt(req.rho / (2.0 * L)) * (k + 1.0) - R0)
    return float(out) if out.ndim == 0 else out


def _rate_discount(req: PlanRequest) -> float:
    """Multiplier turning A into the effective constant of the linear-rate cases."""
    model = req.params.model
    return 1.0 - model.gamma if model.kind == "linear" else 1.0


def threshold(scenario: str, params: BoundParams) -> float:
    """Accuracy level separating the constrained (rho below) regime from the
    regime where an all-ones schedule can already be feasible.

    For the accelerated scenarios the subtracted term uses the effective
    constant A*(1-gamma) of the linear case, which is the exact boundary of
    the all-ones feasibility analysis (clamped at zero when no positive rho
    admits all-ones schedules).
    """
    L, R0 = params.L, params.R0
    A = params.model.A
    disc = 1.0 - params.model.gamma if params.model.kind == "linear" else 1.0
    At = A * disc
    if scenario in ("basic-sublinear", "basic-linear"):
        return 6.0 * math.sqrt(2.0 * L * At) * R0
    root = math.sqrt(12.0 * math.sqrt(2.0 * L * At) * R0) - 3.0 * math.sqrt(At)
    return max(0.0, root) ** 2


def _case1_interval(req: PlanRequest) -> Optional[tuple[float, float]]:
    """Real k-interval on which the all-ones schedule meets the target."""
    L, R0 = req.params.L, req.params.R0
    At = _model_A(req) * _rate_discount(req)
    rho = req.rho
    if req.scenario in ("basic-sublinear", "basic-linear"):
        center = math.sqrt(rho) / (6.0 * math.sqrt(At))
        rad2 = rho / (36.0 * At) - math.sqrt(L) * R0 / (3.0 * math.sqrt(2.0 * At))
        if rad2 < 0:
            return None
        r = math.sqrt(rad2)
        return ((center - r) ** 2, (center + r) ** 2)
    b = math.sqrt(rho) / (3.0 * math.sqrt(At))
    K = 0.25 * (1.0 + b) ** 2 - math.sqrt(2.0 * L) * R0 / (3.0 * math.sqrt(At))
    if K < 0:
        return None
    mid = 0.5 * (b - 1.0)
    r = math.sqrt(K)
    return (mid - r, mid + r)


def n_of_k(k: int | float, D_k: float, gamma: float) -> int:
    """Breakpoint index for the accelerated/linear scenario: the unique n with
    (n-1)(2k+2-n) sqrt(1-g) <= 2 D_k < n(2k+1-n) sqrt(1-g)."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must be in (0, 1)")
    sq = math.sqrt(1.0 - gamma)
    hi = k * (k + 1.0) / 2.0 * sq
    if not 0 < D_k < hi:
        raise ValueError(f"D_k = {D_k} outside (0, {hi})")
    T = 2.0 * D_k / sq
    # smallest n with n(2k+1-n) > T; that quadratic is increasing for n <= k+1/2
    disc = (2.0 * k + 1.0) ** 2 - 4.0 * T
    if disc <= 0:
        n = int(math.ceil(k))
    else:
        n_low = ((2.0 * k + 1.0) - math.sqrt(disc)) / 2.0
        n = int(math.floor(n_low)) + 1
    n = max(1, min(n, int(math.ceil(k))))
    # float-proof the closed form against the defining inequalities
    def ok(m: int) -> bool:
        return (m - 1) * (2 * k + 2 - m) * sq <= 2.0 * D_k * (1 + 1e-15) and \
            2.0 * D_k < m * (2 * k + 1 - m) * sq * (1 + 1e-15)

    for cand in (n, n - 1, n + 1, n - 2, n + 2):
        if 1 <= cand <= math.ceil(k) and ok(cand):
            return cand
    raise ValueError(f"no breakpoint index found for k={k}, D_k={D_k}")


def scenario4_kkt(k: int, D_k: float, gamma: float) -> tuple[int, float, float]:
    """(n, lambda, c) of the accelerated/linear KKT system at outer count k,
    where c = ln(sqrt(1/(1-gamma))) and lambda is the active-constraint
    multiplier."""
    sq = math.sqrt(1.0 - gamma)
    c = 0.5 * math.log(1.0 / (1.0 - gamma))
    n = n_of_k(k, D_k, gamma)
    denom = D_k - n * (n - 1) / 2.0 * sq
    lam = (k + 1.0 - n) / (denom * c)
    return n, lam, c


def _power_sum_cum(k_max: int, expo: float) -> np.ndarray:
    """cums[k] = sum_{i=1}^{k} i**expo, with cums[0] = 0."""
    i = np.arange(0, k_max + 1, dtype=float)
    vals = np.zeros(k_max + 1)
    vals[1:] = i[1:] ** expo
    return np.cumsum(vals)


def _scenario3_breakpoint(k: int, D_k: float, alpha: float,
                          cums: np.ndarray) -> tuple[int, float]:
    """(n, tau) for the accelerated/sublinear KKT solution when the l >= 1
    box is active: l_i = 1 below n, l_i = tau^{-2/alpha} i^{2/(alpha+2)} from n."""
    q = alpha / (alpha + 2.0)
    n = np.arange(1, k + 1, dtype=float)
    S_nk = cums[k] - cums[np.arange(0, k)]
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = (D_k - n * (n - 1) / 2.0) / S_nk
    lo = np.where(n > 1, (n - 1.0) ** q, 0.0)
    ok = (tau > 0) & (tau >= lo * (1 - 1e-12)) & (tau <= n**q * (1 + 1e-12))
    idx = np.nonzero(ok)[0]
    if idx.size == 0:
        raise ValueError(f"no box breakpoint found for k={k}, D_k={D_k}")
    j = int(idx[0])
    return j + 1, float(tau[j])


def relaxed_schedule(scenario: str, k: int, req: PlanRequest
                     ) -> tuple[Optional[np.ndarray], bool]:
    """Continuous optimal inner counts at outer count k (constraint active).

    Returns (schedule, feasible). Infeasible k (nonpositive margin) yields
    (None, False). Entries are clamped below at 1 against float dust.
    """
    if k < 1:
        return None, False
    model = req.params.model
    if scenario == "basic-sublinear":
        C_k = c_of_k(k, req)
        if C_k <= 0:
            return None, False
        l = (C_k / k) ** (-2.0 / model.alpha)
        return np.full(k, max(1.0, l)), True
    if scenario == "basic-linear":
        C_k = c_of_k(k, req)
        if C_k <= 0:
            return None, False
        l = 2.0 * math.log(C_k / k) / math.log(1.0 - model.gamma)
        return np.full(k, max(1.0, l)), True
    D_k = d_of_k(k, req)
    if D_k <= 0:
        return None, False
    i = np.arange(1, k + 1, dtype=float)
    if scenario == "accel-sublinear":
        alpha = model.alpha
        expo = 2.0 / (alpha + 2.0)
        cums = _power_sum_cum(k, expo)
        S = cums[k]
        if D_k >= k * (k + 1) / 2.0:
            return np.ones(k), True
        if D_k <= S:
            l = (S / D_k) ** (2.0 / alpha) * i**expo
            return np.maximum(l, 1.0), True
        n, tau = _scenario3_breakpoint(k, D_k, alpha, cums)
        l = np.ones(k)
        l[n - 1:] = tau ** (-2.0 / alpha) * i[n - 1:] ** expo
        return np.maximum(l, 1.0), True
    # accel-linear
    gamma = model.gamma
    sq = math.sqrt(1.0 - gamma)
    if D_k >= k * (k + 1) / 2.0 * sq:
        return np.ones(k), True
    n, lam, c = scenario4_kkt(k, D_k, gamma)
    l = np.ones(k)
    l[n - 1:] = np.log(lam * c * i[n - 1:]) / c
    return np.maximum(l, 1.0), True


def _relaxed_inner_sum_vec(scenario: str, ks: np.ndarray, req: PlanRequest
                           ) -> np.ndarray:
    """sum_i l_i* of the relaxed schedule for each k in ks (inf if infeasible)."""
    model = req.params.model
    ks = np.asarray(ks, dtype=float)
    out = np.full(ks.shape, np.inf)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if scenario in ("basic-sublinear", "basic-linear"):
            C = c_of_k(ks, req)
            good = C > 0
            x = np.where(good, C / ks, np.nan)
            if scenario == "basic-sublinear":
                l = x ** (-2.0 / model.alpha)
            else:
                l = 2.0 * np.log(x) / math.log(1.0 - model.gamma)
            out[good] = (ks * np.maximum(l, 1.0))[good]
            return out
        D = d_of_k(ks, req)
        good = D > 0
        if scenario == "accel-sublinear":
            alpha = model.alpha
            expo = 2.0 / (alpha + 2.0)
            kmax = int(ks.max())
            cums = _power_sum_cum(kmax, expo)
            S = cums[ks.astype(int)]
            interior = good & (D <= S)
            out[interior] = ((S / D) ** (2.0 / alpha) * S)[interior]
            allones = good & (D >= ks * (ks + 1) / 2.0)
            out[allones] = ks[allones]
            boxed = good & ~interior & ~allones
            for idx in np.nonzero(boxed)[0]:
                kk = int(ks[idx])
                n, tau = _scenario3_breakpoint(kk, float(D[idx]), alpha, cums)
                out[idx] = (n - 1) + tau ** (-2.0 / alpha) * (cums[kk] - cums[n - 1])
            return out
        gamma = model.gamma
        sq = math.sqrt(1.0 - gamma)
        c = 0.5 * math.log(1.0 / (1.0 - gamma))
        hi = ks * (ks + 1) / 2.0 * sq
        allones = good & (D >= hi)
        out[allones] = ks[allones]
        inter = good & (D < hi)
        if np.any(inter):
            kk = ks[inter]
            T = 2.0 * D[inter] / sq
            disc = np.maximum((2 * kk + 1) ** 2 - 4 * T, 0.0)
            n = np.floor(((2 * kk + 1) - np.sqrt(disc)) / 2.0) + 1
            n = np.clip(n, 1, kk)
            denom = D[inter] - n * (n - 1) / 2.0 * sq
            lamc = (kk + 1 - n) / denom
            lsum = (n - 1) + ((kk - n + 1) * np.log(lamc)
                              + gammaln(kk + 1) - gammaln(n)) / c
            out[inter] = lsum
    return out


def _relaxed_cost_int(scenario: str, k: int, req: PlanRequest) -> float:
    s = _relaxed_inner_sum_vec(scenario, np.array([k]), req)[0]
    if not np.isfinite(s):
        return math.inf
    return req.costs.c_in * float(s) + k * req.costs.c_out


def minimize_over_k(objective: Callable[[int], float], k_min: int, k_max: int,
                    objective_vec: Optional[Callable[[np.ndarray], np.ndarray]] = None
                    ) -> int:
    """Integer argmin of a decreasing-then-increasing objective.

    Golden-section on the piecewise-linear extension locates the continuous
    minimizer; the result is floor/ceil-compared, then sanity-checked against
    a coarse grid. A grid point beating the candidate means the unimodality
    assumption failed, in which case the whole range is scanned.
    """
    if k_min > k_max:
        raise ValueError(f"empty range [{k_min}, {k_max}]")
    cache: dict[int, float] = {}

    def f_int(k: int) -> float:
        if k not in cache:
            cache[k] = float(objective(k))
        return cache[k]

    def f_real(x: float) -> float:
        lo = int(math.floor(x))
        hi = int(math.ceil(x))
        lo = max(k_min, min(lo, k_max))
        hi = max(k_min, min(hi, k_max))
        if lo == hi:
            return f_int(lo)
        w = x - lo
        return (1 - w) * f_int(lo) + w * f_int(hi)

    a, b = float(k_min), float(k_max)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f_real(c), f_real(d)
    while b - a > 0.25:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f_real(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f_real(d)
    khat = 0.5 * (a + b)
    candidates = {max(k_min, min(k_max, int(math.floor(khat)))),
                  max(k_min, min(k_max, int(math.ceil(khat))))}
    best_k = min(candidates, key=f_int)
    best_v = f_int(best_k)

    grid = np.unique(np.clip(np.round(
        np.geomspace(k_min, k_max, num=min(257, k_max - k_min + 1))
    ).astype(int), k_min, k_max))
    if objective_vec is not None:
        grid_vals = np.asarray(objective_vec(grid), dtype=float)
    else:
        grid_vals = np.array([f_int(int(g)) for g in grid])
    g_idx = int(np.nanargmin(grid_vals)) if np.any(np.isfinite(grid_vals)) else None
    if g_idx is not None and grid_vals[g_idx] < best_v * (1 - 1e-12) - 1e-15:
        # unimodality violated: exhaustive scan
        ks = np.arange(k_min, k_max + 1)
        if objective_vec is not None:
            vals = np.asarray(objective_vec(ks), dtype=float)
            if np.any(np.isfinite(vals)):
                return int(ks[np.nanargmin(vals)])
            return best_k
        best_k, best_v = k_min, f_int(k_min)
        for kk in range(k_min + 1, k_max + 1):
            v = f_int(kk)
            if v < best_v:
                best_k, best_v = kk, v
        return best_k
    return best_k


def _bound_prefactor(scenario: str, k: int, params: BoundParams) -> float:
    if scenario.startswith("accel"):
        return 2.0 * params.L / (k + 1.0) ** 2
    return params.L / (2.0 * k)


def _error_weight(model, l: float) -> float:
    if model.kind == "sublinear":
        return float(l) ** (-model.alpha / 2.0)
    return (1.0 - model.gamma) ** (float(l) / 2.0)


def round_schedule(scenario: str, k: int, relaxed: Sequence[float],
                   req: PlanRequest) -> Schedule:
    """Integer schedule from the relaxed one: all-ceil start, then floor the
    entries in order while the target still holds, stopping at the first
    violation."""
    params = req.params
    model = params.model
    relaxed = np.asarray(relaxed, dtype=float)
    if relaxed.size != k:
        raise ValueError("relaxed schedule length must equal k")
    ceils = np.maximum(np.ceil(relaxed - 1e-12), 1.0).astype(int)
    if parametric_bound(scenario, k, ceils, params) > req.rho:
        ceils = np.maximum(np.ceil(relaxed), 1.0).astype(int)
    counts = ceils.copy()
    scale = 3.0 * math.sqrt(2.0 * model.A / params.L)
    weights = (np.arange(1, k + 1, dtype=float)
               if scenario.startswith("accel") else np.ones(k))
    W = float(np.sum(weights * [_error_weight(model, l) for l in counts]))
    pref = _bound_prefactor(scenario, k, params)
    for idx in range(k):
        fl = max(1, int(math.floor(relaxed[idx])))
        if fl >= counts[idx]:
            continue
        new_W = W + weights[idx] * (_error_weight(model, fl)
                                    - _error_weight(model, counts[idx]))
        if pref * (params.R0 + scale * new_W) ** 2 > req.rho:
            break
        counts[idx] = fl
        W = new_W
    # the incremental bound can drift from the reference evaluation; re-verify
    while parametric_bound(scenario, k, counts, params) > req.rho:
        raised = False
        for idx in range(k):
            if counts[idx] < ceils[idx]:
                counts[idx] = ceils[idx]
                raised = True
                break
        if not raised:
            raise InfeasiblePlanError("ceil schedule violates the target")
    return Schedule(tuple(int(v) for v in counts))


def _constant_feasible_l(scenario: str, k: int, req: PlanRequest) -> Optional[int]:
    """Smallest integer l with B(k, constant l) <= rho, or None."""
    model = req.params.model
    if scenario in ("basic-sublinear", "basic-linear"):
        budget = c_of_k(k, req)
        per = budget / k
    else:
        budget = d_of_k(k, req)
        per = 2.0 * budget / (k * (k + 1.0))
    if budget <= 0 or per <= 0:
        return None
    if model.kind == "sublinear":
        l_real = per ** (-2.0 / model.alpha) if per < 1 else 1.0
    else:
        l_real = (2.0 * math.log(per) / math.log(1.0 - model.gamma)
                  if per < 1 else 1.0)
    l = max(1, int(math.ceil(l_real - 1e-9)))
    sched = np.full(k, float(l))
    for _ in range(4):
        if parametric_bound(scenario, k, sched, req.params) <= req.rho:
            return l
        l += 1
        sched[:] = l
    return None


def best_constant_plan(req: PlanRequest) -> Plan:
    """Exact optimum over schedules restricted to a constant inner count."""
    k_min = _first_feasible_k(req)
    k_cap = req.k_search_max
    if k_min is None or k_min > k_cap:
        raise InfeasiblePlanError("no feasible outer count within the horizon")
    ks = np.arange(k_min, k_cap + 1, dtype=float)
    model = req.params.model
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if req.scenario in ("basic-sublinear", "basic-linear"):
            per = c_of_k(ks, req) / ks
        else:
            per = 2.0 * d_of_k(ks, req) / (ks * (ks + 1.0))
        good = per > 0
        if model.kind == "sublinear":
            l_real = np.where(per < 1, per ** (-2.0 / model.alpha), 1.0)
        else:
            l_real = np.where(per < 1,
                              2.0 * np.log(np.where(per > 0, per, np.nan))
                              / math.log(1.0 - model.gamma), 1.0)
        l_int = np.maximum(np.ceil(l_real - 1e-9), 1.0)
        cost = np.where(good, ks * (req.costs.c_in * l_int + req.costs.c_out),
                        np.inf)
    order = np.argsort(cost, kind="stable")
    for j in order[: max(8, 1)]:
        if not np.isfinite(cost[j]):
            break
        k = int(ks[j])
        l = _constant_feasible_l(req.scenario, k, req)
        if l is None:
            continue
        schedule = Schedule((l,) * k)
        bound = parametric_bound(req.scenario, k, schedule, req.params)
        if bound <= req.rho:
            return Plan(
                scenario=req.scenario, k_star=k, schedule=schedule,
                predicted_bound=bound,
                predicted_cost=schedule_cost(schedule, req.costs),
                case="constrained",
                relaxed_schedule=tuple([float(l_real[j])] * k),
            )
    raise InfeasiblePlanError("no feasible constant schedule within the horizon")


def _rounded_cost_scan_basic(req: PlanRequest, k_min: int,
                             k_cap: int) -> Optional[int]:
    """Argmin over k of the floor/ceil-rounded cost for the basic scenarios,
    where the constant relaxed count makes the rounded cost closed-form."""
    model = req.params.model
    ks = np.arange(k_min, k_cap + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        per = c_of_k(ks, req) / ks
        good = (per > 0) & (per < 1)
        if model.kind == "sublinear":
            lrel = np.where(good, per ** (-2.0 / model.alpha), np.nan)

            def weight(l):
                return l ** (-model.alpha / 2.0)
        else:
            lrel = np.where(good,
                            2.0 * np.log(np.where(good, per, np.nan))
                            / math.log(1.0 - model.gamma), np.nan)

            def weight(l):
                return (1.0 - model.gamma) ** (l / 2.0)

        lrel = np.maximum(lrel, 1.0)
        fl = np.floor(lrel)
        cl = np.ceil(lrel)
        integral = cl == fl
        denom = weight(fl) - weight(cl)
        m_max = np.where(
            integral, 0.0,
            np.floor(ks * (weight(lrel) - weight(cl))
                     / np.where(denom > 0, denom, np.nan)))
        m_max = np.clip(m_max, 0.0, ks - 1.0)
        cost = np.where(
            good,
            req.costs.c_in * (ks * cl - np.where(integral, 0.0, m_max))
            + ks * req.costs.c_out,
            np.inf)
    if not np.any(np.isfinite(cost)):
        return None
    return int(ks[np.nanargmin(cost)])


def _first_feasible_k(req: PlanRequest) -> Optional[int]:
    L, R0 = req.params.L, req.params.R0
    if req.scenario in ("basic-sublinear", "basic-linear"):
        k = int(math.floor(L * R0**2 / (2.0 * req.rho))) + 1
        margin = lambda kk: c_of_k(kk, req)  # noqa: E731
    else:
        k = max(1, int(math.floor(math.sqrt(2.0 * L / req.rho) * R0 - 1.0)) + 1)
        margin = lambda kk: d_of_k(kk, req)  # noqa: E731
    k = max(1, k)
    tries = 0
    while margin(k) <= 0:
        k += 1
        tries += 1
        if tries > 8 or k > req.k_search_max:
            return None if k > req.k_search_max else k
    return k


def plan(req: PlanRequest) -> Plan:
    """Full planning pipeline: case dispatch, outer-count search, rounding."""
    thr = threshold(req.scenario, req.params)
    if req.rho >= thr:
        interval = _case1_interval(req)
        if interval is None:
            raise InfeasiblePlanError(
                "all-ones regime has an empty feasibility interval", interval=None)
        lo, hi = interval
        k = max(1, int(math.ceil(lo - 1e-9)))
        while k <= math.floor(hi + 1e-9):
            sched = Schedule((1,) * k)
            bound = parametric_bound(req.scenario, k, sched, req.params)
            if bound <= req.rho:
                return Plan(
                    scenario=req.scenario, k_star=k, schedule=sched,
                    predicted_bound=bound,
                    predicted_cost=schedule_cost(sched, req.costs),
                    case="unconstrained",
                    relaxed_schedule=(1.0,) * k,
                )
            k += 1
        raise InfeasiblePlanError(
            f"no integer outer count inside the all-ones interval "
            f"[{lo:.6g}, {hi:.6g}]", interval=interval)

    k_min = _first_feasible_k(req)
    if k_min is None or k_min > req.k_search_max:
        raise InfeasiblePlanError(
            f"no feasible outer count within k <= {req.k_search_max}")
    k_cap = req.k_search_max

    obj = lambda kk: _relaxed_cost_int(req.scenario, int(kk), req)  # noqa: E731

    def obj_vec(ks: np.ndarray) -> np.ndarray:
        s = _relaxed_inner_sum_vec(req.scenario, np.asarray(ks, dtype=float), req)
        return req.costs.c_in * s + np.asarray(ks, dtype=float) * req.costs.c_out

    k_rel = minimize_over_k(obj, k_min, k_cap, objective_vec=obj_vec)

    window = 60
    cand_ks = set(range(max(k_min, k_rel - window), min(k_cap, k_rel + window) + 1))
    if req.scenario in ("basic-sublinear", "basic-linear"):
        k_round = _rounded_cost_scan_basic(req, k_min, k_cap)
        if k_round is not None:
            cand_ks.update(range(max(k_min, k_round - 2),
                                 min(k_cap, k_round + 2) + 1))
    try:
        const_plan = best_constant_plan(req)
        cand_ks.add(const_plan.k_star)
    except InfeasiblePlanError:
        const_plan = None

    best: Optional[Plan] = None
    for k in sorted(cand_ks):
        relaxed, feasible = relaxed_schedule(req.scenario, k, req)
        if not feasible:
            continue
        schedule = round_schedule(req.scenario, k, relaxed, req)
        cost = schedule_cost(schedule, req.costs)
        if best is None or cost < best.predicted_cost:
            best = Plan(
                scenario=req.scenario, k_star=k, schedule=schedule,
                predicted_bound=parametric_bound(req.scenario, k, schedule,
                                                 req.params),
                predicted_cost=cost, case="constrained",
                relaxed_schedule=tuple(float(v) for v in relaxed),
            )
    if const_plan is not None and (best is None
                                   or const_plan.predicted_cost < best.predicted_cost):
        best = const_plan
    if best is None:
        raise InfeasiblePlanError(
            f"no feasible plan within k <= {req.k_search_max}")
    if best.predicted_bound > req.rho:
        raise InfeasiblePlanError("rounded plan failed final feasibility check")
    return best
