"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Criteria 1-3 and 6 exercise the planner against independent search oracles;
4-5 validate the rate bounds on the desk lasso instance; 7-9 reproduce the
qualitative desk-scale benchmark behaviour; 10 re-runs the core property
suites compactly. Heavy desk sweeps are shared through a module fixture.
"""

import math
import time

import numpy as np
import pytest

from numeric_oracle import (
    brute_force_constant,
    dp_schedule_cost,
    numeric_relaxed_schedule,
)
from proxsched.bench import (
    GraphInstance,
    TvInstance,
    build_graph_problem,
    build_tv_problem,
)
from proxsched.bounds import BoundParams, parametric_bound
from proxsched.core import CostModel, ErrorModel, Schedule, schedule_cost
from proxsched.operators import image_divergence, image_gradient
from proxsched.oracles import (
    L1ExactProx,
    calibrate_error_model,
    prox_l1_exact,
    prox_objective_gap,
    prox_synthetic,
)
from proxsched.planner import (
    InfeasiblePlanError,
    PlanRequest,
    best_constant_plan,
    c_of_k,
    d_of_k,
    plan,
    relaxed_schedule,
    threshold,
)
from proxsched.solvers import (
    ACCELERATED,
    BASIC,
    StopRule,
    run,
    run_with_synthetic_errors,
)
from proxsched.strategies import constant_source, convergent_source, sip_source

COSTS = CostModel(1.0, 1.0)
DESK_BUDGET = 1e5


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")


def _make_request(scenario, rng, k_max, theta_range=(0.08, 0.5)):
    """One random planning instance with rho drawn below the scenario threshold."""
    L = float(rng.uniform(1.0, 3.0))
    R0 = float(rng.uniform(0.6, 1.6))
    A = float(rng.uniform(0.4, 1.5))
    if scenario.endswith("sublinear"):
        model = ErrorModel.sublinear(A, float(rng.choice([1.0, 2.0])))
    else:
        model = ErrorModel.linear(A, float(rng.uniform(0.25, 0.65)))
    params = BoundParams(L=L, R0=R0, model=model)
    thr = threshold(scenario, params)
    if thr <= 0:
        return None
    rho = float(rng.uniform(*theta_range)) * thr
    costs = CostModel(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))
    return PlanRequest(scenario, rho=rho, params=params, costs=costs,
                       k_search_max=k_max)


# ---------------------------------------------------------------------------
# Criterion 1: planner vs exhaustive constant-schedule search, scenarios 1-3
# ---------------------------------------------------------------------------

def test_criterion_01_planner_vs_brute_force():
    rng = np.random.default_rng(20240)
    scenarios = ["basic-sublinear", "basic-linear", "accel-sublinear"]
    t0 = time.monotonic()
    checked = 0
    while checked < 20:
        req = _make_request(scenarios[checked % 3], rng, k_max=2000)
        if req is None:
            continue
        try:
            const = best_constant_plan(req)
        except InfeasiblePlanError:
            continue
        if not (3 <= const.k_star <= 1800 and const.schedule[0] <= 1800):
            continue  # keep the 2000 x 2000 oracle box strictly interior
        brute = brute_force_constant(req)
        assert brute is not None
        result = plan(req)
        assert result.predicted_bound <= req.rho
        assert result.predicted_cost <= brute[2] + 1e-9, \
            f"planner ({result.predicted_cost}) worse than brute force ({brute[2]})"
        assert math.isclose(const.predicted_cost, brute[2], rel_tol=1e-12), \
            f"constant-restricted planner {const.predicted_cost} != brute {brute[2]}"
        checked += 1
    elapsed = time.monotonic() - t0
    ok = elapsed < 60.0
    _report(1, ok, f"20 instances, planner <= exhaustive search and "
                   f"constant restriction matches exactly; {elapsed:.1f}s")
    assert ok, f"runtime {elapsed:.1f}s exceeds 60s"


# ---------------------------------------------------------------------------
# Criterion 2: scenario-4 planner vs dynamic programming
# ---------------------------------------------------------------------------

def test_criterion_02_planner_vs_dp():
    rng = np.random.default_rng(20241)
    t0 = time.monotonic()
    checked = 0
    worst_ratio = 0.0
    while checked < 10:
        req = _make_request("accel-linear", rng, k_max=30,
                            theta_range=(0.25, 0.7))
        if req is None:
            continue
        try:
            result = plan(req)
        except InfeasiblePlanError:
            continue
        if max(result.schedule.inner_counts) > 38:
            continue  # keep the DP box l <= 40 adequate
        # relaxed schedule satisfies the active constraint
        gamma = req.params.model.gamma
        rel = np.asarray(result.relaxed_schedule)
        i = np.arange(1, result.k_star + 1)
        total = float(np.sum(i * (1 - gamma) ** (rel / 2.0)))
        D = d_of_k(result.k_star, req)
        assert total == pytest.approx(D, rel=1e-9), \
            f"active constraint violated: {total} vs {D}"
        dp_cost = dp_schedule_cost(req, k_max=30, l_max=40)
        assert math.isfinite(dp_cost)
        ratio = result.predicted_cost / dp_cost
        worst_ratio = max(worst_ratio, ratio)
        assert ratio <= 1.02 + 1e-12, \
            f"planner cost {result.predicted_cost} vs DP {dp_cost} (ratio {ratio:.4f})"
        checked += 1
    elapsed = time.monotonic() - t0
    ok = elapsed < 120.0
    _report(2, ok, f"10 instances, worst planner/DP cost ratio {worst_ratio:.4f} "
                   f"(<= 1.02), active constraint at 1e-9; {elapsed:.1f}s")
    assert ok, f"runtime {elapsed:.1f}s exceeds 120s"


# ---------------------------------------------------------------------------
# Criterion 3: KKT closed forms vs numeric constrained minimizer
# ---------------------------------------------------------------------------

def test_criterion_03_kkt_vs_numeric():
    rng = np.random.default_rng(20242)
    scenarios = ["basic-sublinear", "basic-linear", "accel-sublinear",
                 "accel-linear"]
    checked = 0
    worst = 0.0
    while checked < 20:
        scen = scenarios[checked % 4]
        req = _make_request(scen, rng, k_max=10**6, theta_range=(0.15, 0.6))
        if req is None:
            continue
        k = int(rng.integers(8, 36))
        sched, ok = relaxed_schedule(scen, k, req)
        if not ok or np.max(sched) > 5e4:
            continue
        total = c_of_k(k, req) if scen.startswith("basic") else d_of_k(k, req)
        num = numeric_relaxed_schedule(scen, k, total, req.params.model)
        err = float(np.max(np.abs(sched - num) / np.maximum(1.0, np.abs(sched))))
        worst = max(worst, err)
        assert err < 1e-6, f"{scen} k={k}: componentwise error {err:.2e}"
        checked += 1
    _report(3, True, f"20 instances across all scenarios, worst componentwise "
                     f"relative error {worst:.2e} (< 1e-6)")


# ---------------------------------------------------------------------------
# Criteria 4-5: bound validity and exact-prox rates on the desk lasso
# ---------------------------------------------------------------------------

def test_criterion_04_bound_validity_with_synthetic_errors(lasso, lasso_reference):
    problem, oracle, _ = lasso
    f_star, x_star = lasso_reference
    x0 = np.zeros(problem.dim)
    R0 = float(np.linalg.norm(x0 - x_star))
    bp = BoundParams(L=problem.lipschitz_L, R0=R0)
    t0 = time.monotonic()
    eps_const = [1e-3] * 200
    tr_basic = run_with_synthetic_errors(problem, BASIC, eps_const, COSTS, x0,
                                         exact_oracle=oracle, bound_params=bp)
    viol_basic = sum(
        1 for rec in tr_basic.records
        if rec.avg_objective - f_star > rec.bound_value * (1 + 1e-9))
    eps_decay = [1e-4 / i**5 for i in range(1, 201)]
    tr_accel = run_with_synthetic_errors(problem, ACCELERATED, eps_decay, COSTS,
                                         x0, exact_oracle=oracle, bound_params=bp)
    viol_accel = sum(
        1 for rec in tr_accel.records
        if rec.objective - f_star > rec.bound_value * (1 + 1e-9))
    elapsed = time.monotonic() - t0
    ok = viol_basic == 0 and viol_accel == 0 and elapsed < 30.0
    _report(4, ok, f"basic violations {viol_basic}/200, accelerated violations "
                   f"{viol_accel}/200; {elapsed:.1f}s")
    assert viol_basic == 0 and viol_accel == 0
    assert elapsed < 30.0


def test_criterion_05_exact_prox_rates(lasso, lasso_reference):
    problem, oracle, _ = lasso
    f_star, x_star = lasso_reference
    x0 = np.zeros(problem.dim)
    R0sq = float((x0 - x_star) @ (x0 - x_star))
    L = problem.lipschitz_L
    tr_basic = run(problem, oracle, BASIC, constant_source(1), COSTS,
                   StopRule(max_outer=1000), x0)
    viol_basic = sum(1 for rec in tr_basic.records
                     if rec.objective - f_star > L * R0sq / (2 * rec.outer_index)
                     * (1 + 1e-9) + 1e-15)
    tr_accel = run(problem, oracle, ACCELERATED, constant_source(1), COSTS,
                   StopRule(max_outer=1000), x0)
    viol_accel = sum(1 for rec in tr_accel.records
                     if rec.objective - f_star > 2 * L * R0sq
                     / (rec.outer_index + 1) ** 2 * (1 + 1e-9) + 1e-15)
    ok = viol_basic == 0 and viol_accel == 0
    _report(5, ok, f"k <= 1000: basic violations {viol_basic}, "
                   f"accelerated violations {viol_accel}")
    assert ok


# ---------------------------------------------------------------------------
# Criterion 6: "do not optimize further" at the bound level
# ---------------------------------------------------------------------------

def test_criterion_06_do_not_optimize_further():
    rng = np.random.default_rng(20243)
    scenarios = ["basic-sublinear", "basic-linear"]
    cases = []
    while len(cases) < 20:
        req = _make_request(scenarios[len(cases) % 2], rng, k_max=5000)
        if req is None:
            continue
        try:
            result = plan(req)
        except InfeasiblePlanError:
            continue
        if result.case != "constrained":
            continue
        cases.append((req, result))
    failures = []
    for req, result in cases:
        l_star = result.relaxed_schedule[0]  # constant in these scenarios
        k = result.k_star
        base = parametric_bound(req.scenario, k, [l_star] * k, req.params)
        worst = None
        for kp in range(k + 1, k + 11):
            b = parametric_bound(req.scenario, kp, [l_star] * kp, req.params)
            if b <= req.rho:
                worst = (kp, b / req.rho) if worst is None else min(
                    worst, (kp, b / req.rho), key=lambda t: t[1])
        if worst is not None:
            failures.append((req.scenario, k, worst))
    ok = not failures
    detail = (f"{len(cases) - len(failures)}/20 planner outputs keep "
              f"B(k') > rho for k' = k*+1..k*+10")
    if failures:
        scen, k, (kp, ratio) = failures[0]
        detail += (f"; e.g. {scen} k*={k}: B({kp}) = {ratio:.4f} * rho, i.e. the "
                   f"bound keeps improving while the accumulated error term "
                   f"is below the initial-distance term")
    _report(6, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# Criteria 7-9: desk-scale benchmark reproductions (shared sweeps)
# ---------------------------------------------------------------------------

CONSTANT_LS = (1, 5, 25)


@pytest.fixture(scope="module")
def desk_sweeps():
    """All desk benchmark runs: {bench: {(scheme, strategy): Trace}}, plus the
    per-benchmark reference optimum and the sweep wall time."""
    t0 = time.monotonic()
    out = {}
    for bench in ("tv", "graph"):
        if bench == "tv":
            problem, oracle, _ = build_tv_problem(TvInstance(image_side=64, seed=0))
        else:
            problem, oracle, _ = build_graph_problem(GraphInstance(seed=0))
        rng = np.random.default_rng(12345)
        probes = []
        for _ in range(2):
            x = rng.standard_normal(problem.dim) * 0.3
            probes.append((x - problem.grad_g(x) / problem.lipschitz_L,
                           problem.lipschitz_L))
        exact = lambda z, L, l, warm=None: oracle(z, L, 4096)  # noqa: E731
        model = calibrate_error_model(oracle, exact, problem.eval_h, probes,
                                      kind="sublinear", alpha=1.0,
                                      ls=(1, 2, 4, 8, 16, 32, 64))
        runs = {}
        x0 = np.zeros(problem.dim)
        for scheme in (BASIC, ACCELERATED):
            for l in CONSTANT_LS:
                runs[(scheme, f"const{l}")] = run(
                    problem, oracle, scheme, constant_source(l), COSTS,
                    StopRule(cost_budget=DESK_BUDGET), x0)
            runs[(scheme, "sip")] = run(
                problem, oracle, scheme, sip_source(1e-8), COSTS,
                StopRule(cost_budget=DESK_BUDGET), x0)
            runs[(scheme, "convergent")] = run(
                problem, oracle, scheme, convergent_source(scheme, model, 1.0),
                COSTS, StopRule(cost_budget=DESK_BUDGET), x0)
        f_star = min(min(t.min_objectives()[-1] for t in runs.values()),
                     runs[(BASIC, "const1")].f0)
        out[bench] = {"runs": runs, "f_star": f_star, "model": model}
    out["elapsed"] = time.monotonic() - t0
    return out


def _mid_level(bench_data, scheme):
    """Geometric midpoint between the initial gap and the best gap achieved by
    the constant strategies under this scheme."""
    runs, f_star = bench_data["runs"], bench_data["f_star"]
    g0 = runs[(scheme, "const1")].f0 - f_star
    best = min(runs[(scheme, f"const{l}")].min_objectives()[-1] - f_star
               for l in CONSTANT_LS)
    best = max(best, g0 * 1e-300)
    return math.sqrt(g0 * best)


def _cost_to_level(trace, f_star, level):
    mins = trace.min_objectives()
    hit = np.nonzero(mins - f_star <= level)[0]
    return float(trace.cum_costs()[hit[0]]) if hit.size else math.inf


def _ordering_report(bench_data, scheme):
    """((a)-strict, (b)-strict, worst relative inversion across (a) and (b))."""
    runs, f_star = bench_data["runs"], bench_data["f_star"]
    mid = _mid_level(bench_data, scheme)
    costs = [_cost_to_level(runs[(scheme, f"const{l}")], f_star, mid)
             for l in CONSTANT_LS]
    plateaus = [runs[(scheme, f"const{l}")].min_objectives()[-1]
                for l in CONSTANT_LS]
    a_strict = costs[0] < costs[1] < costs[2]
    b_strict = plateaus[0] > plateaus[1] > plateaus[2]
    inversions = []
    for lo, hi in ((0, 1), (1, 2)):
        # (a): cost should grow with l
        c_lo, c_hi = costs[lo], costs[hi]
        if math.isinf(c_lo) and math.isinf(c_hi):
            inversions.append(0.0)
        elif math.isinf(c_lo):
            inversions.append(math.inf)
        elif c_lo > c_hi:
            inversions.append((c_lo - c_hi) / c_lo)
        else:
            inversions.append(0.0)
        # (b): plateau should fall with l
        p_lo, p_hi = plateaus[lo], plateaus[hi]
        if p_lo < p_hi:
            inversions.append((p_hi - p_lo) / p_hi)
        else:
            inversions.append(0.0)
    return a_strict, b_strict, max(inversions), costs, plateaus


def test_criterion_07_constant_strategy_orderings(desk_sweeps):
    t0 = time.monotonic()
    lines = []
    ok_all = True
    for scheme in (BASIC, ACCELERATED):
        stats = {bench: _ordering_report(desk_sweeps[bench], scheme)
                 for bench in ("tv", "graph")}
        strict = [b for b in ("tv", "graph") if stats[b][0] and stats[b][1]]
        scheme_ok = False
        for bench in strict:
            other = "graph" if bench == "tv" else "tv"
            if stats[other][2] <= 0.05:
                scheme_ok = True
        ok_all = ok_all and scheme_ok
        for bench in ("tv", "graph"):
            a, b, inv, costs, plateaus = stats[bench]
            lines.append(
                f"{scheme}/{bench}: (a){'+' if a else '-'} (b){'+' if b else '-'} "
                f"max_inv={inv if math.isfinite(inv) else 'inf'} "
                f"costs={costs} plateaus={[f'{p:.6g}' for p in plateaus]}")
    elapsed = desk_sweeps["elapsed"] + (time.monotonic() - t0)
    ok = ok_all and elapsed < 600.0
    _report(7, ok, f"runtime {elapsed:.0f}s; " + " | ".join(lines))
    assert ok_all, "; ".join(lines)
    assert elapsed < 600.0


def test_criterion_08_sip_behaviour(desk_sweeps):
    details = []
    ok = True
    for bench in ("tv", "graph"):
        runs = desk_sweeps[bench]["runs"]
        for scheme in (BASIC, ACCELERATED):
            sip_trace = runs[(scheme, "sip")]
            ls = [r.inner_used for r in sip_trace.records]
            nondecreasing = all(b >= a for a, b in zip(ls, ls[1:]))
            sip_final = sip_trace.min_objectives()[-1]
            best_const = min(runs[(scheme, f"const{l}")].min_objectives()[-1]
                             for l in CONSTANT_LS)
            within = sip_final <= 1.05 * best_const
            ok = ok and nondecreasing and within
            details.append(f"{bench}/{scheme}: l nondecr={nondecreasing}, "
                           f"sip={sip_final:.8g} vs best const={best_const:.8g}")
    _report(8, ok, " | ".join(details))
    assert ok, "; ".join(details)


def test_criterion_09_convergent_strategy_reversal(desk_sweeps):
    details = []
    ok = True
    for bench in ("tv", "graph"):
        data = desk_sweeps[bench]
        runs, f_star = data["runs"], data["f_star"]
        mid = _mid_level(data, BASIC)
        conv_cost = _cost_to_level(runs[(BASIC, "convergent")], f_star, mid)
        const_costs = [_cost_to_level(runs[(BASIC, f"const{l}")], f_star, mid)
                       for l in CONSTANT_LS]
        best_const = min(const_costs)
        ok = ok and conv_cost > best_const
        details.append(f"{bench}: convergent {conv_cost} vs best constant "
                       f"{best_const}")
    _report(9, ok, " | ".join(details))
    assert ok, "; ".join(details)


# ---------------------------------------------------------------------------
# Criterion 10: property suites
# ---------------------------------------------------------------------------

def test_criterion_10_property_suites():
    rng = np.random.default_rng(20244)
    # operator adjointness
    for _ in range(10):
        x = rng.standard_normal((11, 11))
        p = rng.standard_normal((2, 11, 11))
        assert abs(float(np.sum(image_gradient(x) * p))
                   + float(np.sum(x * image_divergence(p)))) <= 1e-10
    # prox optimality conditions
    for _ in range(50):
        z = rng.standard_normal(6) * 2
        L, lam = float(rng.uniform(0.5, 3)), float(rng.uniform(0.1, 1.0))
        x = prox_l1_exact(z, L, lam).point
        for xi, zi in zip(x, z):
            if xi != 0.0:
                assert abs(L * (xi - zi) + lam * np.sign(xi)) <= 1e-12
            else:
                assert abs(L * (xi - zi)) <= lam + 1e-12
    # synthetic-error exactness
    lam = 0.5
    exact = L1ExactProx(lam=lam)
    h_eval = lambda v: lam * float(np.abs(v).sum())  # noqa: E731
    for _ in range(20):
        z = rng.standard_normal(5)
        L = float(rng.uniform(0.5, 3))
        eps = float(10 ** rng.uniform(-5, -1))
        res = prox_synthetic(z, L, exact, h_eval, eps)
        gap = prox_objective_gap(res.point, exact(z, L, 0).point, z, L, h_eval)
        assert gap == pytest.approx(eps, rel=1e-10)
    # schedule-cost arithmetic
    for _ in range(20):
        cm = CostModel(float(rng.uniform(0, 2)), float(rng.uniform(0.1, 2)))
        s1 = tuple(int(v) for v in rng.integers(1, 30, size=4))
        s2 = tuple(int(v) for v in rng.integers(1, 30, size=3))
        assert schedule_cost(Schedule(s1 + s2), cm) == pytest.approx(
            schedule_cost(Schedule(s1), cm) + schedule_cost(Schedule(s2), cm))
    # bound monotonicity in each inner count
    for scen in ("basic-sublinear", "basic-linear", "accel-sublinear",
                 "accel-linear"):
        model = (ErrorModel.sublinear(0.9, 1.4) if scen.endswith("sublinear")
                 else ErrorModel.linear(0.9, 0.45))
        params = BoundParams(L=1.8, R0=1.1, model=model)
        for _ in range(25):
            k = int(rng.integers(1, 12))
            ls = rng.integers(1, 40, size=k).astype(float)
            base = parametric_bound(scen, k, ls, params)
            j = int(rng.integers(k))
            ls[j] += 1
            assert parametric_bound(scen, k, ls, params) <= base + 1e-15
    _report(10, True, "adjointness, prox optimality, synthetic-error exactness, "
                      "cost arithmetic, bound monotonicity: all pass")
