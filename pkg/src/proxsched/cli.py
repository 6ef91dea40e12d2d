"""Command-line interface: planning, single runs, strategy sweeps, benchmark
presets, and error-model calibration. A JSON config file can preload any flag;
explicit flags win."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bench import (
    GraphInstance,
    TvInstance,
    build_graph_problem,
    build_lasso_problem,
    build_tv_problem,
    read_pgm,
    sweep,
    write_trace_csv,
)
from .bounds import BoundParams
from .core import CostModel, ErrorModel
from .oracles import calibrate_error_model
from .planner import PlanRequest, plan
from .solvers import ACCELERATED, BASIC, StopRule, run
from .strategies import constant_source, convergent_source, sip_source

PAPER_TV_BUDGET_BASIC = 1e6
PAPER_TV_BUDGET_ACCEL = 5e4
DESK_BUDGET = 1e5
DESK_SIDE = 64
PAPER_SIDE = 256


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill unset flags from the JSON config file, if one was given."""
    cfg_path = getattr(args, "config", None)
    if not cfg_path:
        return
    cfg = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            parser.error(f"unknown config key {key!r}")
        if getattr(args, attr) is None:
            setattr(args, attr, value)


def _build_model(args) -> ErrorModel:
    if args.model_gamma is not None:
        return ErrorModel.linear(A=args.model_a, gamma=args.model_gamma)
    return ErrorModel.sublinear(A=args.model_a, alpha=args.model_alpha)


def _parse_strategy(spec: str, scheme: str, model: Optional[ErrorModel]):
    kind, _, arg = spec.partition(":")
    if kind == "const":
        l = int(arg or 1)
        return spec, lambda: constant_source(l)
    if kind == "sip":
        tol = float(arg or 1e-8)
        return spec, lambda: sip_source(tol)
    if kind == "convergent":
        if model is None:
            raise SystemExit("convergent strategy needs --model-a and "
                             "--model-alpha (or --model-gamma)")
        delta = float(arg or 1.0)
        return spec, lambda: convergent_source(scheme, model, delta)
    raise SystemExit(f"unknown strategy spec {spec!r}; use const:L, sip:TOL, "
                     f"or convergent:DELTA")


def _build_preset(args):
    preset = args.preset
    seed = args.seed if args.seed is not None else 0
    if preset == "tv":
        side = args.image_side or (DESK_SIDE if args.desk else PAPER_SIDE)
        inst = TvInstance(
            image_side=side,
            noise_std=args.noise_std if args.noise_std is not None else 1e-3,
            lam=args.lam if args.lam is not None else 1e-4,
            seed=seed,
        )
        source = read_pgm(args.source_pgm) if args.source_pgm else None
        problem, oracle, _ = build_tv_problem(inst, source_image=source)
        return problem, oracle, {"preset": f"tv{side}", "seed": seed,
                                 "lambda": inst.lam}
    if preset == "graph":
        inst = GraphInstance(
            lam=args.lam if args.lam is not None else 1e-4, seed=seed)
        problem, oracle, _ = build_graph_problem(inst)
        return problem, oracle, {"preset": "graph100", "seed": seed,
                                 "lambda": inst.lam}
    if preset == "lasso":
        problem, oracle, _ = build_lasso_problem(
            lam=args.lam if args.lam is not None else 0.1, seed=seed)
        return problem, oracle, {"preset": "lasso", "seed": seed}
    raise SystemExit(f"unknown preset {preset!r}")


def _cmd_plan(args) -> int:
    model = _build_model(args)
    req = PlanRequest(
        scenario=args.scenario,
        rho=args.rho,
        params=BoundParams(L=args.lipschitz, R0=args.r0, model=model),
        costs=CostModel(c_in=args.c_in, c_out=args.c_out),
        k_search_max=args.k_max,
    )
    result = plan(req)
    out = {
        "scenario": result.scenario,
        "case": result.case,
        "k_star": result.k_star,
        "schedule": list(result.schedule.inner_counts),
        "predicted_bound": result.predicted_bound,
        "predicted_cost": result.predicted_cost,
        "rho": args.rho,
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_solve(args) -> int:
    problem, oracle, meta = _build_preset(args)
    scheme = args.scheme
    model = _build_model(args) if args.model_a is not None else None
    name, factory = _parse_strategy(args.strategy, scheme, model)
    budget = args.budget if args.budget is not None else DESK_BUDGET
    trace = run(problem, oracle, scheme, factory(),
                CostModel(c_in=args.c_in, c_out=args.c_out),
                StopRule(cost_budget=budget), np.zeros(problem.dim))
    meta.update({"strategy": name, "budget": budget, "scheme": scheme})
    write_trace_csv(args.out, trace, meta)
    print(f"wrote {args.out} ({len(trace)} outer iterations, "
          f"final objective {trace.records[-1].objective if trace.records else trace.f0})")
    return 0


def _cmd_sweep(args) -> int:
    problem, oracle, meta = _build_preset(args)
    scheme = args.scheme
    model = _build_model(args) if args.model_a is not None else None
    strategies = [_parse_strategy(s, scheme, model)
                  for s in args.strategies.split(",") if s]
    budget = args.budget if args.budget is not None else DESK_BUDGET
    paths = sweep(problem, oracle, scheme, strategies,
                  CostModel(c_in=args.c_in, c_out=args.c_out), budget,
                  args.out_dir, meta=meta)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _bench_common(args, preset: str) -> int:
    args.preset = preset
    desk = args.desk
    budgets = {
        BASIC: DESK_BUDGET if desk else PAPER_TV_BUDGET_BASIC,
        ACCELERATED: DESK_BUDGET if desk else PAPER_TV_BUDGET_ACCEL,
    }
    problem, oracle, meta = _build_preset(args)
    model = _calibrate_for(problem, oracle, args)
    costs = CostModel(c_in=args.c_in, c_out=args.c_out)
    for scheme in (BASIC, ACCELERATED):
        strategies = [
            (f"const:{l}", (lambda ll: (lambda: constant_source(ll)))(l))
            for l in (1, 5, 25)
        ]
        strategies.append(("sip:1e-08", lambda: sip_source(1e-8)))
        strategies.append(
            ("convergent:1", (lambda sch: (lambda: convergent_source(sch, model, 1.0)))(scheme)))
        paths = sweep(problem, oracle, scheme, strategies, costs,
                      budgets[scheme], args.out_dir, meta=meta)
        for p in paths:
            print(f"wrote {p}")
    return 0


def _calibrate_for(problem, oracle, args, ls=(1, 2, 4, 8, 16, 32, 64)) -> ErrorModel:
    rng = np.random.default_rng(12345)
    probes = []
    for _ in range(2):
        x = rng.standard_normal(problem.dim) * 0.3
        z = x - problem.grad_g(x) / problem.lipschitz_L
        probes.append((z, problem.lipschitz_L))
    exact = lambda z, L, l, warm=None: oracle(z, L, 4096)  # noqa: E731
    h_eval = problem.eval_h
    return calibrate_error_model(oracle, exact, h_eval, probes,
                                 kind="sublinear", alpha=1.0, ls=ls)


def _cmd_bench_tv(args) -> int:
    return _bench_common(args, "tv")


def _cmd_bench_graph(args) -> int:
    return _bench_common(args, "graph")


def _cmd_calibrate(args) -> int:
    problem, oracle, _ = _build_preset(args)
    model = _calibrate_for(problem, oracle, args)
    out = {"kind": model.kind, "A": model.A}
    if model.kind == "sublinear":
        out["alpha"] = model.alpha
    else:
        out["gamma"] = model.gamma
    print(json.dumps(out, indent=2))
    return 0


def _add_costs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c-in", type=float, default=1.0, help="cost per inner iteration")
    p.add_argument("--c-out", type=float, default=1.0, help="cost per outer iteration")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model-a", type=float, default=None, help="error-model constant A")
    p.add_argument("--model-alpha", type=float, default=None, help="sublinear rate exponent")
    p.add_argument("--model-gamma", type=float, default=None, help="linear rate factor")


def _add_preset(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=("tv", "graph", "lasso"), required=True)
    p.add_argument("--desk", action="store_true", help="desk-scale sizes and budgets")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--image-side", type=int, default=None)
    p.add_argument("--noise-std", type=float, default=None)
    p.add_argument("--lam", type=float, default=None, help="regularization weight")
    p.add_argument("--source-pgm", type=str, default=None, help="PGM source image")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proxsched")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="compute a cost-optimal schedule")
    p.add_argument("--config", type=str, default=None, help="JSON file of flag defaults")
    p.add_argument("--scenario", default=None,
                   choices=("basic-sublinear", "basic-linear",
                            "accel-sublinear", "accel-linear"))
    p.add_argument("--rho", type=float, default=None, help="target accuracy")
    p.add_argument("--lipschitz", type=float, default=None, help="gradient Lipschitz constant")
    p.add_argument("--r0", type=float, default=None, help="||x0 - x*||")
    p.add_argument("--model-a", type=float, default=None)
    p.add_argument("--model-alpha", type=float, default=None)
    p.add_argument("--model-gamma", type=float, default=None)
    p.add_argument("--c-in", type=float, default=None)
    p.add_argument("--c-out", type=float, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.set_defaults(func=_cmd_plan, _required=("scenario", "rho", "lipschitz",
                                              "r0", "model_a"))

    p = sub.add_parser("solve", help="run one strategy on a preset problem")
    p.add_argument("--config", type=str, default=None)
    _add_preset(p)
    p.add_argument("--scheme", choices=(BASIC, ACCELERATED), default=BASIC)
    p.add_argument("--strategy", required=True, help="const:L | sip:TOL | convergent:DELTA")
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--out", required=True)
    _add_costs(p)
    _add_model(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="run several strategies and summarize")
    p.add_argument("--config", type=str, default=None)
    _add_preset(p)
    p.add_argument("--scheme", choices=(BASIC, ACCELERATED), default=BASIC)
    p.add_argument("--strategies", required=True,
                   help="comma-separated strategy specs")
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--out-dir", required=True)
    _add_costs(p)
    _add_model(p)
    p.set_defaults(func=_cmd_sweep)

    for name, fn in (("bench-tv", _cmd_bench_tv), ("bench-graph", _cmd_bench_graph)):
        p = sub.add_parser(name, help=f"paper-protocol {name[6:]} sweep")
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--desk", action="store_true")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--image-side", type=int, default=None)
        p.add_argument("--noise-std", type=float, default=None)
        p.add_argument("--lam", type=float, default=None)
        p.add_argument("--source-pgm", type=str, default=None)
        p.add_argument("--out-dir", required=True)
        _add_costs(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("calibrate", help="fit an error model on a preset")
    p.add_argument("--config", type=str, default=None)
    _add_preset(p)
    _add_costs(p)
    p.set_defaults(func=_cmd_calibrate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _merge_config(args, parser)
    required = getattr(args, "_required", ())
    missing = [r for r in required if getattr(args, r) is None]
    if missing:
        parser.error("missing required values (flag or config): "
                     + ", ".join(m.replace("_", "-") for m in missing))
    # fill cost defaults for the plan subcommand after config merge
    if getattr(args, "c_in", None) is None:
        args.c_in = 1.0
    if getattr(args, "c_out", None) is None:
        args.c_out = 1.0
    if getattr(args, "k_max", None) is None and hasattr(args, "k_max"):
        args.k_max = 10**6
    if hasattr(args, "model_alpha") and args.model_a is not None \
            and args.model_alpha is None and args.model_gamma is None:
        args.model_alpha = 1.0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
