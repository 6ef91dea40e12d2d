"""Benchmark instances (TV deblurring, graph label prediction, lasso), strategy
sweeps with CSV traces, and the small file formats the CLI speaks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .core import CompositeProblem, CostModel, Trace
from .operators import blur, gaussian_kernel, incidence_matrix, operator_norm_squared, tv_value
from .oracles import GraphL1DualProx, L1ExactProx, ProxOracle, TvDualProx
from .solvers import InnerCountSource, StopRule, run

Vector = NDArray[np.float64]


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TvInstance:
    """Deblurring setup: Gaussian blur + noise on an N x N image in [0, 1]."""

    image_side: int = 64
    kernel_size: int = 9
    kernel_std: float = 4.0
    noise_std: float = 1e-3
    lam: float = 1e-4
    seed: int = 0


@dataclass(frozen=True)
class GraphInstance:
    """Two-cluster synthetic graph with a few explicit cross-cluster edges and
    +-1 labels observed on s vertices."""

    d: int = 100
    within_prob: float = 0.5
    cross_pairs: int = 4
    s: int = 10
    lam: float = 1e-4
    seed: int = 0


def synthetic_piecewise_image(side: int, seed: int = 0) -> NDArray:
    """Seeded piecewise-constant test image: rectangles plus a disk on a flat
    background, values in [0, 1]."""
    rng = np.random.default_rng(seed)
    img = np.full((side, side), 0.2)
    for level in (0.55, 0.8, 0.95):
        r0, c0 = rng.integers(0, side // 2, size=2)
        h = int(rng.integers(side // 6, side // 2))
        w = int(rng.integers(side // 6, side // 2))
        img[r0:r0 + h, c0:c0 + w] = level
    cy, cx = rng.integers(side // 4, 3 * side // 4, size=2)
    rad = side // 5
    yy, xx = np.mgrid[0:side, 0:side]
    img[(yy - cy) ** 2 + (xx - cx) ** 2 <= rad**2] = 0.7
    return img


def build_tv_problem(
    inst: TvInstance,
    source_image: Optional[NDArray] = None,
) -> tuple[CompositeProblem, TvDualProx, dict]:
    """TV-deblurring composite: smooth term ||Ax - y||^2 with a symmetric
    Gaussian blur A, nonsmooth term lam * isotropic TV.

    Returns the problem, its dual prox oracle, and an info dict carrying the
    source image, the observed image y, and the blur closure.
    """
    side = inst.image_side
    if side < 3:
        raise ValueError("image side must be at least 3")
    if source_image is None:
        source_image = synthetic_piecewise_image(side, inst.seed)
    source_image = np.asarray(source_image, dtype=float)
    if source_image.shape != (side, side):
        raise ValueError(
            f"source image shape {source_image.shape} != ({side}, {side})")
    kernel = gaussian_kernel(inst.kernel_size, inst.kernel_std)
    rng = np.random.default_rng(inst.seed)
    y = blur(source_image, kernel) + inst.noise_std * rng.standard_normal((side, side))

    def apply_blur_flat(v: Vector) -> Vector:
        return blur(v.reshape(side, side), kernel).ravel()

    norm2 = operator_norm_squared(apply_blur_flat, apply_blur_flat, side * side,
                                  iters=100)
    L = 2.0 * norm2 * 1.01
    y_flat = y.ravel()

    def eval_g(x: Vector) -> float:
        r = apply_blur_flat(x) - y_flat
        return float(r @ r)

    def grad_g(x: Vector) -> Vector:
        r = apply_blur_flat(x) - y_flat
        return 2.0 * apply_blur_flat(r)

    lam = inst.lam

    def eval_h(x: Vector) -> float:
        return lam * tv_value(x.reshape(side, side))

    problem = CompositeProblem(dim=side * side, grad_g=grad_g, eval_g=eval_g,
                               eval_h=eval_h, lipschitz_L=L)
    oracle = TvDualProx(lam=lam)
    info = {"source": source_image, "observed": y, "blur": apply_blur_flat,
            "kernel": kernel}
    return problem, oracle, info


def build_graph_problem(inst: GraphInstance) -> tuple[CompositeProblem, GraphL1DualProx, dict]:
    """Semi-supervised labeling composite: ||Ax - y||^2 + lam * ||Bx||_1 with
    A selecting the labeled vertices and B the signed edge-incidence map."""
    d = inst.d
    if not 0 < inst.s <= d:
        raise ValueError("need 0 < s <= d")
    half = d // 2
    cluster = np.array([0] * half + [1] * (d - half))
    labels = np.where(cluster == 0, 1.0, -1.0)
    rng = np.random.default_rng(inst.seed)
    edges: list[tuple[int, int]] = []
    for c in (0, 1):
        members = np.nonzero(cluster == c)[0]
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                if rng.random() < inst.within_prob:
                    edges.append((int(members[a]), int(members[b])))
    n_within = len(edges)
    c0 = np.nonzero(cluster == 0)[0]
    c1 = np.nonzero(cluster == 1)[0]
    available = len(c0) * len(c1)
    if inst.cross_pairs > available:
        raise ValueError(
            f"cross_pairs = {inst.cross_pairs} exceeds available {available}")
    flat = rng.choice(available, size=inst.cross_pairs, replace=False)
    for f in flat:
        edges.append((int(c0[f // len(c1)]), int(c1[f % len(c1)])))
    B = incidence_matrix(d, edges)
    labeled = np.sort(rng.choice(d, size=inst.s, replace=False))
    A = np.zeros((inst.s, d))
    A[np.arange(inst.s), labeled] = 1.0
    y = labels[labeled]

    def eval_g(x: Vector) -> float:
        r = A @ x - y
        return float(r @ r)

    def grad_g(x: Vector) -> Vector:
        return 2.0 * (A.T @ (A @ x - y))

    lam = inst.lam

    oracle = GraphL1DualProx(lam=lam, B=B)

    def eval_h(x: Vector) -> float:
        return lam * float(np.abs(B @ x).sum())

    problem = CompositeProblem(dim=d, grad_g=grad_g, eval_g=eval_g,
                               eval_h=eval_h, lipschitz_L=2.0)
    info = {"B": B, "A": A, "labels": labels, "labeled": labeled, "y": y,
            "edges": edges, "n_within_edges": n_within, "cluster": cluster}
    return problem, oracle, info


def build_lasso_problem(n_rows: int = 60, dim: int = 40, lam: float = 0.1,
                        seed: int = 0) -> tuple[CompositeProblem, L1ExactProx, dict]:
    """Small dense lasso with an exact soft-threshold prox, used as the desk
    instance for validating rates and bounds."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n_rows, dim)) / math.sqrt(n_rows)
    x_true = np.zeros(dim)
    support = rng.choice(dim, size=max(1, dim // 5), replace=False)
    x_true[support] = rng.standard_normal(support.size)
    b = M @ x_true + 0.01 * rng.standard_normal(n_rows)
    L = float(np.linalg.norm(M, ord=2) ** 2)

    def eval_g(x: Vector) -> float:
        r = M @ x - b
        return 0.5 * float(r @ r)

    def grad_g(x: Vector) -> Vector:
        return M.T @ (M @ x - b)

    def eval_h(x: Vector) -> float:
        return lam * float(np.abs(x).sum())

    problem = CompositeProblem(dim=dim, grad_g=grad_g, eval_g=eval_g,
                               eval_h=eval_h, lipschitz_L=L)
    return problem, L1ExactProx(lam=lam), {"M": M, "b": b, "x_true": x_true}


# ---------------------------------------------------------------------------
# Trace CSV I/O
# ---------------------------------------------------------------------------

CSV_HEADER = "outer_iter,inner_iters,cum_cost,objective,min_objective_so_far,avg_objective,bound"


def write_trace_csv(path: Path | str, trace: Trace, meta: dict) -> None:
    """Write one strategy's trace; '#' comment lines carry run metadata."""
    path = Path(path)
    lines = []
    for key in sorted(meta):
        lines.append(f"# {key}={meta[key]}")
    lines.append(f"# f0={trace.f0!r}")
    lines.append(CSV_HEADER)
    best = math.inf
    for rec in trace.records:
        best = min(best, rec.objective, trace.f0)
        bound = "" if rec.bound_value is None else repr(rec.bound_value)
        lines.append(
            f"{rec.outer_index},{rec.inner_used},{rec.cum_cost!r},"
            f"{rec.objective!r},{best!r},{rec.avg_objective!r},{bound}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_csv(path: Path | str) -> tuple[dict, dict]:
    """Read a trace CSV back into (meta, columns-as-arrays)."""
    meta: dict = {}
    rows: list[list[str]] = []
    header_seen = False
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line.strip() != CSV_HEADER:
                raise ValueError(f"unexpected CSV header in {path}: {line!r}")
            header_seen = True
            continue
        rows.append(line.split(","))
    cols = {
        "outer_iter": np.array([int(r[0]) for r in rows]),
        "inner_iters": np.array([int(r[1]) for r in rows]),
        "cum_cost": np.array([float(r[2]) for r in rows]),
        "objective": np.array([float(r[3]) for r in rows]),
        "min_objective_so_far": np.array([float(r[4]) for r in rows]),
        "avg_objective": np.array([float(r[5]) for r in rows]),
        "bound": np.array([float(r[6]) if r[6] != "" else np.nan for r in rows]),
    }
    return meta, cols


def reference_optimum(trace_files: Sequence[Path | str]) -> float:
    """Global minimum objective achieved across the given trace files."""
    if not trace_files:
        raise ValueError("need at least one trace file")
    best = math.inf
    for path in trace_files:
        _, cols = read_trace_csv(path)
        if cols["objective"].size:
            best = min(best, float(cols["objective"].min()))
    return best


def cost_to_reach(cum_cost: np.ndarray, min_obj: np.ndarray, f_star: float,
                  level: float) -> Optional[float]:
    """First cumulative cost at which the running-min gap drops to level."""
    hit = np.nonzero(min_obj - f_star <= level)[0]
    if hit.size == 0:
        return None
    return float(cum_cost[hit[0]])


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def sweep(
    problem: CompositeProblem,
    oracle: ProxOracle,
    scheme: str,
    strategies: Sequence[tuple[str, Callable[[], InnerCountSource]]],
    costs: CostModel,
    budget: float,
    out_dir: Path | str,
    x0: Optional[Vector] = None,
    meta: Optional[dict] = None,
    n_levels: int = 20,
) -> list[Path]:
    """Run each named strategy to the cost budget and write one CSV per
    strategy plus a summary CSV of cost-to-reach-accuracy values.

    ``strategies`` holds (name, factory) pairs; sources are stateful, so a
    fresh one is built per run. Returns the trace paths (summary excluded).
    """
    names = [name for name, _ in strategies]
    if len(set(names)) != len(names):
        raise ValueError("strategy names must be unique")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if x0 is None:
        x0 = np.zeros(problem.dim)
    base_meta = dict(meta or {})
    base_meta.setdefault("budget", budget)
    base_meta.setdefault("scheme", scheme)
    paths: list[Path] = []
    traces: list[Trace] = []
    for name, factory in strategies:
        trace = run(problem, oracle, scheme, factory(), costs,
                    StopRule(cost_budget=budget), x0)
        path = out_dir / f"trace_{scheme}_{name}.csv"
        write_trace_csv(path, trace, {**base_meta, "strategy": name})
        paths.append(path)
        traces.append(trace)
    if traces:
        _write_summary(out_dir / f"summary_{scheme}.csv", names, traces, n_levels)
    else:
        (out_dir / f"summary_{scheme}.csv").write_text(
            "strategy,level,cost_to_reach\n", encoding="utf-8")
    return paths


def _write_summary(path: Path, names: Sequence[str], traces: Sequence[Trace],
                   n_levels: int) -> None:
    f_star = min(min(t.min_objectives()[-1], t.f0) for t in traces)
    f0 = traces[0].f0
    g0 = max(f0 - f_star, 1e-300)
    gaps = []
    for t in traces:
        g = float(t.min_objectives()[-1] - f_star)
        if g > 0:
            gaps.append(g)
    g_lo = max(min(gaps), g0 * 1e-14) if gaps else g0 * 1e-14
    g_lo = min(g_lo, g0)
    levels = np.geomspace(g0, g_lo, num=n_levels)
    lines = ["strategy,level,cost_to_reach"]
    for name, t in zip(names, traces):
        costs_arr = t.cum_costs()
        mins = t.min_objectives()
        for level in levels:
            c = cost_to_reach(costs_arr, mins, f_star, float(level))
            lines.append(f"{name},{level!r},{'' if c is None else repr(c)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# PGM image I/O (binary, 8-bit)
# ---------------------------------------------------------------------------

def write_pgm(path: Path | str, image: NDArray) -> None:
    """Write an image with values in [0, 1] as binary 8-bit PGM (P5)."""
    img = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    data = np.round(img * 255.0).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path: Path | str) -> NDArray:
    """Read a binary 8-bit PGM (P5) into an array scaled to [0, 1]."""
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P5"):
        raise ValueError("only binary PGM (P5) is supported")
    # header: magic, width, height, maxval, separated by whitespace/comments
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(t) for t in tokens)
    if maxval > 255:
        raise ValueError("only 8-bit PGM is supported")
    data = np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=pos)
    return data.reshape(h, w).astype(float) / float(maxval)
