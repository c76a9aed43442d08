"""Experiment driver: instance generation, benchmark grids and the oscillation demo, plus reports."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .matrix import dense, read_csv
from .mwu import MASS, MIN_ENTRY, OBJECTIVE, MwuConfig, RunTrace, solve
from .objective import FactorPair
from .stationarity import check_sosp_nmf, check_sosp_snmf

SCHEMA = 1
SOLVERS = ("mwu", "ls-alternating", "ls-concurrent")
INSTANCE_KINDS = ("random-rank-r", "random-dense", "from-file")

# Step-size multiplier for benchmark runs. The default rule (scale 1) bounds
# the gradient over the whole simplex, which is orders of magnitude above its
# size along typical trajectories once C is large; 1e3 still needs no
# safeguard halvings on the benchmark grid.
BENCH_EPSILON_SCALE = 1e3

BENCH_COLUMNS = ("n", "r", "seed", "iterations", "wall_time_s", "relative_error", "reached_target")


@dataclass
class ExperimentSpec:
    n: int
    m: int
    r: int
    kind: str = "random-rank-r"
    seeds: list = field(default_factory=lambda: [0])
    solver: str = "mwu"
    target: float = 0.01
    max_iters: int = 500_000
    epsilon_scale: float = BENCH_EPSILON_SCALE
    path: str | None = None

    def __post_init__(self):
        if self.kind not in INSTANCE_KINDS:
            raise ValueError(f"unknown instance kind {self.kind!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")


def make_instance(kind, n, m, r, seed, path=None) -> np.ndarray:
    """Random rank-r (V = W0 H0, entries of W0, H0 uniform on [0, 1]),
    random dense (entries uniform on [0, 1]) or a CSV file."""
    if kind == "from-file":
        return read_csv(path)
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, m, r]))
    if kind == "random-rank-r":
        return dense(rng.random((n, r)) @ rng.random((r, m)))
    if kind == "random-dense":
        return dense(rng.random((n, m)))
    raise ValueError(f"unknown instance kind {kind!r}")


def _baseline_start(v, r, seed):
    n, m = v.shape
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    return FactorPair(rng.uniform(0.1, 1.0, (n, r)), rng.uniform(0.1, 1.0, (r, m)))


def run_cell(spec: ExperimentSpec, seed: int) -> dict:
    v = make_instance(spec.kind, spec.n, spec.m, spec.r, seed, spec.path)
    t0 = time.perf_counter()
    if spec.solver == "mwu":
        cfg = MwuConfig(seed=seed, target=spec.target, max_iters=spec.max_iters,
                        epsilon_scale=spec.epsilon_scale)
        tr = solve(v, spec.r, cfg)
        iters, rel = tr.iterations, tr.relative_error
    else:
        variant = spec.solver.split("-", 1)[1]
        cfg = baselines.MuConfig(variant=variant, max_iters=spec.max_iters, target=spec.target)
        tr = baselines.run(v, _baseline_start(v, spec.r, seed), cfg)
        iters = len(tr.objective)
        rel = float(tr.objective[-1] / tr.initial_objective) if iters else 1.0
    wall = time.perf_counter() - t0
    return {
        "n": spec.n,
        "r": spec.r,
        "seed": seed,
        "iterations": iters,
        "wall_time_s": wall,
        "relative_error": rel,
        "reached_target": bool(rel < spec.target),
    }


def _cell(args):
    return run_cell(*args)


def benchmark(n_list, r_list, seeds, target=0.01, solver="mwu", max_iters=500_000,
              epsilon_scale=BENCH_EPSILON_SCALE, workers=1, progress=None) -> list[dict]:
    """One row per (n, r, seed) on n x n random rank-r instances, sorted."""
    jobs = []
    for n in sorted(set(n_list)):
        for r in sorted(set(r_list)):
            spec = ExperimentSpec(n=n, m=n, r=r, seeds=list(seeds), solver=solver,
                                  target=target, max_iters=max_iters,
                                  epsilon_scale=epsilon_scale)
            jobs.extend((spec, s) for s in sorted(set(seeds)))
    rows = [None] * len(jobs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, row in enumerate(pool.map(_cell, jobs)):
                rows[i] = row
                if progress:
                    progress(row)
    else:
        for i, job in enumerate(jobs):
            rows[i] = _cell(job)
            if progress:
                progress(rows[i])
    return rows


def oscillation_demo(steps=50) -> list[tuple[int, float, float]]:
    """Both Lee-Seung variants on V = I_2 from all-ones factors."""
    v = np.eye(2)
    p0 = FactorPair(np.ones((2, 2)), np.ones((2, 2)))
    conc = baselines.run(v, p0, baselines.MuConfig(variant="concurrent", max_iters=steps))
    alt = baselines.run(v, p0, baselines.MuConfig(variant="alternating", max_iters=steps))
    return [(t + 1, float(conc.objective[t]), float(alt.objective[t])) for t in range(steps)]


def trace_summary(tr: RunTrace, points=20) -> dict:
    rec = tr.records
    k = len(rec)
    idx = sorted(set(np.linspace(0, k - 1, min(points, k)).astype(int).tolist())) if k else []
    return {
        "checkpoints": [{"iteration": i + 1, "objective": float(rec[i, OBJECTIVE])} for i in idx],
        "max_mass_deviation": float(np.abs(rec[:, MASS] - 1.0).max()) if k else 0.0,
        "min_entry": float(rec[:, MIN_ENTRY].min()) if k else None,
        "safeguard_halvings": tr.halvings,
        "final_epsilon": float(rec[-1, 2]) if k else tr.initial_epsilon,
    }


def factorize_report(v, r, tr: RunTrace, cfg: MwuConfig, input_path=None) -> dict:
    p = tr.factors
    nmf = check_sosp_nmf(v, p)
    snmf = check_sosp_snmf(v, p, tr.c_constant)
    return {
        "schema": SCHEMA,
        "input": input_path,
        "shape": list(v.shape),
        "rank": r,
        "seed": cfg.seed,
        "c_constant": tr.c_constant,
        "epsilon": tr.initial_epsilon,
        "backend": tr.backend,
        "initial_objective": tr.initial_objective,
        "final_objective": tr.final_objective,
        "relative_error": tr.relative_error,
        "iterations": tr.iterations,
        "termination": tr.termination,
        "trace": trace_summary(tr),
        "stationarity": {"nmf": nmf.to_dict(), "snmf": snmf.to_dict()},
        "w": p.w.tolist(),
        "h": p.h.tolist(),
    }
