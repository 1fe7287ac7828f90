"""Experiment runners: assemble, build the SPAI, compare CG with Q-PCG, write artifacts."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from pathlib import Path

from .krylov import BreakdownError, CgConfig, ConvergenceTrace, cg, pcg
from .poisson import (
    GridSpec,
    build_problem,
    material_uniform,
    material_vertical_split,
    write_field_csv,
)
from .qubo import SaConfig, solve_exact, solve_sa
from .spai import BoxConfig, compute_spai
from .sparse import write_matrix_market

log = logging.getLogger(__name__)

DEFAULT_EPS_SWEEP = (1e-8, 1e-6, 1e-4, 1e-2, 1e-1)
DEFAULT_LENGTH_SWEEP = (1e4, 1e2, 1e1, 1.0, 1e-1, 1e-2)


@dataclass(frozen=True)
class ExperimentConfig:
    gx: int = 401
    gy: int = 301
    h: float = 1.0
    k: float = 1.0
    split: bool = False
    k1: float = 1.0
    k2: float = 1.0
    source_f: float = 1.0
    eps_box: float = 1e-6
    box_length: float = 1.0
    max_box_iters: int = 100
    cg_tol: float = 1e-10
    max_cg_iters: int = 50_000
    backend: str = "exact"
    seed: int = 0
    samples: int = 100
    sweeps: int = 1000
    use_cache: bool = True
    out: str | None = None
    export_k: bool = False
    export_m: bool = False

    def __post_init__(self):
        if self.backend not in ("exact", "sa"):
            raise ValueError(f"unknown backend {self.backend!r}")

    def grid(self) -> GridSpec:
        return GridSpec(self.gx, self.gy, self.h)

    def material(self):
        if self.split:
            return material_vertical_split(self.grid(), self.k1, self.k2)
        return material_uniform(self.grid(), self.k)

    def box_config(self) -> BoxConfig:
        return BoxConfig(eps_box=self.eps_box, L0=self.box_length, iter_max=self.max_box_iters)

    def cg_config(self) -> CgConfig:
        return CgConfig(tol=self.cg_tol, max_iter=self.max_cg_iters)

    def qubo_backend(self):
        if self.backend == "exact":
            return solve_exact
        return partial(
            solve_sa, cfg=SaConfig(num_samples=self.samples, sweeps=self.sweeps, seed=self.seed)
        )


@dataclass
class ExperimentReport:
    config: dict
    cg_iterations: int
    cg_converged: bool
    pcg_iterations: int | None
    pcg_converged: bool
    spai: dict
    speedup: float | None
    pcg_error: str | None = None
    artifacts: dict = field(default_factory=dict)
    cg_trace: ConvergenceTrace | None = field(default=None, repr=False)
    pcg_trace: ConvergenceTrace | None = field(default=None, repr=False)
    spai_wall_time: float = field(default=0.0, repr=False)

    @property
    def converged(self) -> bool:
        return self.cg_converged and self.pcg_converged

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "cg_iterations": self.cg_iterations,
            "cg_converged": self.cg_converged,
            "pcg_iterations": self.pcg_iterations,
            "pcg_converged": self.pcg_converged,
            "pcg_error": self.pcg_error,
            "speedup": self.speedup,
            "spai": self.spai,
            "artifacts": self.artifacts,
        }


def _write_json(path: Path, payload) -> str:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path.name


def run_single(cfg: ExperimentConfig = ExperimentConfig(), *, baseline=None) -> ExperimentReport:
    """One CG vs Q-PCG comparison.

    ``baseline`` may carry a precomputed ``(x, trace)`` plain-CG result for the
    same problem so sweeps do not repeat it.
    """
    grid = cfg.grid()
    problem = build_problem(grid, cfg.material(), cfg.source_f)
    cg_cfg = cfg.cg_config()

    if baseline is None:
        baseline = cg(problem.K, problem.b, cg_cfg)
    _, cg_trace = baseline
    log.info("CG: %d iterations (converged=%s)", cg_trace.iterations, cg_trace.converged)

    pre = compute_spai(problem.K, cfg.box_config(), cfg.qubo_backend(), cfg.use_cache)
    x, pcg_trace, err = None, None, None
    try:
        x, pcg_trace = pcg(problem.K, pre.M, problem.b, cg_cfg)
    except BreakdownError as exc:
        err = str(exc)
        log.warning("Q-PCG broke down: %s", exc)
    pcg_ok = pcg_trace is not None and pcg_trace.converged
    pcg_iters = pcg_trace.iterations if pcg_trace is not None else None
    if pcg_trace is not None:
        log.info("Q-PCG: %d iterations (converged=%s)", pcg_iters, pcg_ok)

    speedup = None
    if cg_trace.converged and pcg_ok and pcg_iters > 0:
        speedup = cg_trace.iterations / pcg_iters

    report = ExperimentReport(
        config=asdict(cfg),
        cg_iterations=cg_trace.iterations,
        cg_converged=cg_trace.converged,
        pcg_iterations=pcg_iters,
        pcg_converged=pcg_ok,
        spai=pre.stats_dict(),
        speedup=speedup,
        pcg_error=err,
        cg_trace=cg_trace,
        pcg_trace=pcg_trace,
        spai_wall_time=pre.wall_time,
    )

    if cfg.out is not None:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        arts = report.artifacts
        arts["cg_trace"] = cg_trace.write_csv(out / "cg_trace.csv").name
        if pcg_trace is not None:
            arts["pcg_trace"] = pcg_trace.write_csv(out / "pcg_trace.csv").name
            arts["field"] = write_field_csv(grid, x, out / "field.csv").name
        arts["spai_stats"] = _write_json(out / "spai_stats.json", pre.stats_dict())
        if cfg.export_k:
            arts["K"] = write_matrix_market(problem.K, out / "K.mtx").name
        if cfg.export_m:
            arts["M"] = write_matrix_market(pre.M, out / "M.mtx").name
        arts["report"] = "report.json"
        _write_json(out / "report.json", report.to_dict())
    return report


def _sweep(cfg: ExperimentConfig, field_name: str, values, tag: str) -> list[ExperimentReport]:
    problem = build_problem(cfg.grid(), cfg.material(), cfg.source_f)
    baseline = cg(problem.K, problem.b, cfg.cg_config())
    reports = []
    for v in values:
        sub = None if cfg.out is None else str(Path(cfg.out) / f"{tag}_{v:g}")
        run_cfg = replace(cfg, **{field_name: float(v), "out": sub})
        reports.append(run_single(run_cfg, baseline=baseline))
    if cfg.out is not None:
        summary = [
            {
                field_name: r.config[field_name],
                "pcg_iterations": r.pcg_iterations,
                "pcg_converged": r.pcg_converged,
                "per_family_iters": r.spai["per_family_iters"],
                "total_qubo_solves": r.spai["total_qubo_solves"],
                "hit_cap_families": r.spai["hit_cap_families"],
            }
            for r in reports
        ]
        _write_json(
            Path(cfg.out) / f"sweep_{tag}.json",
            {"cg_iterations": baseline[1].iterations, "runs": summary},
        )
    return reports


def run_sweep_eps(cfg: ExperimentConfig = ExperimentConfig(), eps_list=DEFAULT_EPS_SWEEP):
    return _sweep(cfg, "eps_box", eps_list, "eps")


def run_sweep_length(cfg: ExperimentConfig = ExperimentConfig(), lengths=DEFAULT_LENGTH_SWEEP):
    return _sweep(cfg, "box_length", lengths, "L")


def run_two_material(cfg: ExperimentConfig = ExperimentConfig(), k1: float = 1.0, k2: float = 10.0):
    return run_single(replace(cfg, split=True, k1=k1, k2=k2))
