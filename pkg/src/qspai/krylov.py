"""Conjugate gradient and preconditioned conjugate gradient with residual traces."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sparse import SymSparseMatrix, spmv


class BreakdownError(ArithmeticError):
    """CG hit a non-positive curvature or preconditioned inner product."""


@dataclass(frozen=True)
class CgConfig:
    tol: float = 1e-10
    max_iter: int = 50_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class ConvergenceTrace:
    residual_norms: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    final_relative_residual: float = float("nan")
    true_relative_residual: float = float("nan")

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "residual"])
            for t, r in enumerate(self.residual_norms):
                w.writerow([t, repr(float(r))])
        return path


def pcg(K: SymSparseMatrix, M: SymSparseMatrix | None, b, cfg: CgConfig = CgConfig()):
    """Preconditioned CG from ``x0 = 0`` with ``z = M r``; ``M=None`` is plain CG.

    Stops when ``||r|| / ||b|| <= cfg.tol`` using the recurrence residual.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (K.n,):
        raise ValueError(f"rhs length {b.shape} does not match matrix dimension {K.n}")
    if M is not None and M.n != K.n:
        raise ValueError("preconditioner dimension does not match K")

    x = np.zeros(K.n)
    trace = ConvergenceTrace()
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        trace.residual_norms.append(0.0)
        trace.converged = True
        trace.final_relative_residual = 0.0
        trace.true_relative_residual = 0.0
        return x, trace

    r = b.copy()
    r_norm = b_norm
    trace.residual_norms.append(r_norm)
    z = r.copy() if M is None else spmv(M, r)
    rz = float(r @ z)
    if rz <= 0:
        raise BreakdownError("r^T M r <= 0: preconditioner is not positive definite")
    p = z.copy()
    k = 0
    while r_norm / b_norm > cfg.tol and k < cfg.max_iter:
        Kp = spmv(K, p)
        curv = float(p @ Kp)
        if curv <= 0:
            raise BreakdownError("p^T K p <= 0: matrix is not positive definite")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Kp
        k += 1
        r_norm = float(np.linalg.norm(r))
        trace.residual_norms.append(r_norm)
        if r_norm / b_norm <= cfg.tol:
            break
        z = r.copy() if M is None else spmv(M, r)
        rz_new = float(r @ z)
        if rz_new <= 0:
            raise BreakdownError("r^T M r <= 0: preconditioner is not positive definite")
        p = z + (rz_new / rz) * p
        rz = rz_new

    trace.iterations = k
    trace.final_relative_residual = r_norm / b_norm
    trace.converged = trace.final_relative_residual <= cfg.tol
    trace.true_relative_residual = float(np.linalg.norm(b - spmv(K, x))) / b_norm
    return x, trace


def cg(K: SymSparseMatrix, b, cfg: CgConfig = CgConfig()):
    return pcg(K, None, b, cfg)
