"""Sparse approximate inverse built column by column from box-QUBO solves."""
from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .qubo import QuboProblem, QuboSolution, box_decode, box_potential, build_box_qubo, solve_exact
from .sparse import SymSparseMatrix, column_support, principal_submatrix, symmetrize

log = logging.getLogger(__name__)

Backend = Callable[[QuboProblem], QuboSolution]


@dataclass(frozen=True)
class BoxConfig:
    eps_box: float = 1e-6
    L0: float = 1.0
    iter_max: int = 100

    def __post_init__(self):
        if not (self.eps_box > 0 and self.L0 > 0):
            raise ValueError("eps_box and L0 must be positive")
        if self.iter_max < 1:
            raise ValueError("iter_max must be >= 1")


@dataclass
class BoxState:
    c: np.ndarray
    L: float
    pi_min: float = 0.0
    iters: int = 0
    contractions: int = 0
    hit_cap: bool = False
    history: list = field(default_factory=list)  # (pi_star, pi_min_before, translated)


def sparse_box_solve(A, i: int, cfg: BoxConfig = BoxConfig(), backend: Backend = solve_exact):
    """Minimize ``0.5 m^T A m - m[i]`` by repeated box QUBOs.

    Each step either moves the center to a strictly better QUBO minimizer
    (translation) or halves the box (contraction). Stops once the box is
    shorter than ``cfg.eps_box`` or after ``cfg.iter_max`` steps. ``A`` is
    assumed SPD; nothing here checks it.
    """
    A = np.asarray(A, dtype=np.float64)
    s = A.shape[0]
    state = BoxState(c=np.zeros(s), L=float(cfg.L0))
    while True:
        problem = build_box_qubo(A, i, state.c, state.L)
        sol = backend(problem)
        translated = sol.energy < state.pi_min
        state.history.append((sol.energy, state.pi_min, translated))
        if translated:
            state.c = box_decode(state.c, state.L, sol.bits)
            # equals sol.energy mathematically, and bitwise equals the next QUBO's offset
            state.pi_min = box_potential(A, i, state.c)
        else:
            state.L /= 2
            state.contractions += 1
        state.iters += 1
        if state.L < cfg.eps_box:
            break
        if state.iters >= cfg.iter_max:
            state.hit_cap = True
            break
    return state.c.copy(), state


def direct_column_oracle(A, i: int) -> np.ndarray:
    """Solve ``A x = e_i`` by Gaussian elimination with partial pivoting."""
    a = np.array(A, dtype=np.float64)
    s = a.shape[0]
    if a.shape != (s, s):
        raise ValueError("A must be square")
    b = np.zeros(s)
    b[i] = 1.0
    scale = np.abs(a).max() if a.size else 0.0
    for k in range(s):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) <= 1e-14 * scale:
            raise np.linalg.LinAlgError("matrix is singular to working precision")
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        for r in range(k + 1, s):
            f = a[r, k] / a[k, k]
            a[r, k:] -= f * a[k, k:]
            b[r] -= f * b[k]
    x = np.zeros(s)
    for k in range(s - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def _signature(A: np.ndarray, i: int) -> bytes:
    s = A.shape[0]
    head = np.array([s, i], dtype="<i8").tobytes()
    return head + np.ascontiguousarray(A, dtype="<f8").tobytes()


def column_signature(K: SymSparseMatrix, j: int) -> bytes:
    """Byte key of the reduced system for column ``j``.

    Two columns share a key exactly when their reduced matrices and the
    position of ``j`` in the support agree bit for bit.
    """
    support = column_support(K, j)
    A = principal_submatrix(K, support)
    return _signature(A, int(np.searchsorted(support, j)))


@dataclass
class FamilyStats:
    signature: str  # short hex digest
    support_size: int
    position: int
    first_column: int
    members: int
    iterations: int
    hit_cap: bool


@dataclass
class SpaiPreconditioner:
    M: SymSparseMatrix
    families: list[FamilyStats]
    total_qubo_solves: int
    wall_time: float

    @property
    def unique_families(self) -> int:
        return len(self.families)

    @property
    def per_family_iters(self) -> list[int]:
        return [f.iterations for f in self.families]

    @property
    def hit_cap_families(self) -> int:
        return sum(f.hit_cap for f in self.families)

    def stats_dict(self) -> dict:
        # wall time is left out so emitted files stay reproducible
        return {
            "unique_families": self.unique_families,
            "per_family_iters": self.per_family_iters,
            "total_qubo_solves": self.total_qubo_solves,
            "hit_cap_families": self.hit_cap_families,
            "families": [
                {
                    "signature": f.signature,
                    "support_size": f.support_size,
                    "position": f.position,
                    "first_column": f.first_column,
                    "members": f.members,
                    "iterations": f.iterations,
                    "hit_cap": f.hit_cap,
                }
                for f in self.families
            ],
        }

    def stats_json(self) -> str:
        return json.dumps(self.stats_dict(), indent=2)


def _reduced_systems(K: SymSparseMatrix, chunk: int = 16384):
    """Support sizes, positions of ``j`` and zero-padded ``A_j`` for every column.

    Padded entries are exactly zero; ``A_j`` occupies the leading
    ``size x size`` corner of each ``(w, w)`` block.
    """
    n = K.n
    sizes = np.diff(K.indptr)
    w = int(sizes.max())
    slot = np.arange(w)
    valid = slot[None, :] < sizes[:, None]
    flat = K.indptr[:-1, None] + np.minimum(slot[None, :], sizes[:, None] - 1)
    cols = np.where(valid, K.indices[flat], -1)
    vals = np.where(valid, K.data[flat], 0.0)
    positions = np.argmax(cols == np.arange(n)[:, None], axis=1)

    blocks = np.zeros((n, w, w))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        S = cols[lo:hi]
        S_safe = np.where(S >= 0, S, 0)
        R = np.where(valid[lo:hi, :, None], cols[S_safe], -2)
        V = vals[S_safe]
        match = R[:, :, :, None] == S[:, None, None, :]
        blocks[lo:hi] = np.where(match, V[:, :, :, None], 0.0).sum(axis=2)
    return sizes, positions, blocks


def compute_spai(
    K: SymSparseMatrix,
    cfg: BoxConfig = BoxConfig(),
    backend: Backend = solve_exact,
    use_cache: bool = True,
) -> SpaiPreconditioner:
    """SPAI with the sparsity pattern of ``K``, symmetrized at the end.

    Columns whose reduced systems agree bit for bit form a family. With
    ``use_cache`` one box solve serves the whole family; without it every
    column is solved on its own (the results are identical).
    """
    t0 = time.perf_counter()
    n = K.n
    sizes, positions, blocks = _reduced_systems(K)
    w = blocks.shape[1]
    keys = np.concatenate(
        [sizes[:, None].astype(np.float64), positions[:, None].astype(np.float64),
         blocks.reshape(n, -1)],
        axis=1,
    ).view(np.uint64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    # renumber families by first column so stats follow ascending column order
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    family_of = rank[inverse]
    first = first[order]

    def solve(j):
        s = int(sizes[j])
        return sparse_box_solve(blocks[j, :s, :s], int(positions[j]), cfg, backend)

    families: list[FamilyStats] = []
    solutions = np.zeros((len(first), w))
    members = np.bincount(family_of, minlength=len(first))
    solves = 0
    for f, j in enumerate(first):
        s = int(sizes[j])
        m_hat, state = solve(j)
        solves += state.iters
        solutions[f, :s] = m_hat
        families.append(
            FamilyStats(
                signature=hashlib.sha1(_signature(blocks[j, :s, :s], int(positions[j]))).hexdigest()[:12],
                support_size=s,
                position=int(positions[j]),
                first_column=int(j),
                members=int(members[f]),
                iterations=state.iters,
                hit_cap=state.hit_cap,
            )
        )

    per_column = solutions[family_of]
    if not use_cache:
        first_set = set(first.tolist())
        for j in range(n):
            if j in first_set:
                continue
            m_hat, state = solve(j)
            solves += state.iters
            per_column[j, : sizes[j]] = m_hat

    # column j of M lands in row j's slots; symmetrize() transposes the halves back together
    slot = np.arange(w)
    valid = slot[None, :] < sizes[:, None]
    data = np.empty(K.nnz)
    data[(K.indptr[:-1, None] + slot[None, :])[valid]] = per_column[valid]
    M = symmetrize(n, K.indptr, K.indices, data)
    elapsed = time.perf_counter() - t0
    log.info("SPAI: %d families, %d QUBO solves, %.2fs", len(families), solves, elapsed)
    return SpaiPreconditioner(M=M, families=families, total_qubo_solves=solves, wall_time=elapsed)
