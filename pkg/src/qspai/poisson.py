"""Five-point finite-difference Poisson systems on rectangular grids.

Nodes are the ``gx * gy`` interior points of a ``(gx+2) x (gy+2)`` grid with
zero Dirichlet values on the outer ring. Conductivity lives on the
``(gx+1) x (gy+1)`` cells between nodes; cell ``(p, q)`` spans interior
nodes ``m in {p-1, p}`` and ``n in {q-1, q}``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sparse import SymSparseMatrix


@dataclass(frozen=True)
class GridSpec:
    gx: int
    gy: int
    h: float = 1.0

    def __post_init__(self):
        if self.gx < 1 or self.gy < 1:
            raise ValueError("grid must have at least one interior node in each direction")
        if not self.h > 0:
            raise ValueError("grid spacing h must be positive")

    @property
    def n_nodes(self) -> int:
        return self.gx * self.gy

    @property
    def element_shape(self) -> tuple[int, int]:
        return (self.gx + 1, self.gy + 1)


@dataclass(frozen=True)
class PoissonProblem:
    K: SymSparseMatrix
    b: np.ndarray
    grid: GridSpec


def node_index(m: int, n: int, grid: GridSpec) -> int:
    """Row-major, x fastest."""
    if not (0 <= m < grid.gx and 0 <= n < grid.gy):
        raise IndexError(f"node ({m}, {n}) outside the {grid.gx}x{grid.gy} interior grid")
    return n * grid.gx + m


def material_uniform(grid: GridSpec, k: float) -> np.ndarray:
    if not k > 0:
        raise ValueError("conductivity must be positive")
    return np.full(grid.element_shape, float(k))


def material_vertical_split(grid: GridSpec, k1: float, k2: float) -> np.ndarray:
    """``k1`` on the left half of the cell columns, ``k2`` on the right.

    With an odd number of cell columns the middle one goes left.
    """
    if not (k1 > 0 and k2 > 0):
        raise ValueError("conductivities must be positive")
    field = np.full(grid.element_shape, float(k2))
    field[: math.ceil((grid.gx + 1) / 2), :] = float(k1)
    return field


def assemble(grid: GridSpec, mat) -> SymSparseMatrix:
    mat = np.asarray(mat, dtype=np.float64)
    if mat.shape != grid.element_shape:
        raise ValueError(f"material field shape {mat.shape} != {grid.element_shape}")
    if not np.all(mat > 0):
        raise ValueError("conductivities must be positive")
    gx, gy = grid.gx, grid.gy
    m, n = np.meshgrid(np.arange(gx), np.arange(gy), indexing="xy")
    m, n = m.ravel(), n.ravel()
    idx = n * gx + m

    k_node = (mat[m, n] + mat[m + 1, n] + mat[m, n + 1] + mat[m + 1, n + 1]) / 4
    rows = [idx]
    cols = [idx]
    vals = [4 * k_node]

    # (neighbour predicate, column offset, the two cells sharing the edge)
    edges = (
        (m > 0, -1, (m, n), (m, n + 1)),
        (m < gx - 1, 1, (m + 1, n), (m + 1, n + 1)),
        (n > 0, -gx, (m, n), (m + 1, n)),
        (n < gy - 1, gx, (m, n + 1), (m + 1, n + 1)),
    )
    for mask, offset, (pa, qa), (pb, qb) in edges:
        k_edge = (mat[pa, qa] + mat[pb, qb]) / 2
        rows.append(idx[mask])
        cols.append(idx[mask] + offset)
        vals.append(-k_edge[mask])

    return SymSparseMatrix.from_coo(
        grid.n_nodes, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )


def assemble_rhs(grid: GridSpec, f=1.0) -> np.ndarray:
    """Load vector ``f(m, n) * h**2``; ``f`` is a constant or a callable of (m, n)."""
    if callable(f):
        m, n = np.meshgrid(np.arange(grid.gx), np.arange(grid.gy), indexing="xy")
        values = np.array([f(int(a), int(b)) for a, b in zip(m.ravel(), n.ravel())], dtype=float)
    else:
        values = np.full(grid.n_nodes, float(f))
    if not np.all(np.isfinite(values)):
        raise ValueError("source term must be finite at every node")
    return values * grid.h**2


def build_problem(grid: GridSpec, mat, f=1.0) -> PoissonProblem:
    return PoissonProblem(K=assemble(grid, mat), b=assemble_rhs(grid, f), grid=grid)


def write_field_csv(grid: GridSpec, u, path) -> Path:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_nodes,):
        raise ValueError("field length does not match grid")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "n", "u"])
        for n in range(grid.gy):
            for m in range(grid.gx):
                w.writerow([m, n, repr(float(u[n * grid.gx + m]))])
    return path
