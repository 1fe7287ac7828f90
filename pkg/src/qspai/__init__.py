"""Sparse approximate inverse preconditioners from box-QUBO solves."""
from .krylov import BreakdownError, CgConfig, ConvergenceTrace, cg, pcg
from .poisson import (
    GridSpec,
    PoissonProblem,
    assemble,
    assemble_rhs,
    build_problem,
    material_uniform,
    material_vertical_split,
    node_index,
)
from .qubo import QuboProblem, QuboSolution, SaConfig, build_box_qubo, energy, solve_exact, solve_sa
from .spai import (
    BoxConfig,
    BoxState,
    SpaiPreconditioner,
    column_signature,
    compute_spai,
    direct_column_oracle,
    sparse_box_solve,
)
from .sparse import SymSparseMatrix, column_support, principal_submatrix, spmv, symmetrize

__version__ = "0.1.0"
