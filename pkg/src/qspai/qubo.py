"""QUBO problems for one box step, plus exact and simulated-annealing minimizers.

Energy convention::

    E(q) = sum_a diag[a] q_a + sum_{a<b} off[a, b] q_a q_b + offset

Bits are ordered ``q1[0..s-1]`` followed by ``q2[0..s-1]`` and the box
encodes ``m = c + L * (-2 q1 + q2)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

EXACT_MAX_VARS = 24
_CHUNK_BITS = 16


@dataclass(frozen=True)
class QuboProblem:
    diag: np.ndarray
    off: np.ndarray  # strictly upper triangular, n_vars x n_vars
    offset: float

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=np.float64)
        off = np.asarray(self.off, dtype=np.float64)
        n = diag.shape[0]
        if diag.ndim != 1 or off.shape != (n, n):
            raise ValueError("diag must be (n,) and off (n, n)")
        if np.any(np.tril(off) != 0):
            raise ValueError("off must be strictly upper triangular")
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off)) and np.isfinite(self.offset)):
            raise ValueError("QUBO coefficients must be finite")
        diag.flags.writeable = False
        off.flags.writeable = False
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "off", off)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n_vars(self) -> int:
        return self.diag.shape[0]

    def to_json(self) -> str:
        n = self.n_vars
        return json.dumps(
            {
                "n_vars": n,
                "diag": self.diag.tolist(),
                "off": [[a, b, float(self.off[a, b])] for a in range(n) for b in range(a + 1, n)
                        if self.off[a, b] != 0],
                "offset": self.offset,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "QuboProblem":
        d = json.loads(text)
        n = d["n_vars"]
        off = np.zeros((n, n))
        for a, b, v in d["off"]:
            off[a, b] = v
        return cls(np.array(d["diag"], dtype=float), off, d["offset"])


@dataclass(frozen=True)
class QuboSolution:
    bits: np.ndarray
    energy: float


@dataclass(frozen=True)
class SaConfig:
    num_samples: int = 100
    sweeps: int = 1000
    beta_hot: float | None = None  # None: derived from coefficients
    beta_cold: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 1 or self.sweeps < 1:
            raise ValueError("num_samples and sweeps must be >= 1")


def box_potential(A: np.ndarray, i: int, m: np.ndarray) -> float:
    """``0.5 m^T A m - m[i]``."""
    return float(0.5 * (m @ (A @ m)) - m[i])


def box_decode(c: np.ndarray, L: float, bits: np.ndarray) -> np.ndarray:
    s = len(c)
    bits = np.asarray(bits)
    return c + L * (-2.0 * bits[:s] + bits[s:])


def build_box_qubo(A, i: int, c, L: float) -> QuboProblem:
    A = np.asarray(A, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    s = A.shape[0]
    if A.shape != (s, s) or not np.array_equal(A, A.T):
        raise ValueError("A must be a symmetric square matrix")
    if c.shape != (s,):
        raise ValueError("center length must match A")
    if not 0 <= i < s:
        raise IndexError("e-entry index out of range")
    if not L > 0:
        raise ValueError("box length must be positive")

    # m = c + L D q with D = [-2I | I]; expand around c
    D = np.hstack([-2.0 * np.eye(s), np.eye(s)])
    g = A @ c
    g[i] -= 1.0
    linear = L * (D.T @ g)
    H = (L * L) * (D.T @ A @ D)
    diag = linear + 0.5 * np.diag(H)
    off = np.triu(H, k=1)
    return QuboProblem(diag, off, box_potential(A, i, c))


def energy(p: QuboProblem, bits) -> float:
    q = np.asarray(bits, dtype=np.float64)
    if q.shape != (p.n_vars,):
        raise ValueError(f"expected {p.n_vars} bits, got shape {q.shape}")
    delta = float(q @ p.diag) + float(q @ (p.off @ q))
    return p.offset + delta


@lru_cache(maxsize=8)
def _state_block(n: int) -> np.ndarray:
    k = np.arange(1 << n, dtype=np.int64)
    block = ((k[:, None] >> np.arange(n)) & 1).astype(np.float64)
    block.flags.writeable = False
    return block


def _bits_of(k: int, n: int) -> np.ndarray:
    return ((k >> np.arange(n)) & 1).astype(np.int8)


def solve_exact(p: QuboProblem) -> QuboSolution:
    """Exhaustive ground state; ties go to the smallest little-endian integer."""
    n = p.n_vars
    if n > EXACT_MAX_VARS:
        raise ValueError(f"exact solver limited to {EXACT_MAX_VARS} variables, got {n}")
    if n == 0:
        return QuboSolution(np.zeros(0, dtype=np.int8), p.offset)

    lo_bits = min(n, _CHUNK_BITS)
    lo = _state_block(lo_bits)
    diag_lo, off_lo = p.diag[:lo_bits], p.off[:lo_bits, :lo_bits]
    lo_energy = lo @ diag_lo + np.einsum("ka,ka->k", lo @ off_lo, lo)
    cross = p.off[:lo_bits, lo_bits:]

    tol = 1e-12 * (np.abs(p.diag).sum() + np.abs(p.off).sum())
    candidates: list[tuple[float, int]] = []
    for hi_k in range(1 << (n - lo_bits)):
        hi = _bits_of(hi_k, n - lo_bits).astype(np.float64)
        hi_e = hi @ p.diag[lo_bits:] + hi @ (p.off[lo_bits:, lo_bits:] @ hi)
        e = lo_energy + hi_e + lo @ (cross @ hi)
        near = np.nonzero(e <= e.min() + tol)[0]
        candidates.extend((float(e[w]), int(w) + (hi_k << lo_bits)) for w in near)
    floor = min(e for e, _ in candidates)
    candidates = [k for e, k in candidates if e <= floor + tol]

    # vectorized sums may round differently from energy(); settle near-ties with it
    best_bits, best_energy = None, np.inf
    for k in sorted(candidates):
        bits = _bits_of(k, n)
        e = energy(p, bits)
        if e < best_energy:
            best_bits, best_energy = bits, e
    return QuboSolution(best_bits, best_energy)


@numba.njit(cache=True)
def _anneal(diag, J, betas, starts, rand):
    n_chains, n = starts.shape
    best_states = starts.copy()
    best_e = np.empty(n_chains)
    for c in range(n_chains):
        x = starts[c].copy()
        field = diag.copy()  # local field: diag[a] + sum_b J[a,b] x_b
        for a in range(n):
            if x[a]:
                for b in range(n):
                    field[b] += J[b, a]
        e = 0.0
        for a in range(n):
            if x[a]:
                e += diag[a]
                for b in range(a + 1, n):
                    if x[b]:
                        e += J[a, b]
        cur_best = e
        best_states[c] = x
        r = 0
        for t in range(betas.shape[0]):
            beta = betas[t]
            for a in range(n):
                delta = field[a] if x[a] == 0 else -field[a]
                if delta <= 0.0 or rand[c, r] < np.exp(-beta * delta):
                    x[a] = 1 - x[a]
                    sign = 1.0 if x[a] else -1.0
                    for b in range(n):
                        if b != a:
                            field[b] += sign * J[b, a]
                    e += delta
                    if e < cur_best:
                        cur_best = e
                        best_states[c] = x
                r += 1
        best_e[c] = cur_best
    return best_states, best_e


def _beta_range(p: QuboProblem, cfg: SaConfig) -> tuple[float, float]:
    mags = np.concatenate([np.abs(p.diag), np.abs(p.off[np.triu_indices(p.n_vars, 1)])])
    nonzero = mags[mags > 0]
    if nonzero.size == 0:
        return 1.0, 1.0
    hot_t = float(nonzero.max())
    cold_t = 1e-3 * float(nonzero.min())
    beta_hot = cfg.beta_hot if cfg.beta_hot is not None else 1.0 / hot_t
    beta_cold = cfg.beta_cold if cfg.beta_cold is not None else 1.0 / cold_t
    if not 0 < beta_hot < beta_cold:
        raise ValueError("annealing schedule must cool: need 0 < beta_hot < beta_cold")
    return beta_hot, beta_cold


def solve_sa(p: QuboProblem, cfg: SaConfig = SaConfig()) -> QuboSolution:
    """Best state over ``cfg.num_samples`` single-flip Metropolis chains.

    Deterministic for a fixed problem and config.
    """
    n = p.n_vars
    if n < 1:
        raise ValueError("problem has no variables")
    beta_hot, beta_cold = _beta_range(p, cfg)
    betas = np.geomspace(beta_hot, beta_cold, cfg.sweeps)
    rng = np.random.default_rng(cfg.seed)
    starts = rng.integers(0, 2, size=(cfg.num_samples, n), dtype=np.int8)
    rand = rng.random((cfg.num_samples, cfg.sweeps * n))
    J = p.off + p.off.T
    states, _ = _anneal(p.diag.copy(), J, betas, starts, rand)

    best_bits, best_energy, best_key = None, np.inf, None
    for row in states:
        e = energy(p, row)
        key = int((row.astype(np.int64) << np.arange(n)).sum())
        if e < best_energy or (e == best_energy and key < best_key):
            best_bits, best_energy, best_key = row.copy(), e, key
    return QuboSolution(best_bits, best_energy)
