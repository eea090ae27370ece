"""Uniform empirical measures and exact discrete Wasserstein distances.

For two uniform clouds of equal size the optimal coupling can be taken to be
a permutation, so ``w_p`` reduces to a linear assignment problem on the cost
matrix ``c_ij = d(a_i, b_j)^p``.  Clouds of sizes ``N`` and ``r N`` are
compared by replicating every atom of the smaller one ``r`` times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .spectral import PathSample

#: largest integer replication factor accepted for unequal cloud sizes
MAX_REPLICATION = 4096


@dataclass(frozen=True)
class EmpiricalMeasure:
    """``(1/N) sum_i delta_{atoms[i]}``; ``atoms`` has shape ``(N, K)``."""

    atoms: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        if a.ndim != 2 or a.shape[0] < 1:
            raise ValueError("an empirical measure needs at least one atom of shape (K,)")
        object.__setattr__(self, "atoms", a)

    @property
    def N(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def mean(self) -> np.ndarray:
        return self.atoms.mean(axis=0)

    def moment(self, p: float) -> float:
        return moment(self, p)

    def to_json(self) -> dict:
        return {"dim": self.dim, "atoms": self.atoms.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "EmpiricalMeasure":
        atoms = np.asarray(doc["atoms"], dtype=float)
        if atoms.ndim != 2 or atoms.shape[1] != int(doc["dim"]):
            raise ValueError("atoms do not match declared dim")
        return cls(atoms)


def dirac(x) -> EmpiricalMeasure:
    return EmpiricalMeasure(np.asarray(x, dtype=float)[None, :])


@dataclass(frozen=True)
class MeasureFlow:
    """Empirical measures on the grid ``t_m = m T / M``; ``atoms`` is ``(M+1, N, K)``."""

    T: float
    atoms: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        if a.ndim != 3 or a.shape[0] < 2 or a.shape[1] < 1:
            raise ValueError("flow atoms must have shape (M+1, N, K) with M >= 1")
        object.__setattr__(self, "atoms", a)

    @classmethod
    def constant(cls, T: float, M: int, nu: EmpiricalMeasure) -> "MeasureFlow":
        return cls(T, np.broadcast_to(nu.atoms, (M + 1,) + nu.atoms.shape))

    @property
    def M(self) -> int:
        return self.atoms.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.atoms.shape[2]

    def at(self, m: int) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.atoms[m])

    def means(self) -> np.ndarray:
        return self.atoms.mean(axis=1)


@dataclass(frozen=True)
class PathCloud:
    """``N`` paths on a shared grid; ``paths`` is ``(N, M+1, K)``."""

    T: float
    paths: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.paths, dtype=float)
        if a.ndim != 3 or a.shape[0] < 1 or a.shape[1] < 2:
            raise ValueError("paths must have shape (N, M+1, K) with N >= 1, M >= 1")
        object.__setattr__(self, "paths", a)

    @property
    def N(self) -> int:
        return self.paths.shape[0]

    @property
    def M(self) -> int:
        return self.paths.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.paths.shape[2]

    def path(self, i: int) -> PathSample:
        return PathSample(self.T, self.paths[i])

    def marginal(self, m: int) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.paths[:, m, :])

    def flow(self) -> MeasureFlow:
        return MeasureFlow(self.T, np.swapaxes(self.paths, 0, 1))

    def to_json(self) -> dict:
        return {"T": float(self.T), "M": self.M, "dim": self.dim, "N": self.N,
                "paths": [self.path(i).to_json() for i in range(self.N)]}

    @classmethod
    def from_json(cls, doc: dict) -> "PathCloud":
        samples = [PathSample.from_json(d) for d in doc["paths"]]
        if not samples:
            raise ValueError("empty path cloud")
        T = samples[0].T
        if any(s.T != T or s.states.shape != samples[0].states.shape for s in samples):
            raise ValueError("paths in a cloud must share one grid")
        return cls(T, np.stack([s.states for s in samples]))


def moment(nu: EmpiricalMeasure, p: float) -> float:
    """``((1/N) sum ||y_i||^p)^(1/p)``."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    r = np.sqrt(np.sum(nu.atoms * nu.atoms, axis=1))
    return (math.fsum(cost_power(r, p)) / r.size) ** (1.0 / p)


def replication_factors(n: int, m: int) -> tuple[int, int]:
    """Integer factors ``(ra, rb)`` with ``n ra == m rb``, one of them 1."""
    big, small = max(n, m), min(n, m)
    if big % small:
        raise ValueError(f"cloud sizes {n} and {m}: neither divides the other")
    r = big // small
    if r > MAX_REPLICATION:
        raise ValueError(f"replication factor {r} exceeds cap {MAX_REPLICATION}")
    return (r, 1) if n < m else (1, r)


#: square problems up to this size are certified optimal in exact arithmetic
EXACT_CERTIFY_MAX = 16


def _exact_ints(cost: np.ndarray) -> list[list[int]]:
    # every finite double is m * 2^e; rescale by the smallest exponent
    ratios = [[float(v).as_integer_ratio() for v in row] for row in cost]
    den = max(d for row in ratios for _, d in row)
    return [[n * (den // d) for n, d in row] for row in ratios]


def _cancel_negative_cycles(cost: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Improve an assignment until no exchange cycle lowers its exact cost.

    Node ``i`` -> ``k`` means row ``i`` takes the column of row ``k``; its weight
    ``c[i, col(k)] - c[k, col(k)]`` is exact over the float costs.
    """
    c = _exact_ints(cost)
    n = len(c)
    cols = [int(j) for j in cols]
    while True:
        dist = [0] * n
        pred = [-1] * n
        last = -1
        for _ in range(n):
            last = -1
            for i in range(n):
                for k in range(n):
                    if i == k:
                        continue
                    w = c[i][cols[k]] - c[k][cols[k]]
                    if dist[i] + w < dist[k]:
                        dist[k] = dist[i] + w
                        pred[k] = i
                        last = k
            if last < 0:
                return np.asarray(cols)
        node = last
        for _ in range(n):
            node = pred[node]
        cycle = [node]
        cur = pred[node]
        while cur != node:
            cycle.append(cur)
            cur = pred[cur]
        # edge pred[k] -> k hands column cols[k] to row pred[k]
        new_cols = list(cols)
        for k in cycle:
            new_cols[pred[k]] = cols[k]
        cols = new_cols


def optimal_mean_cost(cost: np.ndarray) -> float:
    """Exact ``min_pi (1/N) sum_i cost[i, pi(i)]`` for a square matrix.

    The matched costs are summed with ``math.fsum`` so the value does not
    depend on row order or on which of several optimal matchings is found.
    """
    n = cost.shape[0]
    rows, cols = linear_sum_assignment(cost)
    if n <= EXACT_CERTIFY_MAX:
        cols = _cancel_negative_cycles(cost, cols)
    return math.fsum(cost[rows, cols]) / n


def assignment_cost(cost: np.ndarray, p: float) -> float:
    return optimal_mean_cost(cost) ** (1.0 / p)


def cost_power(d, p: float):
    """``d ** p`` through scalar libm ``pow`` (``d`` and ``d * d`` for p = 1, 2).

    numpy's vectorized ``power`` may differ from libm in the last bit depending
    on the SIMD path, which would make distances platform-dependent.
    """
    d = np.asarray(d, dtype=float)
    if p == 1:
        return d.copy()
    if p == 2:
        return d * d
    flat = [math.pow(v, p) for v in d.ravel().tolist()]
    return np.array(flat, dtype=float).reshape(d.shape)


def _replicated_cost(d: np.ndarray, p: float) -> np.ndarray:
    n, m = d.shape
    ra, rb = replication_factors(n, m)
    c = cost_power(d, p)
    if ra > 1:
        c = np.repeat(c, ra, axis=0)
    if rb > 1:
        c = np.repeat(c, rb, axis=1)
    return c


def pairwise_state_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def pairwise_path_distance(a: np.ndarray, b: np.ndarray, chunk: int = 64) -> np.ndarray:
    """``d_T`` between every path of ``a`` ``(N, M+1, K)`` and of ``b``."""
    out = np.empty((a.shape[0], b.shape[0]))
    for s in range(0, a.shape[0], chunk):
        diff = a[s:s + chunk, None, :, :] - b[None, :, :, :]
        out[s:s + chunk] = np.sqrt(np.sum(diff * diff, axis=-1)).max(axis=-1)
    return out


def _check_p(p):
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")


def _sorted_cost(a: np.ndarray, b: np.ndarray, p: float) -> float:
    # monotone matching is optimal on the line for convex costs |x - y|^p
    ra, rb = replication_factors(a.size, b.size)
    xa = np.repeat(a, ra)
    xb = np.repeat(b, rb)
    ia = np.argsort(xa, kind="stable")
    match = np.empty_like(ia)
    match[ia] = np.argsort(xb, kind="stable")
    cost = cost_power(np.abs(xa - xb[match]), p)
    return (math.fsum(cost) / xa.size) ** (1.0 / p)


def wasserstein_p(a: EmpiricalMeasure, b: EmpiricalMeasure, p: float = 2.0) -> float:
    _check_p(p)
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.dim == 1 and max(a.N, b.N) > EXACT_CERTIFY_MAX:
        return _sorted_cost(a.atoms[:, 0], b.atoms[:, 0], p)
    return assignment_cost(_replicated_cost(pairwise_state_distance(a.atoms, b.atoms), p), p)


def wasserstein_path(a: PathCloud, b: PathCloud, p: float = 2.0) -> float:
    """``w_p`` on path space under the uniform metric ``d_T``."""
    _check_p(p)
    if a.T != b.T or a.M != b.M or a.dim != b.dim:
        raise ValueError("path clouds live on different grids")
    return assignment_cost(_replicated_cost(pairwise_path_distance(a.paths, b.paths), p), p)


def path_transport_cost(a: PathCloud, b: PathCloud, p: float = 2.0) -> float:
    """``w_p(a, b)^p`` on path space, without the final root."""
    _check_p(p)
    if a.T != b.T or a.M != b.M or a.dim != b.dim:
        raise ValueError("path clouds live on different grids")
    return optimal_mean_cost(_replicated_cost(pairwise_path_distance(a.paths, b.paths), p))


def coupling_bound(e, f, p: float = 2.0) -> tuple[float, float]:
    """Index coupling bound versus the optimal ``w_p`` of ``L(e)`` and ``L(f)``.

    Returns ``(bound, w)`` with ``bound = ((1/N) sum ||e_i - f_i||^p)^(1/p)``;
    the index coupling is admissible, so ``w <= bound``.
    """
    _check_p(p)
    e = np.asarray(e, dtype=float)
    f = np.asarray(f, dtype=float)
    if e.shape != f.shape:
        raise ValueError(f"length mismatch: {e.shape} vs {f.shape}")
    d = np.sqrt(np.sum((e - f) * (e - f), axis=-1))
    bound = (math.fsum(cost_power(d, p)) / d.shape[0]) ** (1.0 / p)
    return bound, wasserstein_p(EmpiricalMeasure(e), EmpiricalMeasure(f), p)


def marginal_distances(a: PathCloud, b: PathCloud, p: float = 2.0) -> np.ndarray:
    """``w_p`` between the time-``t_m`` marginals, for every grid index."""
    if a.M != b.M or a.dim != b.dim:
        raise ValueError("path clouds live on different grids")
    return np.array([wasserstein_p(a.marginal(m), b.marginal(m), p) for m in range(a.M + 1)])


def flow_distance(a: MeasureFlow, b: MeasureFlow, p: float = 2.0) -> float:
    """``max_m w_p(a(t_m), b(t_m))``."""
    if a.M != b.M or a.dim != b.dim:
        raise ValueError("flows live on different grids")
    return max(wasserstein_p(a.at(m), b.at(m), p) for m in range(a.M + 1))
