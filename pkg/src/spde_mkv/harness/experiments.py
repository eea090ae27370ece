"""Propagation-of-chaos experiments at desk scale.

Stream naming keeps every random object independent and reproducible: the
reference law uses experiment ids ``reference`` / ``reference/init``, and
repetition ``r`` at system size ``N`` uses ``<name>/N=<N>/r=<r>`` for its
Brownian increments and ``.../init`` for its initial states.
"""
from __future__ import annotations

import math
import time

import numpy as np

from ..errors import ConfigError, NonConvergenceError
from ..mild_solver import solve_paths
from ..mkv_solver import MKVResult, solve_mkv
from ..noise import StreamBundle
from ..particle_system import simulate_system
from ..transport import PathCloud, cost_power, path_transport_cost
from .config import ExperimentConfig, Functional
from .report import RunReport, count_inversions


def draw_initial(cfg: ExperimentConfig, n: int, experiment: str) -> np.ndarray:
    """``n`` i.i.d. initial states from the Gaussian spectral law (or the cloud file)."""
    if cfg.init_file:
        atoms = cfg.load_initial_file().atoms
        if atoms.shape[1] != cfg.K:
            raise ConfigError(f"initial cloud has dimension {atoms.shape[1]}, K={cfg.K}")
        if atoms.shape[0] != n:
            raise ConfigError(f"initial cloud has {atoms.shape[0]} atoms, {n} required")
        return atoms.copy()
    z = StreamBundle.range(cfg.seed, experiment, n).block(0, cfg.K)
    return np.asarray(cfg.init_mean) + np.asarray(cfg.init_std) * z


def reference_law(cfg: ExperimentConfig, strict: bool = True) -> MKVResult:
    """Picard solution with ``M_ref`` samples; raises on non-convergence if ``strict``."""
    x0 = draw_initial(cfg, cfg.M_ref, "reference/init")
    streams = StreamBundle.range(cfg.seed, "reference", cfg.M_ref)
    result = solve_mkv(cfg.model, cfg.coefficients, cfg.grid, x0, cfg.picard, streams)
    if strict and not result.converged:
        raise NonConvergenceError(
            f"Picard iteration stopped after {result.iterations} iterations with residual "
            f"{result.residual:.3e} > tol {cfg.tol:g}")
    return result


def run_system(cfg: ExperimentConfig, N: int, experiment: str):
    x0 = draw_initial(cfg, N, experiment + "/init")
    streams = StreamBundle.range(cfg.seed, experiment, N)
    return x0, streams, simulate_system(cfg.model, cfg.coefficients, cfg.grid, x0, streams)


def _summary(values):
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else math.nan
    return mean, se


def _provenance(cfg):
    return {"seed": cfg.seed, "config_hash": cfg.config_hash()}


def _reference_diag(ref: MKVResult):
    return {"reference_iterations": ref.iterations,
            "reference_residuals": [float(r) for r in ref.residuals],
            "reference_converged": ref.converged}


def chaos_experiment(cfg: ExperimentConfig, reference: MKVResult | None = None) -> RunReport:
    """Estimate ``E[w_T^{p_circ}(X^N, X^0)^{p_circ}]`` for every ``N`` in the ladder.

    The ``N``-particle path cloud is replicated to ``M_ref`` atoms and matched
    exactly against the Picard reference cloud.
    """
    ref = reference if reference is not None else reference_law(cfg)
    rows = []
    for N in cfg.N_list:
        start = time.perf_counter()
        values = []
        for r in range(cfg.repetitions):
            _, _, cloud = run_system(cfg, N, f"chaos/N={N}/r={r}")
            values.append(path_transport_cost(cloud, ref.cloud, cfg.p_circ))
        est, se = _summary(values)
        rows.append({"N": N, "estimate": est, "stderr": se, "repetitions": cfg.repetitions,
                     "runtime_ms": (time.perf_counter() - start) * 1e3})
    report = RunReport("chaos", rows, _reference_diag(ref), _provenance(cfg))
    report.diagnostics["inversions"] = count_inversions(report.estimates)
    return report


def coupled_chaos(cfg: ExperimentConfig, reference: MKVResult | None = None) -> RunReport:
    """Synchronous coupling of each particle with a frozen-flow proxy.

    Particle ``i`` and proxy ``Y^i`` share initial state and Brownian stream;
    the proxies see the reference marginals instead of the empirical measure.
    ``estimate`` is the repetition mean of ``D_N = (1/N) sum_i d_T(X^i, Y^i)^p``
    and ``bound_violations`` counts runs where ``w_T^p(X^N, Y^N)^p > D_N``.
    """
    ref = reference if reference is not None else reference_law(cfg)
    flow = ref.cloud.flow()
    rows = []
    for N in cfg.N_list:
        start = time.perf_counter()
        d_values, w_values = [], []
        violations = 0
        for r in range(cfg.repetitions):
            x0, streams, cloud = run_system(cfg, N, f"coupled/N={N}/r={r}")
            proxy = solve_paths(cfg.model, cfg.coefficients, cfg.grid, x0, flow, streams)
            diff = cloud.paths - proxy.paths
            d = np.max(np.sqrt(np.sum(diff * diff, axis=2)), axis=1)
            dn = math.fsum(cost_power(d, cfg.p)) / N
            w = path_transport_cost(cloud, proxy, cfg.p)
            violations += int(w > dn)
            d_values.append(dn)
            w_values.append(w)
        est, se = _summary(d_values)
        rows.append({"N": N, "estimate": est, "stderr": se, "repetitions": cfg.repetitions,
                     "runtime_ms": (time.perf_counter() - start) * 1e3,
                     "w_path_p": float(np.mean(w_values)), "bound_violations": violations})
    report = RunReport("coupled-chaos", rows, _reference_diag(ref), _provenance(cfg),
                       extra_columns=("w_path_p", "bound_violations"))
    report.diagnostics["inversions"] = count_inversions(report.estimates)
    return report


def pair_covariance(a, b) -> tuple[float, float]:
    """Sample covariance of paired draws and its standard error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    R = a.size
    if R < 2:
        raise ValueError("covariance needs at least 2 repetitions")
    prod = (a - a.mean()) * (b - b.mean())
    cov = float(prod.mean())
    se = float(np.std(prod, ddof=1) / math.sqrt(R))
    return cov, se


def chaoticity_test(cfg: ExperimentConfig,
                    functionals: tuple[Functional, Functional] | None = None) -> RunReport:
    """Covariance of ``phi_1(X^{N,1}_T)`` and ``phi_2(X^{N,2}_T)`` across runs.

    Asymptotic independence of two tagged particles makes this vanish as
    ``N`` grows.  ``estimate`` is the absolute covariance.
    """
    phi = tuple(functionals if functionals is not None else cfg.functionals[:2])
    if len(phi) < 2:
        raise ConfigError("chaoticity needs two functionals")
    if cfg.repetitions < 2:
        raise ConfigError("chaoticity needs at least 2 repetitions")
    rows = []
    for N in cfg.N_list:
        if N < 2:
            continue
        start = time.perf_counter()
        a, b = [], []
        for r in range(cfg.repetitions):
            _, _, cloud = run_system(cfg, N, f"chaoticity/N={N}/r={r}")
            a.append(float(phi[0](cloud.paths[0, -1])))
            b.append(float(phi[1](cloud.paths[1, -1])))
        cov, se = pair_covariance(a, b)
        rows.append({"N": N, "estimate": abs(cov), "stderr": se,
                     "repetitions": cfg.repetitions, "covariance": cov,
                     "runtime_ms": (time.perf_counter() - start) * 1e3})
    diag = {"functionals": [f.to_json() for f in phi]}
    return RunReport("chaoticity", rows, diag, _provenance(cfg), extra_columns=("covariance",))


def moment_statistic(cloud: PathCloud, p_prime: float) -> float:
    """``(1/N) sum_i sup_t ||X^i_t||^{p'}`` for one run."""
    sup = np.max(np.linalg.norm(cloud.paths, axis=2), axis=1)
    return float(np.mean(sup ** p_prime))


def moment_diagnostic(cfg: ExperimentConfig, growth_flag: float = 1.5) -> RunReport:
    """Uniform-in-``N`` proxy for the ``p'``-moment of the running supremum."""
    rows = []
    for N in cfg.N_list:
        start = time.perf_counter()
        values = []
        for r in range(cfg.repetitions):
            _, _, cloud = run_system(cfg, N, f"moments/N={N}/r={r}")
            values.append(moment_statistic(cloud, cfg.p_prime))
        est, se = _summary(values)
        rows.append({"N": N, "estimate": est, "stderr": se, "repetitions": cfg.repetitions,
                     "runtime_ms": (time.perf_counter() - start) * 1e3})
    est = [r["estimate"] for r in rows]
    ratio = max(est) / min(est) if min(est) > 0 else math.inf
    diag = {"max_over_min": ratio, "growth_flag": bool(ratio >= growth_flag or
                                                       not math.isfinite(ratio))}
    return RunReport("moments", rows, diag, _provenance(cfg))
