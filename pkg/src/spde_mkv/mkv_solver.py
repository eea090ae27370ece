"""McKean-Vlasov law by Picard iteration on measure flows.

The map ``Phi`` sends a flow ``gamma`` to the marginal flow of the SPDE
solved with the law argument frozen to ``gamma``.  A flow is represented by
the marginals of a cloud of ``Mc`` paths.  With common random numbers every
iterate reuses the same initial states and Brownian streams, so ``Phi`` is a
deterministic self-map of clouds and the residual
``max_m w_p(gamma_j(t_m), gamma_{j+1}(t_m))`` measures contraction rather
than Monte Carlo noise.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientSpec
from .mild_solver import SolverGrid, solve_paths
from .noise import StreamBundle
from .spectral import SpectralModel
from .transport import EmpiricalMeasure, MeasureFlow, PathCloud, flow_distance


@dataclass(frozen=True)
class PicardConfig:
    samples: int
    max_iter: int = 20
    tol: float = 1e-2
    p: float = 2.0
    common_random_numbers: bool = True

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 2:
            raise ValueError(f"cloud size must be an integer >= 2, got {self.samples}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")


@dataclass
class MKVResult:
    cloud: PathCloud
    iterations: int
    residuals: list[float]
    converged: bool
    wallclock_ms: list[float] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return self.residuals[-1]


def picard_step(model: SpectralModel, spec: CoefficientSpec, grid: SolverGrid, initial_cloud,
                flow: MeasureFlow, streams: StreamBundle) -> PathCloud:
    """One application of ``Phi``: a path per initial state against ``flow``."""
    return solve_paths(model, spec, grid, initial_cloud, flow, streams)


def solve_mkv(model: SpectralModel, spec: CoefficientSpec, grid: SolverGrid, initial_cloud,
              cfg: PicardConfig, streams: StreamBundle) -> MKVResult:
    """Iterate ``Phi`` from the time-constant initial law until the residual
    drops to ``cfg.tol`` or ``cfg.max_iter`` iterations have run.

    Non-convergence is reported through ``MKVResult.converged``.
    """
    x0 = np.array(initial_cloud, dtype=float, ndmin=2)
    if x0.shape[0] != cfg.samples:
        raise ValueError(f"initial cloud has {x0.shape[0]} atoms, config asks for {cfg.samples}")
    flow = MeasureFlow.constant(grid.T, grid.M, EmpiricalMeasure(x0))
    residuals, clock = [], []
    cloud = None
    converged = False
    for j in range(cfg.max_iter):
        start = time.perf_counter()
        it_streams = streams.with_picard(0 if cfg.common_random_numbers else j)
        cloud = picard_step(model, spec, grid, x0, flow, it_streams)
        new_flow = cloud.flow()
        residuals.append(flow_distance(flow, new_flow, cfg.p))
        flow = new_flow
        clock.append((time.perf_counter() - start) * 1e3)
        if residuals[-1] <= cfg.tol:
            converged = True
            break
    return MKVResult(cloud, len(residuals), residuals, converged, clock)
