"""Frozen-coefficient mild integrator.

On ``(t_m, t_{m+1}]`` the coefficients are evaluated once at the left
endpoint and the semigroup convolutions against them are integrated exactly
per mode::

    x'_k = e^{-lambda_k dt} x_k + w_k mu_k(t_m, x, nu) + s_k sigma_k(t_m, x, nu) xi_k

with ``(e^{-lambda dt}, w, s)`` from :func:`convolution_kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientSpec, _atoms, _check, _mu
from .errors import DivergenceError
from .noise import NoiseStream, StreamBundle
from .spectral import Kernels, PathSample, SpectralModel, convolution_kernels
from .transport import EmpiricalMeasure, MeasureFlow, PathCloud


@dataclass(frozen=True)
class SolverGrid:
    T: float
    M: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"steps M must be a positive integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def dt(self) -> float:
        return self.T / self.M

    def time(self, m: int) -> float:
        return m * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.dt


def _advance(kern: Kernels, spec: CoefficientSpec, t, x, atoms, xi):
    # overflow surfaces as a DivergenceError from the caller's finiteness check
    with np.errstate(over="ignore", invalid="ignore"):
        mu = _mu(spec, x, atoms)
        out = kern.decay * x + kern.drift_weight * mu
        if np.any(spec.b):
            out = out + kern.noise_std * spec.b * xi
    return out


def _first_bad_row(x):
    bad = ~np.all(np.isfinite(x), axis=-1)
    return int(np.argmax(bad)) if x.ndim > 1 else None


def step(model: SpectralModel, spec: CoefficientSpec, t: float, x, nu, xi, dt: float,
         *, step_index: int = 0) -> np.ndarray:
    """One mild step of a state (or batch of states) against a frozen ``nu``."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    atoms = _atoms(nu)
    _check(spec, x, atoms)
    if x.shape[-1] != model.K or xi.shape != x.shape:
        raise ValueError(f"dimension mismatch: K={model.K}, x {x.shape}, xi {xi.shape}")
    out = _advance(convolution_kernels(model, dt), spec, t, x, atoms, xi)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(step_index, _first_bad_row(out))
    return out


def _check_flow(grid: SolverGrid, flow: MeasureFlow, K: int):
    if flow.M != grid.M or not np.isclose(flow.T, grid.T, rtol=1e-12, atol=0.0):
        raise ValueError(f"flow grid (T={flow.T}, M={flow.M}) does not match solver grid "
                         f"(T={grid.T}, M={grid.M})")
    if flow.dim != K:
        raise ValueError(f"flow dimension {flow.dim} does not match K={K}")


def solve_paths(model: SpectralModel, spec: CoefficientSpec, grid: SolverGrid, x0,
                flow: MeasureFlow, streams: StreamBundle) -> PathCloud:
    """Independent paths driven by ``streams`` against a frozen measure flow.

    Row ``i`` of ``x0`` is driven by ``streams.stream(i)``; the result equals
    stacking :func:`solve_frozen_flow` over the rows.
    """
    x = np.array(x0, dtype=float, ndmin=2)
    n, K = x.shape
    if K != model.K or spec.K != K:
        raise ValueError(f"dimension mismatch: x0 K={K}, model K={model.K}, spec K={spec.K}")
    if len(streams) != n:
        raise ValueError(f"{len(streams)} streams for {n} initial states")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial states must be finite")
    _check_flow(grid, flow, K)
    kern = convolution_kernels(model, grid.dt)
    out = np.empty((n, grid.M + 1, K))
    out[:, 0] = x
    for m in range(grid.M):
        xi = streams.block(m, K)
        x = _advance(kern, spec, grid.time(m), x, flow.atoms[m], xi)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(m + 1, _first_bad_row(x))
        out[:, m + 1] = x
    return PathCloud(grid.T, out)


def solve_frozen_flow(model: SpectralModel, spec: CoefficientSpec, grid: SolverGrid, x0,
                      flow: MeasureFlow, stream: NoiseStream) -> PathSample:
    """Single path of the SPDE with the law argument frozen to ``flow``."""
    bundle = StreamBundle(stream.master_seed, stream.experiment, (stream.particle,),
                          stream.picard)
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1:
        raise ValueError("x0 must be a single state of shape (K,)")
    return solve_paths(model, spec, grid, x0[None, :], flow, bundle).path(0)
