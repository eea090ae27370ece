"""Weakly interacting particle system driven by its own empirical measure.

All particles read the same snapshot of the empirical measure taken at the
start of each step, then advance independently with the mild step.
"""
from __future__ import annotations

import numpy as np

from .coefficients import CoefficientSpec, _check
from .errors import DivergenceError
from .mild_solver import SolverGrid, _advance
from .noise import StreamBundle
from .spectral import SpectralModel, convolution_kernels
from .transport import PathCloud


def _validate(model, spec, states, streams):
    states = np.array(states, dtype=float, ndmin=2)
    if states.shape[0] < 1:
        raise ValueError("particle system needs N >= 1")
    if states.shape[1] != model.K:
        raise ValueError(f"state dimension {states.shape[1]} does not match K={model.K}")
    _check(spec, states, states)
    if len(streams) != states.shape[0]:
        raise ValueError(f"{len(streams)} streams for {states.shape[0]} particles")
    return states


def step_system(model: SpectralModel, spec: CoefficientSpec, t: float, states,
                streams: StreamBundle, dt: float, step_index: int = 0) -> np.ndarray:
    """Advance all ``N`` particles by one step; noise is taken at ``step_index``."""
    states = _validate(model, spec, states, streams)
    xi = streams.block(step_index, model.K)
    out = _advance(convolution_kernels(model, dt), spec, t, states, states, xi)
    _raise_if_diverged(out, step_index + 1)
    return out


def _raise_if_diverged(x, step):
    bad = ~np.all(np.isfinite(x), axis=1)
    if np.any(bad):
        raise DivergenceError(step, int(np.argmax(bad)))


def simulate_system(model: SpectralModel, spec: CoefficientSpec, grid: SolverGrid, initial,
                    streams: StreamBundle) -> PathCloud:
    """Paths of the ``N``-particle system on ``grid``."""
    x = _validate(model, spec, initial, streams)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial states must be finite")
    kern = convolution_kernels(model, grid.dt)
    out = np.empty((x.shape[0], grid.M + 1, model.K))
    out[:, 0] = x
    for m in range(grid.M):
        xi = streams.block(m, model.K)
        x = _advance(kern, spec, grid.time(m), x, x, xi)
        _raise_if_diverged(x, m + 1)
        out[:, m + 1] = x
    return PathCloud(grid.T, out)


def empirical_mean_table(cloud: PathCloud, p: float) -> np.ndarray:
    """Rows ``(t, mean_1..mean_K, p-moment)`` for every grid time."""
    t = np.linspace(0.0, cloud.T, cloud.M + 1)
    means = cloud.paths.mean(axis=0)
    r = np.linalg.norm(cloud.paths, axis=2)
    mom = np.mean(r ** p, axis=0) ** (1.0 / p)
    return np.column_stack([t, means, mom])
