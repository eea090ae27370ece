import math

import numpy as np
import pytest

from spde_mkv.coefficients import constant_diffusion, mean_field_ou
from spde_mkv.mild_solver import SolverGrid
from spde_mkv.mkv_solver import PicardConfig, picard_step, solve_mkv
from spde_mkv.noise import StreamBundle
from spde_mkv.spectral import SpectralModel
from spde_mkv.transport import EmpiricalMeasure, MeasureFlow


def _initial(n, K=1, seed=0, mean=1.0, std=1.0):
    return mean + std * StreamBundle.range(seed, "init", n).block(0, K)


def test_config_validation():
    for kwargs in ({"samples": 1}, {"samples": 4, "tol": 0.0}, {"samples": 4, "p": 0.5},
                   {"samples": 4, "max_iter": 0}):
        with pytest.raises(ValueError):
            PicardConfig(**kwargs)


def test_picard_step_measure_free_is_constant_map():
    model = SpectralModel([1.0])
    grid = SolverGrid(1.0, 16)
    x0 = _initial(32)
    streams = StreamBundle.range(1, "phi", 32)
    a = picard_step(model, constant_diffusion([0.5]), grid, x0,
                    MeasureFlow.constant(1.0, 16, EmpiricalMeasure(x0)), streams)
    b = picard_step(model, constant_diffusion([0.5]), grid, x0,
                    MeasureFlow.constant(1.0, 16, EmpiricalMeasure(-3 * x0)), streams)
    np.testing.assert_array_equal(a.paths, b.paths)
    again = picard_step(model, constant_diffusion([0.5]), grid, x0,
                        MeasureFlow.constant(1.0, 16, EmpiricalMeasure(x0)), streams)
    np.testing.assert_array_equal(a.paths, again.paths)


def test_picard_step_tracks_mean_ode():
    # flow = large cloud from the exact law: mean e^{-lambda t} m0, so kappa terms cancel
    lam, kappa, b, T, M, Mc = 1.0, 1.0, 0.5, 1.0, 32, 2000
    model = SpectralModel([lam])
    grid = SolverGrid(T, M)
    big = _initial(20000, seed=9)
    m0 = 1.0
    t = grid.times
    scale = np.exp(-lam * t)[:, None, None]
    flow_atoms = m0 * scale + (big[None, :, :] - m0) * np.exp(-(lam + kappa) * t)[:, None, None]
    flow = MeasureFlow(T, flow_atoms)
    x0 = _initial(Mc, seed=4)
    cloud = picard_step(model, mean_field_ou(kappa, [b]), grid, x0, flow,
                        StreamBundle.range(2, "track", Mc))
    means = cloud.paths[:, :, 0].mean(axis=0)
    sd = cloud.paths[:, :, 0].std(axis=0, ddof=1)
    target = x0[:, 0].mean() * np.exp(-lam * t)
    # the flow mean is m0 e^{-lambda t}; the cloud starts at its own empirical mean
    drift_gap = np.abs(x0[:, 0].mean() - m0) * np.exp(-lam * t)
    assert np.all(np.abs(means - target) <= 3 * sd / math.sqrt(Mc) + drift_gap)


def test_measure_free_converges_in_two_iterations():
    model = SpectralModel([1.0, 4.0])
    res = solve_mkv(model, constant_diffusion([0.5, 0.2]), SolverGrid(1.0, 16), _initial(64, 2),
                    PicardConfig(64, tol=1e-6), StreamBundle.range(0, "free", 64))
    assert res.converged
    assert res.iterations == 2
    assert res.residuals[0] > 0
    assert res.residuals[1] == 0.0


def test_non_convergence_is_flagged():
    model = SpectralModel([1.0])
    res = solve_mkv(model, mean_field_ou(1.0, [0.5]), SolverGrid(1.0, 16), _initial(32),
                    PicardConfig(32, max_iter=2, tol=1e-12), StreamBundle.range(0, "nc", 32))
    assert not res.converged
    assert res.iterations == 2
    assert len(res.wallclock_ms) == 2


def test_mean_field_residuals_and_mean_dynamics():
    lam, kappa, b = 1.0, 1.0, 0.5
    model = SpectralModel([lam])
    grid = SolverGrid(1.0, 64)
    Mc = 512
    x0 = _initial(Mc, seed=3)
    res = solve_mkv(model, mean_field_ou(kappa, [b]), grid, x0,
                    PicardConfig(Mc, tol=1e-3, max_iter=20), StreamBundle.range(3, "mf", Mc))
    assert res.converged and res.residual <= 1e-3
    r = res.residuals
    assert all(later <= earlier for earlier, later in zip(r[1:], r[2:]))
    x = res.cloud.paths[:, :, 0]
    target = x0[:, 0].mean() * np.exp(-lam * grid.times)
    se = x.std(axis=0, ddof=1) / math.sqrt(Mc)
    assert np.all(np.abs(x.mean(axis=0) - target) <= 3 * se + 1e-12)


def test_moment_flow_continuity_under_refinement():
    model = SpectralModel([1.0])
    spec = mean_field_ou(1.0, [0.5])
    jumps = []
    for M in (8, 16, 32, 64):
        x0 = _initial(128, seed=5)
        res = solve_mkv(model, spec, SolverGrid(1.0, M), x0, PicardConfig(128, tol=1e-4),
                        StreamBundle.range(5, "cont", 128))
        norms = np.mean(np.abs(res.cloud.paths[:, :, 0]) ** 5, axis=0) ** 0.2
        jumps.append(np.max(np.abs(np.diff(norms))))
    assert all(b < a for a, b in zip(jumps, jumps[1:]))


def test_size_mismatch():
    with pytest.raises(ValueError):
        solve_mkv(SpectralModel([1.0]), mean_field_ou(1.0, [0.5]), SolverGrid(1.0, 4),
                  _initial(10), PicardConfig(12), StreamBundle.range(0, "x", 12))
