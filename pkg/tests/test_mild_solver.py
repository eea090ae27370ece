import math

import numpy as np
import pytest

from spde_mkv.coefficients import (constant_diffusion, linear_in_measure, mean_field_ou)
from spde_mkv.errors import DivergenceError
from spde_mkv.mild_solver import SolverGrid, solve_frozen_flow, solve_paths, step
from spde_mkv.noise import NoiseStream, StreamBundle
from spde_mkv.spectral import SpectralModel
from spde_mkv.transport import EmpiricalMeasure, MeasureFlow, dirac


def test_grid():
    g = SolverGrid(2.0, 8)
    assert g.dt == 0.25
    np.testing.assert_allclose(g.times, np.arange(9) * 0.25)
    for T, M in [(0.0, 4), (1.0, 0), (1.0, 2.5)]:
        with pytest.raises(ValueError):
            SolverGrid(T, M)


def test_step_pure_decay():
    model = SpectralModel([1.0])
    spec = constant_diffusion([0.0])
    out = step(model, spec, 0.0, [1.0], [[0.0]], [0.3], math.log(2))
    assert out[0] == pytest.approx(0.5, rel=1e-15)


def test_step_euler_limit_at_zero_eigenvalue():
    # mu = a*x + kappa*mean(nu) with a = 0 is the constant kappa*mean
    model = SpectralModel([0.0])
    spec = linear_in_measure([0.0], 1.0, [0.0])
    out = step(model, spec, 0.0, [2.0], [[3.0]], [0.0], 0.1)
    assert out[0] == pytest.approx(2.0 + 3.0 * 0.1, rel=1e-15)


def test_step_variance_matches_exact_ou():
    model = SpectralModel([1.0])
    b, dt, n = 0.7, 0.2, 10**5
    xi = StreamBundle.range(5, "variance", n).block(0, 1)
    out = step(model, constant_diffusion([b]), 0.0, np.zeros((n, 1)), [[0.0]], xi, dt)
    exact = b * b * (1 - math.exp(-2 * dt)) / 2
    assert out.var() == pytest.approx(exact, rel=0.02)


def test_step_errors():
    model = SpectralModel([1.0, 2.0])
    spec = mean_field_ou(1.0, [1.0, 1.0])
    with pytest.raises(ValueError):
        step(model, spec, 0.0, [1.0], [[1.0, 1.0]], [0.0], 0.1)
    with pytest.raises(ValueError):
        step(model, spec, 0.0, [1.0, 1.0], [[1.0, 1.0]], [0.0, 0.0], 0.0)
    with pytest.raises(DivergenceError) as info:
        step(model, mean_field_ou(1e308, [0.0, 0.0]), 0.0, [[1.0, 1.0], [1e10, 1.0]],
             [[-1e10, 0.0]], np.zeros((2, 2)), 1.0, step_index=4)
    assert info.value.step == 4


def _frozen_flow(M, T, atoms):
    return MeasureFlow.constant(T, M, EmpiricalMeasure(atoms))


def test_measure_free_ignores_flow():
    model = SpectralModel([1.0, 3.0])
    spec = constant_diffusion([0.4, 0.2])
    grid = SolverGrid(1.0, 16)
    s = NoiseStream(3, "free", 0)
    a = solve_frozen_flow(model, spec, grid, [1.0, 2.0], _frozen_flow(16, 1.0, [[0.0, 0.0]]), s)
    b = solve_frozen_flow(model, spec, grid, [1.0, 2.0],
                          _frozen_flow(16, 1.0, [[5.0, -3.0], [1.0, 1.0]]), s)
    np.testing.assert_array_equal(a.states, b.states)


def test_frozen_scheme_matches_scalar_recursion():
    lam, kappa, m0, T, M = 1.3, 0.8, 2.0, 1.0, 32
    model = SpectralModel([lam])
    grid = SolverGrid(T, M)
    path = solve_frozen_flow(model, mean_field_ou(kappa, [0.0]), grid, [m0],
                             MeasureFlow.constant(T, M, dirac([0.0])), NoiseStream(0))
    # independent scalar recursion of the frozen scheme: exact decay plus frozen forcing
    dt = T / M
    g = m0
    for _ in range(M):
        g = math.exp(-lam * dt) * g + (1 - math.exp(-lam * dt)) / lam * kappa * (0.0 - g)
    assert path.states[-1, 0] == pytest.approx(g, rel=1e-12)


def _terminal_error(M, lam=1.0, kappa=1.0, T=1.0, m0=1.0):
    model = SpectralModel([lam])
    path = solve_frozen_flow(model, mean_field_ou(kappa, [0.0]), SolverGrid(T, M), [m0],
                             MeasureFlow.constant(T, M, dirac([0.0])), NoiseStream(0))
    return abs(path.states[-1, 0] - m0 * math.exp(-(lam + kappa) * T))


def test_first_order_refinement():
    errs = [_terminal_error(M) for M in (16, 32, 64, 128)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 1.8 <= coarse / fine <= 2.2


def test_determinism_and_batch_consistency():
    model = SpectralModel([1.0, 4.0])
    spec = mean_field_ou(0.5, [0.3, 0.1])
    grid = SolverGrid(1.0, 20)
    flow = _frozen_flow(20, 1.0, [[1.0, 0.0], [0.0, 1.0]])
    x0 = np.array([[1.0, 2.0], [-1.0, 0.5], [0.0, 0.0]])
    bundle = StreamBundle.range(11, "batch", 3)
    cloud = solve_paths(model, spec, grid, x0, flow, bundle)
    again = solve_paths(model, spec, grid, x0, flow, bundle)
    np.testing.assert_array_equal(cloud.paths, again.paths)
    for i in range(3):
        single = solve_frozen_flow(model, spec, grid, x0[i], flow, bundle.stream(i))
        np.testing.assert_array_equal(single.states, cloud.paths[i])


def test_linearity_in_initial_condition():
    model = SpectralModel([0.5, 2.0])
    grid = SolverGrid(1.0, 25)
    flow = _frozen_flow(25, 1.0, [[0.0, 0.0]])
    s = NoiseStream(1, "lin", 0)
    x, y = np.array([1.0, -2.0]), np.array([0.3, 0.7])
    alpha, beta = 1.7, -0.4
    drift_only = linear_in_measure([-1.0, 0.5], 0.0, [0.0, 0.0])
    sol = lambda z, spec: solve_frozen_flow(model, spec, grid, z, flow, s).states
    np.testing.assert_allclose(sol(alpha * x + beta * y, drift_only),
                               alpha * sol(x, drift_only) + beta * sol(y, drift_only),
                               rtol=1e-10, atol=1e-12)
    # with additive noise the solution map is affine: combinations with weights summing to 1
    noisy = linear_in_measure([-1.0, 0.5], 0.0, [0.3, 0.2])
    w = 0.25
    np.testing.assert_allclose(sol(w * x + (1 - w) * y, noisy),
                               w * sol(x, noisy) + (1 - w) * sol(y, noisy),
                               rtol=1e-10, atol=1e-12)


def test_flow_grid_mismatch():
    model = SpectralModel([1.0])
    with pytest.raises(ValueError):
        solve_frozen_flow(model, mean_field_ou(1.0, [0.1]), SolverGrid(1.0, 8), [0.0],
                          _frozen_flow(4, 1.0, [[0.0]]), NoiseStream(0))


def test_divergence_reports_step():
    model = SpectralModel([0.0])
    spec = linear_in_measure([1e300], 0.0, [0.0])
    with pytest.raises(DivergenceError) as info:
        solve_frozen_flow(model, spec, SolverGrid(1.0, 10), [1.0],
                          _frozen_flow(10, 1.0, [[0.0]]), NoiseStream(0))
    assert info.value.step == 2


def test_moment_sanity_under_refinement():
    model = SpectralModel([1.0, 4.0])
    spec = mean_field_ou(1.0, [0.5, 0.25])
    x0 = np.array([1.0, 0.5]) + 0.5 * StreamBundle.range(2, "m0", 1000).block(0, 2)
    flow_atoms = x0[:50]
    stats = []
    for M in (16, 32, 64):
        grid = SolverGrid(1.0, M)
        cloud = solve_paths(model, spec, grid, x0, _frozen_flow(M, 1.0, flow_atoms),
                            StreamBundle.range(3, f"moment/M={M}", 1000))
        sup = np.linalg.norm(cloud.paths, axis=2).max(axis=1)
        stats.append(np.mean(sup ** 5))
    assert all(np.isfinite(stats))
    assert max(stats) / min(stats) < 1.25


def test_path_sample_serialization():
    model = SpectralModel([1.0])
    path = solve_frozen_flow(model, constant_diffusion([0.2]), SolverGrid(1.0, 4), [1.0],
                             _frozen_flow(4, 1.0, [[0.0]]), NoiseStream(0))
    doc = path.to_json()
    assert set(doc) == {"T", "M", "dim", "states"}
    assert doc["M"] == 4 and doc["dim"] == 1 and len(doc["states"]) == 5
