"""Numerical checks of the standing assumptions at finite truncation.

Everything here is a finite-sample or finite-K heuristic: computed partial
quantities are kept apart from extrapolated tails, and the probes return
lower bounds on the true constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .coefficients import CoefficientSpec, eval_mu, eval_sigma
from .noise import StreamBundle
from .spectral import SpectralModel
from .transport import EmpiricalMeasure, moment, wasserstein_p


@dataclass(frozen=True)
class TraceSumResult:
    partial_sum: float
    tail_estimate: float
    verdict: str  # "converges", "diverges" or "inconclusive"
    exponent: float | None = None  # fitted growth rate gamma of lambda_k ~ c k^gamma

    @property
    def total(self) -> float:
        return self.partial_sum + self.tail_estimate


def trace_sum(model: SpectralModel, delta: float, tail_fit: bool = True) -> TraceSumResult:
    """``sum_k lambda_k^{-1+delta}`` over the modeled modes plus a fitted tail.

    The tail fits ``log lambda_k = log c + gamma log k`` on the last quartile
    of modes and integrates ``(c x^gamma)^{-(1-delta)}`` from ``K + 1/2``.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    lam = model.eigenvalues
    if np.any(lam <= 0):
        raise ValueError("trace condition needs strictly positive eigenvalues")
    s = 1.0 - delta
    partial = float(np.sum(lam ** -s))
    K = lam.size
    if not tail_fit:
        return TraceSumResult(partial, 0.0, "inconclusive")
    start = (3 * K) // 4
    k = np.arange(start + 1, K + 1, dtype=float)
    if k.size < 2:
        return TraceSumResult(partial, math.nan, "inconclusive")
    gamma, logc = np.polyfit(np.log(k), np.log(lam[start:]), 1)
    if not (np.isfinite(gamma) and np.isfinite(logc)) or gamma <= 0:
        return TraceSumResult(partial, math.nan, "inconclusive", float(gamma))
    rate = gamma * s
    if rate <= 1:
        return TraceSumResult(partial, math.inf, "diverges", float(gamma))
    tail = math.exp(-s * logc) * (K + 0.5) ** (1.0 - rate) / (rate - 1.0)
    return TraceSumResult(partial, tail, "converges", float(gamma))


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error: float
    finite: bool


def factorization_integral(model: SpectralModel, b, alpha: float, T: float,
                           tol: float = 1e-10) -> IntegralResult:
    """``int_0^T s^{-2 alpha} sum_k b_k^2 e^{-2 lambda_k s} ds``.

    The substitution ``s = u^{1/(1 - 2 alpha)}`` removes the singularity at
    zero.  ``error`` is the quadrature estimate plus the change observed when
    the tolerance is halved; ``finite`` requires that refinement to agree.
    """
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    b2 = np.asarray(b, dtype=float) ** 2
    lam = model.eigenvalues
    if b2.shape != lam.shape:
        raise ValueError(f"{b2.size} noise levels for K={lam.size}")
    if not np.any(b2):
        return IntegralResult(0.0, 0.0, True)
    q = 1.0 / (1.0 - 2.0 * alpha)

    def integrand(u):
        return q * float(np.dot(b2, np.exp(-2.0 * lam * u ** q)))

    upper = T ** (1.0 - 2.0 * alpha)
    # breakpoints at the decay scales of the stiffest modes keep quad honest
    scales = (1.0 / lam[lam > 0]) ** (1.0 / q) if np.any(lam > 0) else np.array([])
    points = sorted({float(x) for x in scales if 0 < x < upper})[:50] or None
    v1, e1 = integrate.quad(integrand, 0.0, upper, epsabs=tol, epsrel=tol, limit=500,
                            points=points)
    v2, e2 = integrate.quad(integrand, 0.0, upper, epsabs=tol / 2, epsrel=tol / 2,
                            limit=1000, points=points)
    change = abs(v2 - v1)
    finite = bool(np.isfinite(v2) and change <= max(e1, tol * max(1.0, abs(v2))))
    return IntegralResult(v2, e2 + change, finite)


@dataclass
class ProbeResult:
    mu_ratio_max: float
    sigma_ratio_max: float
    samples: int
    skipped: int
    mu_running: np.ndarray = field(repr=False)
    sigma_running: np.ndarray = field(repr=False)


def _sample_state(bundle_block, radius):
    # uniform in the ball of given radius: direction times radius * U^(1/K)
    g = bundle_block[..., :-1]
    K = g.shape[-1]
    u = 0.5 * (1.0 + math.erf(bundle_block[..., -1] / math.sqrt(2.0)))
    nrm = np.linalg.norm(g)
    direction = g / nrm if nrm > 0 else g
    return radius * u ** (1.0 / K) * direction


class _Sampler:
    """Reproducible random states and clouds; sample ``i`` never depends on the count."""

    def __init__(self, seed, experiment, K, atoms):
        self.seed, self.experiment, self.K, self.atoms = seed, experiment, K, atoms

    def state(self, i, slot, radius):
        bundle = StreamBundle(self.seed, self.experiment, (i,), 0)
        return _sample_state(bundle.block(slot, self.K + 1)[0], radius)

    def cloud(self, i, slot, radius):
        return np.stack([self.state(i, slot * 1024 + j, radius) for j in range(self.atoms)])


def _probe_pairs(spec, samples, radius, p, mode, seed, atoms):
    if samples < 2:
        raise ValueError("probes need at least 2 samples")
    if mode not in ("joint", "state", "measure"):
        raise ValueError(f"unknown perturbation mode {mode!r}")
    sampler = _Sampler(seed, f"lipschitz/{mode}", spec.K, atoms)
    for i in range(samples):
        x = sampler.state(i, 0, radius)
        nu = sampler.cloud(i, 1, radius)
        y = x if mode == "measure" else sampler.state(i, 2, radius)
        eta = nu if mode == "state" else sampler.cloud(i, 3, radius)
        yield x, y, EmpiricalMeasure(nu), EmpiricalMeasure(eta)


def lipschitz_probe(spec: CoefficientSpec, samples: int = 1000, region: float = 1.0,
                    p: float = 2.0, *, mode: str = "joint", seed: int = 0, atoms: int = 4,
                    t: float = 0.0) -> ProbeResult:
    """Largest sampled ratio ``||mu(x,nu) - mu(y,eta)|| / (||x-y|| + w_p(nu,eta))``.

    ``mode`` selects joint perturbations, state-only (``eta = nu``) or
    measure-only (``y = x``).  The sigma ratio uses the operator norm of the
    diagonal difference.  Pairs with a zero denominator are skipped.
    """
    mu_run, sig_run = [], []
    mu_max = sig_max = 0.0
    skipped = 0
    for x, y, nu, eta in _probe_pairs(spec, samples, region, p, mode, seed, atoms):
        denom = float(np.linalg.norm(x - y)) + wasserstein_p(nu, eta, p)
        if denom <= 0:
            skipped += 1
        else:
            dmu = np.linalg.norm(eval_mu(spec, t, x, nu) - eval_mu(spec, t, y, eta))
            dsig = np.max(np.abs(eval_sigma(spec, t, x, nu) - eval_sigma(spec, t, y, eta)))
            mu_max = max(mu_max, float(dmu) / denom)
            sig_max = max(sig_max, float(dsig) / denom)
        mu_run.append(mu_max)
        sig_run.append(sig_max)
    if skipped == samples:
        raise ValueError("every sampled pair was degenerate")
    return ProbeResult(mu_max, sig_max, samples, skipped, np.array(mu_run), np.array(sig_run))


@dataclass
class GrowthResult:
    estimate: float
    samples: int
    running: np.ndarray = field(repr=False)


def growth_probe(spec: CoefficientSpec, samples: int = 1000, region: float = 1.0,
                 p: float = 2.0, *, seed: int = 0, atoms: int = 4,
                 t: float = 0.0) -> GrowthResult:
    """Largest sampled ``(||mu|| + ||sigma||_op) / (1 + ||x|| + ||nu||_p)``.

    The origin paired with ``delta_0`` is always the first sample.
    """
    if samples < 2:
        raise ValueError("probes need at least 2 samples")
    sampler = _Sampler(seed, "growth", spec.K, atoms)
    best = 0.0
    running = []
    for i in range(samples):
        if i == 0:
            x = np.zeros(spec.K)
            nu = EmpiricalMeasure(np.zeros((1, spec.K)))
        else:
            x = sampler.state(i, 0, region)
            nu = EmpiricalMeasure(sampler.cloud(i, 1, region))
        num = (np.linalg.norm(eval_mu(spec, t, x, nu))
               + np.max(np.abs(eval_sigma(spec, t, x, nu))))
        best = max(best, float(num) / (1.0 + np.linalg.norm(x) + moment(nu, p)))
        running.append(best)
    return GrowthResult(best, samples, np.array(running))


def exponent_consistency(alpha: float, p_prime: float) -> bool:
    """The moment exponent must exceed ``1/alpha``."""
    return 0 < alpha < 0.5 and p_prime > 1.0 / alpha
