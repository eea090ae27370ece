"""Spectrally truncated state space with a diagonal generator.

States are coefficient vectors in the eigenbasis ``e_1..e_K`` of ``-A``;
the semigroup acts mode-wise as ``exp(-lambda_k t)``.  All norms are
Euclidean norms of the coefficient vector.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpectralModel:
    """Eigenvalues ``0 <= lambda_1 <= ... <= lambda_K`` of ``-A``."""

    eigenvalues: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).reshape(-1)
        if lam.size < 1:
            raise ValueError("truncation K must be at least 1")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("eigenvalues must be finite and nonnegative")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be in ascending order")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def K(self) -> int:
        return self.eigenvalues.size

    def to_json(self) -> dict:
        return {"label": self.label, "eigenvalues": [float(v) for v in self.eigenvalues]}

    @classmethod
    def from_json(cls, doc: dict) -> "SpectralModel":
        return cls(np.asarray(doc["eigenvalues"], dtype=float), doc.get("label", "custom"))


def make_dirichlet_heat(K: int, length_scale: float = 1.0) -> SpectralModel:
    """Dirichlet Laplacian on an interval: ``lambda_k = (k pi / L)^2``."""
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    if not length_scale > 0:
        raise ValueError(f"length_scale must be positive, got {length_scale}")
    k = np.arange(1, int(K) + 1, dtype=float)
    return SpectralModel((k * math.pi / length_scale) ** 2, "dirichlet_heat_1d")


def norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def _check_dim(model: SpectralModel, x: np.ndarray):
    if x.shape[-1] != model.K:
        raise ValueError(f"state dimension {x.shape[-1]} does not match K={model.K}")


def semigroup_apply(model: SpectralModel, t: float, x) -> np.ndarray:
    """``S_t x``; ``x`` may carry leading batch axes."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    x = np.asarray(x, dtype=float)
    _check_dim(model, x)
    return np.exp(-model.eigenvalues * t) * x


@dataclass(frozen=True)
class Kernels:
    decay: np.ndarray
    drift_weight: np.ndarray
    noise_std: np.ndarray

    def __iter__(self):
        return iter((self.decay, self.drift_weight, self.noise_std))


def convolution_kernels(model: SpectralModel, dt: float) -> Kernels:
    """Exact per-mode weights of one frozen-coefficient mild step.

    ``drift_weight = int_0^dt e^{-lambda s} ds`` and
    ``noise_std**2 = int_0^dt e^{-2 lambda s} ds``; both use ``expm1`` so the
    ``lambda -> 0`` limits (``dt`` and ``sqrt(dt)``) are reached continuously.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    lam = model.eigenvalues
    decay = np.exp(-lam * dt)
    drift = np.full_like(lam, float(dt))
    var = np.full_like(lam, float(dt))
    pos = lam > 0
    drift[pos] = -np.expm1(-lam[pos] * dt) / lam[pos]
    var[pos] = -np.expm1(-2.0 * lam[pos] * dt) / (2.0 * lam[pos])
    return Kernels(decay, drift, np.sqrt(var))


@dataclass(frozen=True)
class PathSample:
    """A path on the uniform grid ``t_m = m T / M``; ``states`` is ``(M+1, K)``."""

    T: float
    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        if s.ndim != 2 or s.shape[0] < 2:
            raise ValueError("states must have shape (M+1, K) with M >= 1")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        object.__setattr__(self, "states", s)

    @property
    def M(self) -> int:
        return self.states.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M + 1)

    def to_json(self) -> dict:
        return {"T": float(self.T), "M": self.M, "dim": self.dim,
                "states": self.states.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "PathSample":
        states = np.asarray(doc["states"], dtype=float)
        if states.shape != (int(doc["M"]) + 1, int(doc["dim"])):
            raise ValueError("PathSample states do not match declared M/dim")
        return cls(float(doc["T"]), states)


def sup_distance(a: PathSample, b: PathSample) -> float:
    """Uniform metric ``d_T`` over the shared grid."""
    if a.states.shape != b.states.shape or a.T != b.T:
        raise ValueError("paths live on different grids")
    return float(np.max(np.linalg.norm(a.states - b.states, axis=1)))


def dumps(doc) -> str:
    return json.dumps(doc, separators=(",", ":"))
