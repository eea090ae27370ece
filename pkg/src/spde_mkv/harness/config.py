"""Experiment configuration: JSON ingestion and validation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..coefficients import CoefficientSpec
from ..errors import ConfigError
from ..mild_solver import SolverGrid
from ..mkv_solver import PicardConfig
from ..spectral import SpectralModel, make_dirichlet_heat
from ..transport import EmpiricalMeasure


@dataclass(frozen=True)
class Functional:
    """Bounded test map of the terminal state: ``kind(scale * x[mode])``."""

    kind: str = "tanh"
    mode: int = 0
    scale: float = 1.0
    value: float = 1.0  # used by kind "constant"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full(x.shape[:-1], self.value)
        z = self.scale * x[..., self.mode]
        if self.kind == "tanh":
            return np.tanh(z)
        if self.kind == "cos":
            return np.cos(z)
        if self.kind == "sin":
            return np.sin(z)
        raise ConfigError(f"unknown functional kind {self.kind!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "mode": self.mode, "scale": self.scale, "value": self.value}


FUNCTIONAL_KINDS = ("tanh", "cos", "sin", "constant")


@dataclass(frozen=True)
class ExperimentConfig:
    model: SpectralModel
    coefficients: CoefficientSpec
    T: float = 1.0
    M: int = 64
    init_mean: tuple[float, ...] = (1.0,)
    init_std: tuple[float, ...] = (1.0,)
    init_file: str | None = None
    N_list: tuple[int, ...] = (4, 8, 16, 32, 64)
    N: int | None = None
    M_ref: int = 64
    p: float = 2.0
    p_circ: float = 1.0
    p_prime: float = 5.0
    alpha: float = 0.25
    repetitions: int = 20
    seed: int = 0
    max_iter: int = 20
    tol: float = 1e-2
    common_random_numbers: bool = True
    functionals: tuple[Functional, ...] = (Functional("tanh", 0), Functional("cos", 0))
    delta: float = 0.4
    probe_samples: int = 1000
    probe_region: float = 1.0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        validate(self)

    @property
    def K(self) -> int:
        return self.model.K

    @property
    def grid(self) -> SolverGrid:
        return SolverGrid(self.T, self.M)

    @property
    def picard(self) -> PicardConfig:
        return PicardConfig(self.M_ref, self.max_iter, self.tol, self.p,
                            self.common_random_numbers)

    @property
    def system_size(self) -> int:
        return self.N if self.N is not None else max(self.N_list)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        raw = dict(self.raw, seed=int(seed))
        return replace(self, seed=int(seed), raw=raw)

    def config_hash(self) -> str:
        body = {k: v for k, v in self.raw.items() if not k.startswith("_")}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def load_initial_file(self) -> EmpiricalMeasure:
        path = Path(self.init_file)
        if self.raw.get("_base_dir") and not path.is_absolute():
            path = Path(self.raw["_base_dir"]) / path
        try:
            return EmpiricalMeasure.from_json(json.loads(path.read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read initial cloud {path}: {exc}") from exc


def validate(cfg: ExperimentConfig):
    """Reject inconsistent exponent, grid and size settings before any work."""
    if not 1 <= cfg.p_circ < cfg.p_prime:
        raise ConfigError(f"need 1 <= p_circ < p_prime, got p_circ={cfg.p_circ}, "
                          f"p_prime={cfg.p_prime}")
    if not 0 < cfg.alpha < 0.5:
        raise ConfigError(f"alpha must lie in (0, 1/2), got {cfg.alpha}")
    if not cfg.p_prime > 1.0 / cfg.alpha:
        raise ConfigError(f"need p_prime > 1/alpha = {1.0 / cfg.alpha:g}, got {cfg.p_prime}")
    if not cfg.p >= 1:
        raise ConfigError(f"p must be >= 1, got {cfg.p}")
    if cfg.coefficients.K != cfg.model.K:
        raise ConfigError(f"coefficients have K={cfg.coefficients.K}, model has K={cfg.model.K}")
    if len(cfg.init_mean) != cfg.K or len(cfg.init_std) != cfg.K:
        raise ConfigError(f"initial mean/std must have K={cfg.K} entries")
    if any(s < 0 for s in cfg.init_std):
        raise ConfigError("initial std must be nonnegative")
    if not cfg.N_list or any(int(n) != n or n < 1 for n in cfg.N_list):
        raise ConfigError("N_list must be a nonempty list of positive integers")
    if list(cfg.N_list) != sorted(set(cfg.N_list)):
        raise ConfigError("N_list must be strictly increasing")
    if cfg.M_ref < 2:
        raise ConfigError("M_ref must be at least 2")
    bad = [n for n in cfg.N_list if cfg.M_ref % n]
    if bad:
        raise ConfigError(f"N_list entries {bad} do not divide M_ref={cfg.M_ref}")
    if cfg.N is not None and cfg.N < 1:
        raise ConfigError("N must be positive")
    if cfg.repetitions < 1:
        raise ConfigError("repetitions must be positive")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    for f in cfg.functionals:
        if f.kind not in FUNCTIONAL_KINDS:
            raise ConfigError(f"unknown functional kind {f.kind!r}")
        if not 0 <= f.mode < cfg.K:
            raise ConfigError(f"functional mode {f.mode} outside 0..{cfg.K - 1}")
    if not 0 < cfg.delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    try:
        SolverGrid(cfg.T, cfg.M)
        PicardConfig(cfg.M_ref, cfg.max_iter, cfg.tol, cfg.p, cfg.common_random_numbers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _model_from(doc) -> SpectralModel:
    if "eigenvalues" in doc:
        return SpectralModel.from_json(doc)
    if doc.get("kind", doc.get("label")) in ("dirichlet_heat", "dirichlet_heat_1d"):
        return make_dirichlet_heat(int(doc["K"]), float(doc.get("length_scale", 1.0)))
    raise ConfigError("model needs 'eigenvalues' or kind 'dirichlet_heat' with K")


def from_dict(doc: dict, base_dir: str | None = None) -> ExperimentConfig:
    """Build a config from a parsed JSON document."""
    try:
        model = _model_from(doc["model"])
        coeffs = CoefficientSpec.from_json(doc["coefficients"])
        grid = doc.get("grid", {})
        init = doc.get("initial", {})
        picard = doc.get("picard", {})
        check = doc.get("check", {})
        K = model.K
        kwargs = dict(
            model=model,
            coefficients=coeffs,
            T=float(grid.get("T", 1.0)),
            M=int(grid.get("M", 64)),
            init_mean=tuple(float(v) for v in init.get("mean", [0.0] * K)),
            init_std=tuple(float(v) for v in init.get("std", [1.0] * K)),
            init_file=init.get("file"),
            N_list=tuple(int(n) for n in doc.get("N_list", (4, 8, 16, 32, 64))),
            N=int(doc["N"]) if doc.get("N") is not None else None,
            M_ref=int(doc.get("M_ref", 64)),
            p=float(doc.get("p", 2.0)),
            p_circ=float(doc.get("p_circ", 1.0)),
            p_prime=float(doc.get("p_prime", 5.0)),
            alpha=float(doc.get("alpha", 0.25)),
            repetitions=int(doc.get("repetitions", 20)),
            seed=int(doc.get("seed", 0)),
            max_iter=int(picard.get("max_iter", 20)),
            tol=float(picard.get("tol", 1e-2)),
            common_random_numbers=bool(picard.get("common_random_numbers", True)),
            delta=float(check.get("delta", 0.4)),
            probe_samples=int(check.get("probe_samples", 1000)),
            probe_region=float(check.get("region", 1.0)),
        )
        if "functionals" in doc:
            kwargs["functionals"] = tuple(
                Functional(f.get("kind", "tanh"), int(f.get("mode", 0)),
                           float(f.get("scale", 1.0)), float(f.get("value", 1.0)))
                for f in doc["functionals"])
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc!r}") from exc
    raw = dict(doc)
    if base_dir is not None:
        raw["_base_dir"] = str(base_dir)
    return ExperimentConfig(**kwargs, raw=raw)


def load(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return from_dict(doc, base_dir=str(path.parent))
