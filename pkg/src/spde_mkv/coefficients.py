"""Catalog of drift/diffusion pairs ``(mu, sigma)`` with diagonal diffusion.

Each entry is evaluated on a batch of states ``x`` of shape ``(..., K)``
against one empirical measure ``nu``.  ``sigma`` returns per-mode
multipliers of the truncated cylindrical noise, so its operator norm is the
largest multiplier and its Hilbert-Schmidt norm their Euclidean norm.

Kinds
-----
``mean_field_ou``       mu = kappa (mean(nu) - x),         sigma = b
``linear_in_measure``   mu = a * x + kappa mean(nu),       sigma = b
``constant_diffusion``  mu = 0,                            sigma = b
``bounded_interaction`` mu = kappa E_nu[tanh(y - x)],      sigma = b
``composed``            sums of the drifts and of the multipliers of ``parts``
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transport import EmpiricalMeasure

KINDS = ("mean_field_ou", "linear_in_measure", "constant_diffusion",
         "bounded_interaction", "composed")


def _vec(v):
    arr = np.array(v, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CoefficientSpec:
    kind: str
    b: np.ndarray
    kappa: float = 0.0
    a: np.ndarray | None = None
    parts: tuple["CoefficientSpec", ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        object.__setattr__(self, "b", _vec(self.b))
        if np.any(self.b < 0) or not np.all(np.isfinite(self.b)):
            raise ValueError("noise levels b must be finite and nonnegative")
        if not np.isfinite(self.kappa):
            raise ValueError("kappa must be finite")
        if self.kind == "linear_in_measure":
            if self.a is None:
                raise ValueError("linear_in_measure needs the drift diagonal a")
            object.__setattr__(self, "a", _vec(self.a))
            if self.a.shape != self.b.shape:
                raise ValueError("a and b must have the same length")
        if self.kind == "composed":
            if not self.parts:
                raise ValueError("composed spec needs at least one part")
            if any(part.K != self.K for part in self.parts):
                raise ValueError("composed parts disagree on dimension")

    @property
    def K(self) -> int:
        return self.b.size

    @property
    def depends_on_measure(self) -> bool:
        if self.kind == "composed":
            return any(part.depends_on_measure for part in self.parts)
        if self.kind == "constant_diffusion":
            return False
        return self.kappa != 0.0

    def declared_growth(self) -> float:
        """Constant C with ``||mu|| + ||sigma||_op <= C (1 + ||x|| + ||nu||_p)``."""
        bmax = float(self.b.max())
        if self.kind == "mean_field_ou":
            return abs(self.kappa) + bmax
        if self.kind == "linear_in_measure":
            return float(np.abs(self.a).max()) + abs(self.kappa) + bmax
        if self.kind == "constant_diffusion":
            return bmax
        if self.kind == "bounded_interaction":
            return abs(self.kappa) * np.sqrt(self.K) + bmax
        return sum(part.declared_growth() for part in self.parts)

    def declared_lipschitz(self) -> float:
        """Constant L with ``||mu(x,nu) - mu(y,eta)|| <= L (||x-y|| + w_p(nu,eta))``."""
        if self.kind == "mean_field_ou":
            return abs(self.kappa)
        if self.kind == "linear_in_measure":
            return max(float(np.abs(self.a).max()), abs(self.kappa))
        if self.kind == "constant_diffusion":
            return 0.0
        if self.kind == "bounded_interaction":
            return abs(self.kappa)
        return sum(part.declared_lipschitz() for part in self.parts)

    def to_json(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == "composed":
            doc["parts"] = [part.to_json() for part in self.parts]
            return doc
        if self.kind != "constant_diffusion":
            doc["kappa"] = float(self.kappa)
        if self.kind == "linear_in_measure":
            doc["a"] = self.a.tolist()
        doc["b"] = self.b.tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "CoefficientSpec":
        kind = doc["kind"]
        if kind == "composed":
            parts = tuple(cls.from_json(d) for d in doc["parts"])
            return composed(*parts)
        return cls(kind, doc["b"], float(doc.get("kappa", 0.0)), doc.get("a"))


def mean_field_ou(kappa: float, b) -> CoefficientSpec:
    return CoefficientSpec("mean_field_ou", b, kappa)


def linear_in_measure(a, kappa: float, b) -> CoefficientSpec:
    return CoefficientSpec("linear_in_measure", b, kappa, a)


def constant_diffusion(b) -> CoefficientSpec:
    return CoefficientSpec("constant_diffusion", b)


def bounded_interaction(kappa: float, b) -> CoefficientSpec:
    return CoefficientSpec("bounded_interaction", b, kappa)


def composed(*parts: CoefficientSpec) -> CoefficientSpec:
    return CoefficientSpec("composed", sum(p.b for p in parts), parts=tuple(parts))


def _atoms(nu) -> np.ndarray:
    atoms = nu.atoms if isinstance(nu, EmpiricalMeasure) else np.asarray(nu, dtype=float)
    if atoms.ndim != 2 or atoms.shape[0] == 0:
        raise ValueError("measure must be a nonempty cloud of shape (N, K)")
    return atoms


def _check(spec, x, atoms):
    if x.shape[-1] != spec.K or atoms.shape[1] != spec.K:
        raise ValueError(f"dimension mismatch: spec K={spec.K}, state {x.shape[-1]}, "
                         f"measure {atoms.shape[1]}")


def eval_mu(spec: CoefficientSpec, t: float, x, nu) -> np.ndarray:
    """Drift ``mu(t, x, nu)``; ``x`` may be a batch ``(n, K)``."""
    x = np.asarray(x, dtype=float)
    atoms = _atoms(nu)
    _check(spec, x, atoms)
    return _mu(spec, x, atoms)


def measure_mean(atoms: np.ndarray, axis: int = 0) -> np.ndarray:
    """Mean over atoms, summed in sorted order so atom order cannot change a bit."""
    return np.sort(atoms, axis=axis).sum(axis=axis) / atoms.shape[axis]


def _mu(spec, x, atoms):
    kind = spec.kind
    if kind == "mean_field_ou":
        return spec.kappa * (measure_mean(atoms) - x)
    if kind == "linear_in_measure":
        return spec.a * x + spec.kappa * measure_mean(atoms)
    if kind == "constant_diffusion":
        return np.zeros_like(x)
    if kind == "bounded_interaction":
        diff = atoms[None, :, :] - x.reshape(-1, 1, spec.K)
        return (spec.kappa * measure_mean(np.tanh(diff), axis=1)).reshape(x.shape)
    return sum(_mu(part, x, atoms) for part in spec.parts)


def eval_sigma(spec: CoefficientSpec, t: float, x, nu) -> np.ndarray:
    """Per-mode diffusion multipliers, broadcast to the shape of ``x``."""
    x = np.asarray(x, dtype=float)
    atoms = _atoms(nu)
    _check(spec, x, atoms)
    return np.broadcast_to(spec.b, x.shape).copy()


def operator_norm(sigma) -> float:
    return float(np.max(np.abs(sigma)))


def hilbert_schmidt_norm(sigma) -> float:
    return float(np.linalg.norm(sigma))
