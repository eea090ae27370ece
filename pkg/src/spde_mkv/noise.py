"""Counter-based Gaussian streams for the truncated cylindrical noise.

Every variate is a pure function of ``(master_seed, experiment, picard,
particle, step, mode)``.  Blocks can therefore be regenerated in any order,
by any worker, and two systems driven by the same stream key see exactly the
same Brownian increments.

Generator: Philox4x32-10 (Salmon et al., Random123) evaluated with numpy
uint64 arithmetic.  The 64-bit Philox key is a BLAKE2b digest of
``(master_seed, experiment, picard)``; the 128-bit counter holds
``(mode_pair, step, particle_lo, particle_hi)``.  Each counter yields four
32-bit words, i.e. two 53-bit uniforms, which the Box-Muller transform turns
into two standard normals (modes ``2j`` and ``2j + 1``).  This method is
fixed for the lifetime of the package.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = 0x9E3779B9
_PHILOX_W1 = 0xBB67AE85
_ROUNDS = 10


def philox4x32(counter, key):
    """Philox4x32-10 block function, vectorized over leading axes.

    ``counter`` has shape ``(..., 4)`` and ``key`` shape ``(2,)`` (or
    broadcastable to ``(..., 2)``); entries are 32-bit words.  Returns uint64
    array of shape ``(..., 4)`` holding 32-bit outputs.
    """
    c = np.asarray(counter, dtype=np.uint64) & _MASK32
    k = np.asarray(key, dtype=np.uint64) & _MASK32
    c0, c1, c2, c3 = c[..., 0], c[..., 1], c[..., 2], c[..., 3]
    k0 = k[..., 0]
    k1 = k[..., 1]
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + np.uint64(_PHILOX_W0)) & _MASK32
            k1 = (k1 + np.uint64(_PHILOX_W1)) & _MASK32
        p0 = _PHILOX_M0 * c0
        p1 = _PHILOX_M1 * c2
        hi0, lo0 = p0 >> np.uint64(32), p0 & _MASK32
        hi1, lo1 = p1 >> np.uint64(32), p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack([c0, c1, c2, c3], axis=-1)


def derive_key(master_seed: int, experiment: str, picard: int) -> tuple[int, int]:
    """Two 32-bit Philox key words for a (seed, experiment, picard) triple."""
    tag = f"{int(master_seed)}|{experiment}|{int(picard)}".encode()
    digest = hashlib.blake2b(tag, digest_size=8).digest()
    word = int.from_bytes(digest, "little")
    return word & 0xFFFFFFFF, word >> 32


def _uniform53(hi, lo):
    return ((hi >> np.uint64(5)).astype(np.float64) * 67108864.0
            + (lo >> np.uint64(6)).astype(np.float64)) / 9007199254740992.0


@dataclass(frozen=True)
class NoiseStream:
    """Key of one particle's Brownian stream; holds no mutable state."""

    master_seed: int
    experiment: str = "default"
    particle: int = 0
    picard: int = 0

    def block(self, step: int, K: int) -> np.ndarray:
        return gaussian_block(self, step, K)

    def with_picard(self, picard: int) -> "NoiseStream":
        return NoiseStream(self.master_seed, self.experiment, self.particle, picard)


@dataclass(frozen=True)
class StreamBundle:
    """Streams for a batch of particles sharing seed, experiment and picard.

    Row ``i`` of every block equals ``NoiseStream(seed, experiment,
    particles[i], picard).block(step, K)``.
    """

    master_seed: int
    experiment: str
    particles: tuple[int, ...]
    picard: int = 0

    @classmethod
    def range(cls, master_seed: int, experiment: str, n: int, picard: int = 0):
        return cls(master_seed, experiment, tuple(range(n)), picard)

    def __len__(self):
        return len(self.particles)

    def stream(self, i: int) -> NoiseStream:
        return NoiseStream(self.master_seed, self.experiment, self.particles[i], self.picard)

    def with_picard(self, picard: int) -> "StreamBundle":
        return StreamBundle(self.master_seed, self.experiment, self.particles, picard)

    def permuted(self, perm) -> "StreamBundle":
        return StreamBundle(self.master_seed, self.experiment,
                            tuple(self.particles[j] for j in perm), self.picard)

    def block(self, step: int, K: int) -> np.ndarray:
        return _normals(self.master_seed, self.experiment, self.picard,
                        np.asarray(self.particles, dtype=np.uint64), step, K)


def gaussian_block(stream: NoiseStream, step: int, K: int) -> np.ndarray:
    """K i.i.d. standard normals for ``stream`` at time step ``step``."""
    return _normals(stream.master_seed, stream.experiment, stream.picard,
                    np.asarray([stream.particle], dtype=np.uint64), step, K)[0]


def _normals(master_seed, experiment, picard, particles, step, K):
    if K < 1:
        raise ValueError(f"dimension must be positive, got {K}")
    if step < 0 or step >= 2**32:
        raise ValueError(f"step index out of range: {step}")
    key = np.asarray(derive_key(master_seed, experiment, picard), dtype=np.uint64)
    n_pairs = (K + 1) // 2
    n = particles.shape[0]
    ctr = np.empty((n, n_pairs, 4), dtype=np.uint64)
    ctr[..., 0] = np.arange(n_pairs, dtype=np.uint64)[None, :]
    ctr[..., 1] = np.uint64(step)
    ctr[..., 2] = (particles & _MASK32)[:, None]
    ctr[..., 3] = (particles >> np.uint64(32))[:, None]
    w = philox4x32(ctr, key)
    u1 = _uniform53(w[..., 0], w[..., 1])
    u2 = _uniform53(w[..., 2], w[..., 3])
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * np.pi * u2
    z = np.empty((n, 2 * n_pairs))
    z[:, 0::2] = radius * np.cos(angle)
    z[:, 1::2] = radius * np.sin(angle)
    return z[:, :K]
