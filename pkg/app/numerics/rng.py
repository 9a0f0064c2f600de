# app/numerics/rng.py
"""Counter-based random streams and the samplers used by the simulators.

All samplers use the shape–rate / rate conventions: Gamma(k, r) has mean k/r and
Exponential(r) has mean 1/r.
"""
from dataclasses import dataclass

import numpy as np

from app.core.errors import DomainError

_U64 = 2 ** 64


@dataclass(frozen=True)
class RngStream:
    """(seed, stream_id) names one reproducible Philox sub-stream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) < _U64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer", **{name: value})

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


Rng = np.random.Generator | RngStream


def as_generator(rng: Rng) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


def _positive(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be positive and finite")
    return arr


def sample_gamma(shape, rate, rng: Rng, size=None):
    shape = _positive("shape", shape)
    rate = _positive("rate", rate)
    return as_generator(rng).gamma(shape, 1.0 / rate, size)


def sample_exponential(rate, rng: Rng, size=None):
    rate = _positive("rate", rate)
    return as_generator(rng).exponential(1.0 / rate, size)


def sample_beta(a, b, rng: Rng, size=None):
    a = _positive("a", a)
    b = _positive("b", b)
    return as_generator(rng).beta(a, b, size)


def sample_bernoulli(p, rng: Rng, size=None):
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0) & (p <= 1))):
        raise DomainError("p must lie in [0, 1]")
    u = as_generator(rng).random(size if size is not None else p.shape)
    return (u < p).astype(np.int64)


def sample_uniform(rng: Rng, size=None):
    """Uniform on the open interval (0, 1)."""
    u = as_generator(rng).random(size)
    return np.maximum(u, np.finfo(float).tiny)
