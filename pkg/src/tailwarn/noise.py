"""Bounded noise laws on [-eps, eps] and reproducible random streams.

Both laws have a density that is strictly positive at the endpoints of
the support, which is what makes the stationary-density tail fits work.
The truncated normal is sampled by inverse-CDF transform of a single
uniform draw per sample, so scalar and vectorized sampling consume the
raw stream identically and reruns are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtr, ndtri

from .dynamics import MapModel, noise_amplitude

GENERATOR_ID = "numpy.random.PCG64(SeedSequence(master_seed, spawn_key=(stream_index,)))"


class NoiseKind(str, Enum):
    UNIFORM = "uniform"
    TRUNCATED_NORMAL = "truncated-normal"


@dataclass
class RngStream:
    """A reproducible random stream addressed by (master_seed, stream_index).

    Streams with distinct indices under one master seed are statistically
    independent (SeedSequence spawn keys); equal addresses replay the
    same sequence bit for bit.
    """

    master_seed: int
    stream_index: int = 0
    _gen: np.random.Generator | None = field(
        default=None, repr=False, compare=False
    )

    def generator(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(
                self.master_seed, spawn_key=(self.stream_index,)
            )
            self._gen = np.random.Generator(np.random.PCG64(seq))
        return self._gen


@dataclass(frozen=True)
class NoiseModel:
    """A noise law on [-epsilon, epsilon].

    For the truncated normal, mu and sigma are the location and scale of
    the parent normal; sigma defaults to epsilon/2.
    """

    kind: NoiseKind
    epsilon: float
    mu: float = 0.0
    sigma: float | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.kind is NoiseKind.TRUNCATED_NORMAL and self.sigma is None:
            object.__setattr__(self, "sigma", self.epsilon / 2.0)
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def for_model(model: MapModel, kind: NoiseKind) -> NoiseModel:
    """Noise law matched to a map model (linear family gets the (1-a) scaling)."""
    return NoiseModel(kind, noise_amplitude(model))


def _z_bounds(noise: NoiseModel):
    lo = (-noise.epsilon - noise.mu) / noise.sigma
    hi = (noise.epsilon - noise.mu) / noise.sigma
    return lo, hi


def density(noise: NoiseModel, z):
    """Probability density p(z); zero outside [-eps, eps]."""
    z = np.asarray(z, dtype=float)
    inside = (z >= -noise.epsilon) & (z <= noise.epsilon)
    if noise.kind is NoiseKind.UNIFORM:
        out = np.where(inside, 1.0 / (2.0 * noise.epsilon), 0.0)
    else:
        lo, hi = _z_bounds(noise)
        mass = ndtr(hi) - ndtr(lo)
        s = (z - noise.mu) / noise.sigma
        phi = np.exp(-0.5 * s * s) / math.sqrt(2.0 * math.pi)
        out = np.where(inside, phi / (noise.sigma * mass), 0.0)
    return out if out.ndim else float(out)


def cdf(noise: NoiseModel, z):
    """Cumulative distribution F(z), clamped to [0, 1] outside the support."""
    z = np.asarray(z, dtype=float)
    if noise.kind is NoiseKind.UNIFORM:
        out = np.clip((z + noise.epsilon) / (2.0 * noise.epsilon), 0.0, 1.0)
    else:
        lo, hi = _z_bounds(noise)
        mass = ndtr(hi) - ndtr(lo)
        s = np.clip((z - noise.mu) / noise.sigma, lo, hi)
        out = (ndtr(s) - ndtr(lo)) / mass
        out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def sample_array(noise: NoiseModel, size: int, rng: RngStream) -> np.ndarray:
    """Draw `size` samples; exactly one uniform variate consumed per sample."""
    gen = rng.generator()
    if noise.kind is NoiseKind.UNIFORM:
        return gen.uniform(-noise.epsilon, noise.epsilon, size=size)
    lo, hi = _z_bounds(noise)
    p_lo = ndtr(lo)
    p_hi = ndtr(hi)
    u = gen.random(size)
    z = noise.mu + noise.sigma * ndtri(p_lo + u * (p_hi - p_lo))
    return np.clip(z, -noise.epsilon, noise.epsilon)


def sample(noise: NoiseModel, rng: RngStream) -> float:
    """Draw one sample from the law."""
    return float(sample_array(noise, 1, rng)[0])
