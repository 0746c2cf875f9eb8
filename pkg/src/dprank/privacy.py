"""Gaussian mechanism on ranking histograms.

Noise is drawn from counter-based Philox streams: stream ``index`` under a
master seed is independent of every other stream and of scheduling, so
parallel trials reproduce exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .ranking import Histogram, VoteDistribution

TINY_EPSILON = 1e-6


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float
    N: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if self.epsilon < TINY_EPSILON:
            warnings.warn(
                f"epsilon={self.epsilon:g} is tiny; the error rate saturates at random guessing",
                RuntimeWarning, stacklevel=3)

    @classmethod
    def with_delta_scale(cls, epsilon: float, scale: float, N: int) -> "PrivacyParams":
        """``delta = scale / N``."""
        return cls(epsilon, scale / N, N)

    @property
    def log_term(self) -> float:
        return math.log(2.0 / self.delta)

    @property
    def sigma(self) -> float:
        return sigma(self)

    @property
    def sigma_hat(self) -> float:
        return sigma_hat(self)


def sigma(params: PrivacyParams) -> float:
    """Histogram-scale noise: sigma^2 = 2 ln(2/delta) / epsilon^2."""
    return math.sqrt(2.0 * params.log_term) / params.epsilon


def sigma_hat(params: PrivacyParams) -> float:
    """Noise on the normalized profile, ``sigma / N``."""
    return sigma(params) / params.N


def l2_sensitivity() -> float:
    """One ballot added or removed moves one histogram cell by one."""
    return 1.0


def l2_distance(a, b) -> float:
    a = a.counts if isinstance(a, Histogram) else np.asarray(a, dtype=float)
    b = b.counts if isinstance(b, Histogram) else np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b))


def calibrated_sigma(epsilon: float, delta: float, sensitivity: float = 1.0) -> float:
    """Smallest sigma satisfying the Gaussian-mechanism condition for ``sensitivity``."""
    return math.sqrt(2.0 * math.log(2.0 / delta)) / epsilon * sensitivity


def _key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for stream ``index`` under master ``seed``.

    The index occupies the upper counter words, so streams never overlap for
    any realistic number of draws per stream.
    """
    if index < 0:
        raise ValueError("stream index must be non-negative")
    counter = [0, 0, index & 0xFFFFFFFFFFFFFFFF, index >> 64]
    return np.random.Generator(np.random.Philox(key=_key(seed), counter=counter))


def _generator(seed, index):
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(int(seed), index)


@dataclass(frozen=True)
class NoisySample:
    value: object
    seed: int | None
    index: int = 0


def add_noise(h: Histogram, params: PrivacyParams, seed=0, index: int = 0) -> NoisySample:
    """``q + N(0, sigma^2 I)``; entries may go negative and are not clamped."""
    z = _generator(seed, index).standard_normal(len(h))
    value = Histogram(h.counts + sigma(params) * z, h.M)
    return NoisySample(value, seed if isinstance(seed, int) else None, index)


def add_noise_normalized(v: VoteDistribution, params: PrivacyParams, seed=0,
                         index: int = 0) -> NoisySample:
    """``v + N(0, sigma_hat^2 I)``, drawing the same standard normals as :func:`add_noise`."""
    z = _generator(seed, index).standard_normal(len(v))
    value = VoteDistribution(v.weights + sigma_hat(params) * z, v.M)
    return NoisySample(value, seed if isinstance(seed, int) else None, index)
