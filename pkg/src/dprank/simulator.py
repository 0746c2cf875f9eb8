"""Monte Carlo estimation of the ranking error rate under uniform profiles.

Trial ``i`` draws its profile and its standard-normal noise from Philox
stream ``i`` of the master seed, so a trial's randomness does not depend on
the sweep point, chunking or thread count.  Reusing the same draws across a
sweep (common random numbers) also makes the error indicator of each trial
monotone in the noise level.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from . import bounds
from .geometry import EXACT_MAX_DIM
from .privacy import PrivacyParams, add_noise_normalized, sigma_hat, stream
from .ranking import (
    PositionalRule,
    VoteDistribution,
    aggregate,
    candidate_scores,
    check_candidates,
    rank_scores,
)
from .sampling import sample_simplex_uniform

CHUNK = 1024
Z95 = float(norm.ppf(0.975))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment; ``axis``/``values`` describe an optional sweep.

    Exactly one of ``delta`` and ``delta_scale`` (meaning ``delta = scale / N``)
    is set.
    """

    M: int
    rule: PositionalRule
    epsilon: float
    N: int
    delta: float | None = None
    delta_scale: float | None = None
    trials: int = 10_000
    seed: int = 0
    axis: str | None = None
    values: tuple = field(default=())

    def __post_init__(self):
        check_candidates(self.M)
        if self.rule.M != self.M:
            raise ValueError(f"rule is for M={self.rule.M}, config for M={self.M}")
        if (self.delta is None) == (self.delta_scale is None):
            raise ValueError("set exactly one of delta and delta_scale")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.axis not in (None, "epsilon", "N"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        values = tuple(self.values)
        if self.axis is not None:
            if not values:
                raise ValueError("a sweep needs at least one value")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", values)

    def params(self, value=None) -> PrivacyParams:
        eps, N = self.epsilon, self.N
        if value is not None:
            if self.axis == "epsilon":
                eps = float(value)
            elif self.axis == "N":
                N = int(value)
        if self.delta_scale is not None:
            return PrivacyParams.with_delta_scale(eps, self.delta_scale, N)
        return PrivacyParams(eps, self.delta, N)


@dataclass(frozen=True)
class TrialOutcome:
    error: bool
    tied: bool


@dataclass(frozen=True)
class ErrorRateEstimate:
    point: float
    trials: int
    errors: int
    ci95: tuple
    ties: int
    top1_errors: int = 0

    @property
    def half_width(self) -> float:
        return (self.ci95[1] - self.ci95[0]) / 2


def wilson_interval(errors: int, trials: int, z: float = Z95) -> tuple[float, float]:
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


def draw_trial(M: int, seed: int, index: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform profile and standard-normal noise direction for one trial."""
    g = stream(seed, index)
    n = math.factorial(M)
    v = sample_simplex_uniform(n, g)
    z = g.standard_normal(n)
    return v, z


def draw_trials(M: int, seed: int, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    n = math.factorial(M)
    V = np.empty((stop - start, n))
    Z = np.empty((stop - start, n))
    for r, i in enumerate(range(start, stop)):
        V[r], Z[r] = draw_trial(M, seed, i)
    return V, Z


def run_trial(config: ExperimentConfig, index: int, params: PrivacyParams | None = None,
              noise: float | None = None) -> TrialOutcome:
    """Single trial; ``noise`` overrides sigma_hat (e.g. 0 for a noiseless check)."""
    params = params or config.params()
    g = stream(config.seed, index)
    v = VoteDistribution(sample_simplex_uniform(math.factorial(config.M), g), config.M)
    if noise is None:
        v_hat = add_noise_normalized(v, params, g).value
    else:
        v_hat = VoteDistribution(v.weights + noise * g.standard_normal(len(v)), config.M)
    truth, noisy = aggregate(config.rule, v), aggregate(config.rule, v_hat)
    return TrialOutcome(truth.order != noisy.order, truth.tied or noisy.tied)


def _count(rule: PositionalRule, V, Z, scales) -> np.ndarray:
    """Per noise scale: (errors, ties, top1 errors) over the batch."""
    orders, tied = rank_scores(candidate_scores(rule, V))
    out = np.zeros((len(scales), 3), dtype=np.int64)
    for k, s in enumerate(scales):
        o, t = rank_scores(candidate_scores(rule, V + s * Z))
        out[k, 0] = np.any(o != orders, axis=1).sum()
        out[k, 1] = (t | tied).sum()
        out[k, 2] = (o[:, 0] != orders[:, 0]).sum()
    return out


def count_errors(config: ExperimentConfig, scales, workers: int = 1) -> np.ndarray:
    """Integer counters ``(errors, ties, top1)`` for each noise scale.

    Chunks are reduced by integer addition, so results are identical for any
    ``workers``.
    """
    chunks = [(a, min(a + CHUNK, config.trials)) for a in range(0, config.trials, CHUNK)]

    def job(bounds_):
        V, Z = draw_trials(config.M, config.seed, *bounds_)
        return _count(config.rule, V, Z, scales)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    return np.sum(parts, axis=0)


def _estimate(counts, trials) -> ErrorRateEstimate:
    errors, ties, top1 = (int(c) for c in counts)
    return ErrorRateEstimate(errors / trials, trials, errors, wilson_interval(errors, trials),
                             ties, top1)


def estimate_error_rate(config: ExperimentConfig, params: PrivacyParams | None = None,
                        noise: float | None = None, workers: int = 1) -> ErrorRateEstimate:
    params = params or config.params()
    s = sigma_hat(params) if noise is None else noise
    return _estimate(count_errors(config, [s], workers)[0], config.trials)


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    params: PrivacyParams
    estimate: ErrorRateEstimate
    general: float
    jensen: float
    rule_specific: float


def analytic_bounds(config: ExperimentConfig, params: PrivacyParams) -> tuple[float, float, float]:
    q = bounds.BoundQuery(config.M, params, rule=config.rule)
    rule = (bounds.rule_specific_bound(q).value
            if math.factorial(config.M) <= EXACT_MAX_DIM else float("nan"))
    return bounds.general_bound(q).value, bounds.jensen_bound(q).value, rule


def sweep(config: ExperimentConfig, workers: int = 1) -> list[SweepRow]:
    """Error rate and the three bounds at every sweep value (one shared set of draws)."""
    if config.axis is None:
        config = replace(config, axis="epsilon", values=(config.epsilon,))
    all_params = [config.params(v) for v in config.values]
    counts = count_errors(config, [sigma_hat(p) for p in all_params], workers)
    rows = []
    for value, p, c in zip(config.values, all_params, counts):
        rows.append(SweepRow(config.axis, value, p, _estimate(c, config.trials),
                             *analytic_bounds(config, p)))
    return rows
