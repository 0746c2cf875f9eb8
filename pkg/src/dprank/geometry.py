"""Geometry of the rank simplex under a positional rule.

For a unit normal ``beta`` with zero coordinate sum, the signed distance
``beta . v`` of a uniform simplex point has the Curry-Schoenberg density: the
normalized B-spline with knots at the coordinates of ``beta``.  It is
evaluated with the Cox-de Boor recursion, which handles repeated knots
(confluent divided differences) without perturbation.  Slice volumes follow
by multiplying with the simplex volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import InvalidPairError, UnsupportedError
from .ranking import PositionalRule, score_matrix
from .sampling import sample_simplex_uniform

EXACT_MAX_DIM = 720  # 6!
GRID_POINTS = 512
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Hyperplane:
    """Score-equality surface through the simplex centroid, as a unit normal."""

    normal: np.ndarray
    pair: tuple | None = None

    def __post_init__(self):
        beta = np.array(self.normal, dtype=np.float64)
        norm = np.linalg.norm(beta)
        if beta.ndim != 1 or norm == 0:
            raise ValueError("normal must be a non-zero vector")
        beta = beta / norm
        if abs(beta.sum()) > 1e-9:
            raise ValueError("normal must be parallel to the simplex (zero coordinate sum)")
        beta.setflags(write=False)
        object.__setattr__(self, "normal", beta)

    @property
    def dim(self) -> int:
        return self.normal.size

    @property
    def support(self) -> tuple[float, float]:
        return float(self.normal.min()), float(self.normal.max())


def hyperplane_coefficients(rule: PositionalRule, i: int, j: int) -> np.ndarray:
    """Unnormalized ``row_i - row_j`` of the score matrix (``S_i - S_j = 0``)."""
    M = rule.M
    if i == j:
        raise InvalidPairError(f"hyperplane needs two distinct candidates, got ({i}, {j})")
    if not (0 <= i < M and 0 <= j < M):
        raise InvalidPairError(f"candidates ({i}, {j}) out of range for M={M}")
    S = score_matrix(rule)
    return S[i] - S[j]


def hyperplane(rule: PositionalRule, i: int, j: int) -> Hyperplane:
    return Hyperplane(hyperplane_coefficients(rule, i, j), (i, j))


def signed_distance(v, h: Hyperplane):
    """``beta . v``; works on a single point or a batch of rows."""
    w = getattr(v, "weights", v)
    return np.asarray(w, dtype=np.float64) @ h.normal


def simplex_volume(dim: int) -> float:
    """(dim-1)-volume of the unit simplex in R^dim: sqrt(dim) / (dim-1)!."""
    return math.exp(0.5 * math.log(dim) - math.lgamma(dim))


def projection_density(beta, x) -> np.ndarray:
    """Density of ``beta . v`` for ``v`` uniform on the simplex in R^len(beta).

    Normalized B-spline (M-spline) of degree ``n-2`` on the sorted knots.
    """
    t = np.sort(np.asarray(beta, dtype=np.float64))
    n = t.size
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    span = t[-1] - t[0]
    if span <= 0:
        raise ValueError("knots must not all coincide")
    # degree 0: indicators of [t_i, t_{i+1})
    B = ((t[:-1, None] <= x) & (x < t[1:, None])).astype(np.float64)
    for d in range(1, n - 1):
        left = t[d:n - 1] - t[:n - 1 - d]
        right = t[d + 1:] - t[1:n - d]
        with np.errstate(divide="ignore", invalid="ignore"):
            wl = np.where(left[:, None] > 0, (x - t[:n - 1 - d, None]) / left[:, None], 0.0)
            wr = np.where(right[:, None] > 0, (t[d + 1:, None] - x) / right[:, None], 0.0)
        B = wl * B[:-1] + wr * B[1:]
    return (n - 1) / span * B[0]


def cross_section_volume(h: Hyperplane, offset) -> np.ndarray | float:
    """(dim-2)-volume of ``{v in simplex : beta . v = offset}``."""
    if h.dim > EXACT_MAX_DIM:
        raise UnsupportedError(f"exact slicing is limited to {EXACT_MAX_DIM} coordinates, got {h.dim}")
    scalar = np.ndim(offset) == 0
    vol = projection_density(h.normal, offset) * simplex_volume(h.dim)
    return float(vol[0]) if scalar else vol


def max_central_slice_volume(dim: int) -> float:
    """Largest slice through the centroid: sqrt(dim) / (sqrt(2) (dim-2)!)."""
    return math.exp(0.5 * math.log(dim) - math.lgamma(dim - 1)) / SQRT2


def central_density_cap(M: int) -> float:
    """Upper bound (M!-1)/sqrt(2) on the distance density at 0."""
    return (math.factorial(M) - 1) / SQRT2


def mc_slab_volume(h: Hyperplane, offsets, samples: int = 10**7, width: float = 1e-3,
                   seed: int = 0, chunk: int = 10**6):
    """Monte Carlo slice volume: slab hit fraction / width * simplex volume.

    Returns ``(estimate, stderr)`` arrays over ``offsets``.  Chunk ``c`` draws
    from stream ``c`` of ``seed``.
    """
    from .privacy import stream

    offsets = np.atleast_1d(np.asarray(offsets, dtype=np.float64))
    hits = np.zeros(offsets.size, dtype=np.int64)
    done = 0
    c = 0
    while done < samples:
        m = min(chunk, samples - done)
        d = sample_simplex_uniform(h.dim, stream(seed, c), size=m) @ h.normal
        hits += (np.abs(d[:, None] - offsets[None, :]) < width / 2).sum(axis=0)
        done += m
        c += 1
    frac = hits / samples
    vol = simplex_volume(h.dim)
    est = frac / width * vol
    se = np.sqrt(frac * (1 - frac) / samples) / width * vol
    return est, se


@dataclass(frozen=True)
class DistanceDensity:
    """Density of the signed distance to one score-equality hyperplane.

    ``grid`` covers ``[0, max beta]``; the density vanishes beyond it and is
    symmetric about 0.
    """

    rule: PositionalRule
    hyperplane: Hyperplane
    grid: np.ndarray
    values: np.ndarray
    exact: bool
    stderr: np.ndarray | None = field(default=None)

    def __call__(self, l):
        l = np.abs(np.asarray(l, dtype=np.float64))
        if self.exact:
            out = projection_density(self.hyperplane.normal, l)
            return float(out[0]) if np.ndim(l) == 0 else out
        return np.interp(l, self.grid, self.values, right=0.0)

    @property
    def support(self) -> tuple[float, float]:
        return self.hyperplane.support

    def at_zero(self) -> float:
        return float(self(0.0))

    def half_mass(self) -> float:
        """Simpson integral of the density over ``[0, sqrt(2)]``."""
        return float(simpson(self.values, x=self.grid))

    def rows(self):
        return zip(self.grid.tolist(), self.values.tolist())


def _mc_density(h: Hyperplane, grid: np.ndarray, samples: int, seed: int, chunk: int = 2000):
    """Histogram estimate of the folded distance density on ``grid`` bins."""
    from .privacy import stream

    step = grid[1] - grid[0]
    edges = np.concatenate([[0.0], (grid[:-1] + grid[1:]) / 2, [grid[-1] + step / 2]])
    counts = np.zeros(grid.size, dtype=np.int64)
    done, c = 0, 0
    while done < samples:
        m = min(chunk, samples - done)
        d = np.abs(sample_simplex_uniform(h.dim, stream(seed, c), size=m) @ h.normal)
        counts += np.histogram(d, bins=edges)[0]
        done += m
        c += 1
    widths = np.diff(edges)
    frac = counts / samples
    # folded onto [0, inf): halve to get the two-sided density
    values = frac / widths / 2
    stderr = np.sqrt(frac * (1 - frac) / samples) / widths / 2
    return values, stderr


def distance_density(rule: PositionalRule, pair: tuple = (0, 1), points: int = GRID_POINTS,
                     samples: int = 100_000, seed: int = 0) -> DistanceDensity:
    """Tabulate the distance density for ``pair`` on ``points`` grid nodes.

    Exact for M <= 6; larger M falls back to a Monte Carlo histogram with
    per-node standard errors.
    """
    h = hyperplane(rule, *pair)
    grid = np.linspace(0.0, h.support[1], points)
    if h.dim <= EXACT_MAX_DIM:
        values = projection_density(h.normal, grid)
        return DistanceDensity(rule, h, grid, values, True)
    values, stderr = _mc_density(h, grid, samples, seed)
    return DistanceDensity(rule, h, grid, values, False, stderr)
