"""Uniform sampling on the unit simplex."""

from __future__ import annotations

import numpy as np


def sample_simplex_uniform(dim: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Normalized i.i.d. unit exponentials, i.e. Dirichlet(1, ..., 1).

    With ``size`` given, returns an array of shape ``(size, dim)``.
    """
    if dim < 2:
        raise ValueError(f"simplex dimension must be at least 2, got {dim}")
    shape = (dim,) if size is None else (size, dim)
    x = rng.standard_exponential(shape)
    return x / x.sum(axis=-1, keepdims=True)
