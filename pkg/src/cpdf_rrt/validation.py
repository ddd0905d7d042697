"""Input validation helpers shared by the estimators and the planner."""
from __future__ import annotations

import numbers

import numpy as np


class NotFittedError(ValueError, AttributeError):
    """Raised when a distribution is used before ``fit``."""


def check_states(X, dim=None, name="X"):
    """Return ``X`` as a finite float array of shape (n_samples, n_dims)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D (n_samples, n_dims), got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"{name} has {X.shape[1]} dimensions, expected {dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return X


def check_bounds(lower, upper):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ValueError("bounds must be 1-D arrays of equal length")
    if not np.all(upper > lower):
        raise ValueError("every upper bound must exceed its lower bound")
    return lower, upper


def check_generator(seed):
    """Turn ``None``, an int, or a Generator into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")


def check_is_fitted(estimator, attribute):
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
