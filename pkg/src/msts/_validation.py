"""Input checks for 3-d time-series arrays, in the spirit of sklearn.utils.validation."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import column_or_1d


def check_mts_array(X, *, ensure_min_samples: int = 1, name: str = "X") -> np.ndarray:
    """Return ``X`` as a float64 array of shape ``(n_samples, n_features, n_timesteps)``.

    A 2-d input is read as univariate ``(n_samples, n_timesteps)``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[:, None, :]
    if X.ndim != 3:
        raise ValueError(
            f"{name} must have shape (n_samples, n_features, n_timesteps); got {X.ndim}-d input with shape {X.shape}"
        )
    if X.shape[0] < ensure_min_samples:
        raise ValueError(f"{name} has {X.shape[0]} sample(s), at least {ensure_min_samples} required")
    if X.shape[1] == 0 or X.shape[2] == 0:
        raise ValueError(f"{name} has an empty feature or time axis: shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains NaN or infinite values")
    return X


def check_mts_X_y(X, y, **kwargs) -> tuple[np.ndarray, np.ndarray]:
    X = check_mts_array(X, **kwargs)
    y = column_or_1d(y, warn=True)
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} samples but y has {y.shape[0]}")
    return X, y
