import numpy as np
from sklearn.utils.validation import check_array


def check_bivariate(X, min_samples=2):
    """Validate a 2-column finite numeric array with at least ``min_samples`` rows."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=min_samples)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns, got {X.shape[1]}")
    return X


def check_unit_square(U, min_samples=1):
    U = check_bivariate(U, min_samples=min_samples)
    if np.any(U <= 0.0) or np.any(U >= 1.0):
        raise ValueError("pseudo-observations must lie strictly inside (0, 1)")
    return U
