"""Input validation helpers used by estimators and numeric kernels."""

import numpy as np

from .errors import ShapeError


def as_float_array(x, name="array", ndim=None):
    """Convert to a float64 ndarray and check finiteness.

    Raises ShapeError on wrong dimensionality, ValueError on NaN/Inf.
    """
    arr = np.asarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeError(f"{name}: expected {ndim}-d array, got {arr.ndim}-d")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    return arr


def as_feature_matrix(X, name="X"):
    """2-d float64 matrix with at least one row and one column."""
    X = as_float_array(X, name, ndim=2)
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ShapeError(f"{name}: empty matrix {X.shape}")
    return X


def as_label_vector(y, n_rows=None, name="y"):
    """1-d integer 0/1 label vector, optionally length-checked against X."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError(f"{name}: expected 1-d labels, got {y.ndim}-d")
    y = y.astype(np.int64)
    if not np.isin(y, (0, 1)).all():
        raise ValueError(f"{name}: labels must be 0 or 1")
    if n_rows is not None and len(y) != n_rows:
        raise ShapeError(f"{name}: {len(y)} labels for {n_rows} rows")
    return y


def check_matching_dims(a, b, axis_a, axis_b, what):
    if a.shape[axis_a] != b.shape[axis_b]:
        raise ShapeError(
            f"{what}: {a.shape[axis_a]} does not match {b.shape[axis_b]}"
        )
