"""Input checks shared by the estimator wrappers.

scikit-learn's ``check_array`` rejects complex input, so channel matrices and
received blocks are validated here instead.
"""

import numbers

import numpy as np

from .linalg import ShapeError


def check_channel(H):
    """Return ``H`` as a finite 2-D complex128 array."""
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim != 2:
        raise ShapeError(f"channel matrix must be 2-D, got shape {H.shape}")
    if H.size == 0:
        raise ShapeError("channel matrix is empty")
    if not np.all(np.isfinite(H)):
        raise ValueError("channel matrix contains NaN or Inf")
    return H


def check_received(Y, n_receive):
    """Coerce received vectors to shape ``(n_samples, n_receive)``.

    A single vector of length ``n_receive`` is accepted; the second return
    value tells the caller to squeeze the leading axis again.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    single = Y.ndim == 1
    if single:
        Y = Y[None, :]
    if Y.ndim != 2 or Y.shape[1] != n_receive:
        raise ShapeError(
            f"expected received vectors of length {n_receive}, got shape {Y.shape}"
        )
    if not np.all(np.isfinite(Y)):
        raise ValueError("received block contains NaN or Inf")
    return Y, single


def check_nonneg(name, value):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite nonnegative number, got {value!r}")
    return float(value)


def check_positive(name, value):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return float(value)
