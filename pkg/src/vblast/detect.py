"""Hard-decision V-BLAST detectors: exhaustive ML, ZF, MMSE and ordered SIC.

All detectors take ``y`` of shape ``(..., nr)`` and ``h`` of shape
``(..., nr, nt)`` and work frame-by-frame over any leading batch axes.
"""

import enum
import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .linalg import ShapeError
from .modem import Constellation, build_constellation, slice_symbols

DEFAULT_ML_LIMIT = 2**20

# Upper bound on complex entries materialized per ML chunk.
_ML_CHUNK_ENTRIES = 1 << 22


class DetectorKind(enum.Enum):
    ML = "ml"
    ZF = "zf"
    MMSE = "mmse"
    ZF_SIC = "zf-sic"
    MMSE_SIC = "mmse-sic"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"unknown detector {value!r}; expected one of "
                + ", ".join(k.value for k in cls)
            ) from None

    @property
    def needs_full_column_rank(self):
        return self in (DetectorKind.ZF, DetectorKind.ZF_SIC)


class MLComplexityError(RuntimeError):
    """The ML candidate set exceeds the configured guard limit."""


@dataclass
class DetectionResult:
    symbol_indices: np.ndarray
    bits: np.ndarray
    ml_candidates_evaluated: Optional[int] = None
    sic_order: Optional[np.ndarray] = None


def _constellation(c):
    return c if isinstance(c, Constellation) else build_constellation(c)


def _check_shapes(y, h):
    h = linalg.as_complex_matrix(h)
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim < 1 or y.shape[-1] != h.shape[-2]:
        raise ShapeError(
            f"received vector length {y.shape[-1] if y.ndim else 0} "
            f"does not match {h.shape[-2]} receive antennas"
        )
    return y, h


def _result(indices, c, **meta):
    bits = c.labels[indices]
    bits = bits.reshape(indices.shape[:-1] + (-1,))
    return DetectionResult(indices, bits, **meta)


def zf_filter(h):
    return linalg.pseudo_inverse(h)


def mmse_filter(h, noise_var, es=1.0):
    if es <= 0:
        raise ValueError(f"symbol energy must be positive, got {es}")
    if noise_var < 0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    return linalg.regularized_inverse(h, noise_var / es)


def ml_candidates(c, nt):
    """All ``|A|**nt`` index vectors in lexicographic order."""
    c = _constellation(c)
    return np.array(list(itertools.product(range(c.size), repeat=nt)), dtype=np.int64)


def detect_ml(y, h, c, max_candidates=DEFAULT_ML_LIMIT):
    """Exhaustive search for ``argmin ||y - H x||^2`` over the product alphabet.

    Ties keep the lexicographically smallest index vector.
    """
    c = _constellation(c)
    y, h = _check_shapes(y, h)
    nr, nt = h.shape[-2:]
    n_cand = c.size**nt
    if n_cand > max_candidates:
        raise MLComplexityError(
            f"ML search over {c.size}^{nt} = {n_cand} candidates exceeds the "
            f"limit of {max_candidates}"
        )
    cand = ml_candidates(c, nt)
    cand_points = c.points[cand]  # (K, nt)

    batch = np.broadcast_shapes(y.shape[:-1], h.shape[:-2])
    yf = np.broadcast_to(y, batch + (nr,)).reshape(-1, nr)
    hf = np.broadcast_to(h, batch + (nr, nt)).reshape(-1, nr, nt)
    best = np.empty(yf.shape[0], dtype=np.int64)
    step = max(1, _ML_CHUNK_ENTRIES // (n_cand * nr))
    for lo in range(0, yf.shape[0], step):
        hi = lo + step
        images = hf[lo:hi] @ cand_points.T  # (b, nr, K)
        r = yf[lo:hi, :, None] - images
        metric = np.sum(r.real**2 + r.imag**2, axis=1)
        best[lo:hi] = np.argmin(metric, axis=1)
    indices = cand[best].reshape(batch + (nt,))
    return _result(indices, c, ml_candidates_evaluated=n_cand)


def _linear(y, w, c):
    x_tilde = np.einsum("...ij,...j->...i", w, y)
    return _result(slice_symbols(x_tilde, c), c)


def detect_zf(y, h, c):
    c = _constellation(c)
    y, h = _check_shapes(y, h)
    return _linear(y, zf_filter(h), c)


def detect_mmse(y, h, noise_var, es, c):
    c = _constellation(c)
    y, h = _check_shapes(y, h)
    return _linear(y, mmse_filter(h, noise_var, es), c)


def _argmin_lowest(values):
    vmin = values.min(axis=-1, keepdims=True)
    return np.argmax(values <= vmin * (1.0 + 1e-12), axis=-1)


def sic_nulling(h, noise_var, es, nulling):
    nulling = str(nulling).lower()
    if nulling == "zf":
        return zf_filter(h)
    if nulling == "mmse":
        return mmse_filter(h, noise_var, es)
    raise ValueError(f"nulling must be 'zf' or 'mmse', got {nulling!r}")


def detect_sic(y, h, noise_var, es, c, nulling="zf"):
    """Ordered successive interference cancellation.

    Each pass recomputes the nulling filter of the deflated channel, detects
    the remaining layer whose filter row has the smallest norm (lowest
    original index on ties), subtracts its contribution from ``y`` and drops
    its column.
    """
    c = _constellation(c)
    y, h = _check_shapes(y, h)
    nr, nt = h.shape[-2:]
    batch = np.broadcast_shapes(y.shape[:-1], h.shape[:-2])
    y_cur = np.array(np.broadcast_to(y, batch + (nr,)).reshape(-1, nr))
    hf = np.broadcast_to(h, batch + (nr, nt)).reshape(-1, nr, nt)
    n = hf.shape[0]
    rows = np.arange(n)

    remaining = np.tile(np.arange(nt), (n, 1))
    indices = np.empty((n, nt), dtype=np.int64)
    order = np.empty((n, nt), dtype=np.int64)
    for step in range(nt):
        h_def = np.take_along_axis(hf, remaining[:, None, :], axis=2)
        w = sic_nulling(h_def, noise_var, es, nulling)
        pick = _argmin_lowest(linalg.row_norms(w))
        layer = remaining[rows, pick]
        z = np.einsum("bj,bj->b", w[rows, pick], y_cur)
        idx = slice_symbols(z, c)
        indices[rows, layer] = idx
        order[:, step] = layer
        y_cur -= hf[rows, :, layer] * c.points[idx][:, None]
        keep = np.ones_like(remaining, dtype=bool)
        keep[rows, pick] = False
        remaining = remaining[keep].reshape(n, nt - step - 1)

    return _result(
        indices.reshape(batch + (nt,)), c, sic_order=order.reshape(batch + (nt,))
    )


def detect(kind, y, h, c, noise_var=0.0, es=1.0, max_candidates=DEFAULT_ML_LIMIT):
    kind = DetectorKind.parse(kind)
    if kind is DetectorKind.ML:
        return detect_ml(y, h, c, max_candidates=max_candidates)
    if kind is DetectorKind.ZF:
        return detect_zf(y, h, c)
    if kind is DetectorKind.MMSE:
        return detect_mmse(y, h, noise_var, es, c)
    nulling = "zf" if kind is DetectorKind.ZF_SIC else "mmse"
    return detect_sic(y, h, noise_var, es, c, nulling=nulling)
