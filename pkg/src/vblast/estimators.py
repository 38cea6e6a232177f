"""scikit-learn style wrappers around the detectors.

``fit`` takes the (perfectly known) channel matrix ``H`` of shape
``(nr, nt)`` and precomputes whatever depends on it alone; ``predict`` then
maps received vectors, one per row of ``Y``, to constellation indices of
shape ``(n_samples, nt)``.

>>> import numpy as np
>>> det = ZeroForcingDetector(modulation="bpsk").fit(2 * np.eye(2))
>>> det.predict([[2.0, -2.0]]).tolist()
[[0, 1]]
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .detect import (
    DEFAULT_ML_LIMIT,
    DetectorKind,
    MLComplexityError,
    detect_sic,
    ml_candidates,
    mmse_filter,
    zf_filter,
)
from ._validation import check_channel, check_nonneg, check_positive, check_received
from .modem import build_constellation, slice_symbols


class _DetectorBase(BaseEstimator):
    def fit(self, H, y=None):
        H = check_channel(H)
        self.constellation_ = build_constellation(self.modulation)
        self.channel_ = H
        self.n_receive_, self.n_transmit_ = H.shape
        self._fit_channel(H)
        return self

    def _fit_channel(self, H):
        pass

    def _decide(self, Y):
        raise NotImplementedError

    def predict(self, Y):
        """Constellation indices, shape ``(n_samples, nt)`` (or ``(nt,)``)."""
        check_is_fitted(self, "channel_")
        Y, single = check_received(Y, self.n_receive_)
        indices = self._decide(Y)
        return indices[0] if single else indices

    def predict_symbols(self, Y):
        return self.constellation_.points[self.predict(Y)]

    def predict_bits(self, Y):
        idx = self.predict(Y)
        bits = self.constellation_.labels[idx]
        return bits.reshape(idx.shape[:-1] + (-1,))

    def score(self, Y, indices):
        """Fraction of correctly detected symbols."""
        return float(np.mean(self.predict(Y) == np.asarray(indices)))


class _LinearDetector(TransformerMixin, _DetectorBase):
    def transform(self, Y):
        """Equalized soft estimates ``W y`` for each received row."""
        check_is_fitted(self, "filter_")
        Y, single = check_received(Y, self.n_receive_)
        est = Y @ self.filter_.T
        return est[0] if single else est

    def _decide(self, Y):
        return slice_symbols(Y @ self.filter_.T, self.constellation_)


class ZeroForcingDetector(_LinearDetector):
    """Pseudo-inverse equalizer followed by per-stream slicing.

    Parameters
    ----------
    modulation : {"bpsk", "qpsk", "qam16"}, default="qpsk"

    Attributes
    ----------
    filter_ : ndarray of shape (nt, nr)
        ``(H^H H)^{-1} H^H``.
    """

    def __init__(self, modulation="qpsk"):
        self.modulation = modulation

    def _fit_channel(self, H):
        self.filter_ = zf_filter(H)


class MMSEDetector(_LinearDetector):
    """Linear MMSE equalizer ``(noise_var/es I + H^H H)^{-1} H^H``.

    Parameters
    ----------
    modulation : {"bpsk", "qpsk", "qam16"}, default="qpsk"
    noise_var : float, default=0.0
        Complex noise variance per receive antenna. Zero gives ZF.
    es : float, default=1.0
        Average symbol energy per transmit antenna.
    """

    def __init__(self, modulation="qpsk", noise_var=0.0, es=1.0):
        self.modulation = modulation
        self.noise_var = noise_var
        self.es = es

    def _fit_channel(self, H):
        noise_var = check_nonneg("noise_var", self.noise_var)
        es = check_positive("es", self.es)
        self.filter_ = mmse_filter(H, noise_var, es)


class MLDetector(_DetectorBase):
    """Exhaustive maximum-likelihood search over all ``|A|**nt`` vectors.

    ``fit`` precomputes the noiseless image ``H x`` of every candidate so
    repeated ``predict`` calls only measure distances.
    """

    def __init__(self, modulation="qpsk", max_candidates=DEFAULT_ML_LIMIT):
        self.modulation = modulation
        self.max_candidates = max_candidates

    def _fit_channel(self, H):
        c = self.constellation_
        n_cand = c.size ** H.shape[1]
        if n_cand > self.max_candidates:
            raise MLComplexityError(
                f"{n_cand} candidates exceed max_candidates={self.max_candidates}"
            )
        self.candidates_ = ml_candidates(c, H.shape[1])
        self.images_ = H @ c.points[self.candidates_].T  # (nr, K)

    def _decide(self, Y):
        r = Y[:, :, None] - self.images_[None]
        metric = np.sum(r.real**2 + r.imag**2, axis=1)
        return self.candidates_[np.argmin(metric, axis=1)]


class SICDetector(_DetectorBase):
    """Ordered successive interference cancellation with ZF or MMSE nulling.

    The detection order depends on ``H`` and ``noise_var / es`` only and is
    exposed after ``fit`` as ``order_``.
    """

    def __init__(self, modulation="qpsk", nulling="zf", noise_var=0.0, es=1.0):
        self.modulation = modulation
        self.nulling = nulling
        self.noise_var = noise_var
        self.es = es

    def _fit_channel(self, H):
        if self.nulling not in ("zf", "mmse"):
            raise ValueError(f"nulling must be 'zf' or 'mmse', got {self.nulling!r}")
        check_nonneg("noise_var", self.noise_var)
        check_positive("es", self.es)
        probe = np.zeros(H.shape[0], dtype=np.complex128)
        self.order_ = self._run(probe[None, :], H).sic_order[0]

    def _run(self, Y, H=None):
        H = self.channel_ if H is None else H
        return detect_sic(
            Y, H, self.noise_var, self.es, self.constellation_, nulling=self.nulling
        )

    def _decide(self, Y):
        return self._run(Y).symbol_indices


_KINDS = {
    DetectorKind.ML: lambda m, nv, es: MLDetector(m),
    DetectorKind.ZF: lambda m, nv, es: ZeroForcingDetector(m),
    DetectorKind.MMSE: lambda m, nv, es: MMSEDetector(m, nv, es),
    DetectorKind.ZF_SIC: lambda m, nv, es: SICDetector(m, "zf", nv, es),
    DetectorKind.MMSE_SIC: lambda m, nv, es: SICDetector(m, "mmse", nv, es),
}


def make_detector(kind, modulation="qpsk", noise_var=0.0, es=1.0):
    """Unfitted estimator for a :class:`~vblast.detect.DetectorKind`."""
    return _KINDS[DetectorKind.parse(kind)](modulation, noise_var, es)
