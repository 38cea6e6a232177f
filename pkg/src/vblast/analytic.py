"""Closed-form reference error rates for BPSK, QPSK and 16-QAM.

The 16-QAM expressions use the constants ``1/10`` (AWGN) and ``40``
(Rayleigh) and are therefore not the textbook approximations; they are
kept verbatim so simulated curves can be compared against them.
"""

import math

import numpy as np
from scipy.special import erfc

from .modem import Modulation


def q_func(x):
    """Gaussian tail probability ``Q(x) = erfc(x / sqrt(2)) / 2``."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return out[()] if np.ndim(out) == 0 else out


def _positive(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"{name} must be positive, got {value}")
    return arr


def awgn_ser(mod, em_over_n0):
    """AWGN symbol error rate as a function of the ratio ``E_m / sigma_n^2``."""
    mod = Modulation.parse(mod)
    g = _positive("em_over_n0", em_over_n0)
    if mod is Modulation.BPSK:
        return q_func(np.sqrt(2.0 * g))
    if mod is Modulation.QPSK:
        return q_func(np.sqrt(g))
    return 0.75 * q_func(np.sqrt(g / 10.0))


def rayleigh_ber(mod, beta):
    """Average bit error probability under Rayleigh fading at mean SNR ``beta``."""
    mod = Modulation.parse(mod)
    b = _positive("beta", beta)
    if mod is Modulation.BPSK:
        out = 0.5 * (1.0 - np.sqrt(b / (b + 1.0)))
    elif mod is Modulation.QPSK:
        out = 0.5 * (1.0 - np.sqrt(b / (b + 2.0)))
    else:
        out = 0.75 * (1.0 - np.sqrt(b / (b + 40.0)))
    return out[()] if np.ndim(out) == 0 else out


def beta(eb_n0, mean_alpha_sq=1.0):
    """Fading-averaged SNR: ``E_b/N_0 * E[alpha^2]``."""
    _positive("eb_n0", eb_n0)
    _positive("mean_alpha_sq", mean_alpha_sq)
    return eb_n0 * mean_alpha_sq


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def mimo_snr_metric(h, em, noise_var):
    """Diagnostic ``0.5 * (sum_ij |h_ij|)^2 * em / noise_var``.

    Sums entry magnitudes (not powers); reported only, never used for
    detection.
    """
    h = np.asarray(h, dtype=np.complex128)
    total = np.sum(np.abs(h), axis=(-2, -1))
    return 0.5 * total**2 * em / noise_var


def analytic_curve(mod, family, eb_n0_db):
    """``[(eb_n0_db, probability), ...]`` for ``family`` in {"awgn", "rayleigh"}.

    Both families are evaluated at the per-symbol SNR ``k * E_b/N_0``
    (``k`` bits per symbol, ``E[alpha^2] = 1``), which is exact for BPSK.
    """
    mod = Modulation.parse(mod)
    family = str(getattr(family, "value", family)).lower()
    snr = mod.bits_per_symbol * db_to_linear(eb_n0_db)
    if family == "awgn":
        p = awgn_ser(mod, snr)
    elif family == "rayleigh":
        p = rayleigh_ber(mod, beta(snr, 1.0))
    else:
        raise ValueError(f"no closed form for channel family {family!r}")
    grid = np.atleast_1d(np.asarray(eb_n0_db, dtype=float))
    return list(zip(grid.tolist(), np.atleast_1d(p).tolist()))
