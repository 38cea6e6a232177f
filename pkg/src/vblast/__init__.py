"""V-BLAST MIMO detection: ML, ZF, MMSE and ordered SIC receivers, closed-form
reference error rates, and a seeded Monte Carlo BER simulator."""

from .analytic import awgn_ser, beta, mimo_snr_metric, q_func, rayleigh_ber
from .channel import ChannelFamily, ChannelSpec, RngStream, draw_channel, transmit
from .detect import (
    DetectionResult,
    DetectorKind,
    MLComplexityError,
    detect_ml,
    detect_mmse,
    detect_sic,
    detect_zf,
)
from .estimators import (
    MLDetector,
    MMSEDetector,
    SICDetector,
    ZeroForcingDetector,
    make_detector,
)
from .linalg import RankDeficientError, ShapeError, SingularMatrixError
from .modem import Constellation, Modulation, build_constellation, demodulate_hard, modulate
from .sim import ConfigError, SimConfig, run_point, run_sweep

__version__ = "0.1.0"
