"""Seeded Monte Carlo BER/SER/FER engine.

Energy convention: every transmit antenna sends unit-energy symbols
(``E_s = 1``), the SNR axis is ``E_b/N_0`` per stream and the complex noise
variance per receive antenna is ``N_0 = E_s / (k * 10**(dB/10))``.

One frame is one transmitted vector of ``nt`` symbols through a fresh
channel realization (quasi-static fading).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import analytic
from .channel import ChannelFamily, ChannelSpec, RngStream, draw_channel, transmit
from .detect import DEFAULT_ML_LIMIT, DetectorKind, detect
from .modem import Modulation, bits_to_indices, build_constellation

_Z95 = 1.959963984540054
_FIRST_BATCH = 1024


class ConfigError(ValueError):
    """A simulation configuration is invalid or internally inconsistent."""


def snr_to_noise_var(eb_n0_db, modulation, nt=1):
    """Complex noise variance per receive antenna for a given ``E_b/N_0`` in dB.

    ``nt`` does not enter: ``E_b`` is counted per stream, so each antenna's
    symbol energy ``E_s = 1`` carries ``k`` bits.
    """
    k = Modulation.parse(modulation).bits_per_symbol
    return 1.0 / (k * 10.0 ** (float(eb_n0_db) / 10.0))


def wilson_interval(errors, trials, z=_Z95):
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class SimConfig:
    nt: int = 1
    nr: int = 1
    modulation: Modulation = Modulation.BPSK
    detector: DetectorKind = DetectorKind.ZF
    channel: ChannelFamily = ChannelFamily.RAYLEIGH
    rician_k: float = 0.0
    snr_db_grid: tuple = (0.0,)
    min_bit_errors: int = 200
    max_frames: int = 2_000_000
    seed: int = 0
    workers: int = 1
    noiseless: bool = False
    max_candidates: int = DEFAULT_ML_LIMIT
    batch_frames: int = 65536

    def __post_init__(self):
        try:
            object.__setattr__(self, "modulation", Modulation.parse(self.modulation))
            object.__setattr__(self, "detector", DetectorKind.parse(self.detector))
            object.__setattr__(self, "channel", ChannelFamily.parse(self.channel))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(
            self, "snr_db_grid", tuple(float(s) for s in np.atleast_1d(self.snr_db_grid))
        )
        self.validate()

    def validate(self):
        if self.nt < 1 or self.nr < 1:
            raise ConfigError(f"nt and nr must be >= 1 (got nt={self.nt}, nr={self.nr})")
        grid = self.snr_db_grid
        if not grid:
            raise ConfigError("SNR grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("SNR grid must be strictly ascending")
        if not all(math.isfinite(s) for s in grid):
            raise ConfigError("SNR grid values must be finite")
        if self.detector.needs_full_column_rank and self.nr < self.nt:
            raise ConfigError(
                f"detector {self.detector.value} requires nr >= nt "
                f"(got nt={self.nt}, nr={self.nr})"
            )
        if self.channel is ChannelFamily.FIXED_IDENTITY and self.nr != self.nt:
            raise ConfigError("awgn (identity) channel requires nr == nt")
        if self.min_bit_errors < 1 or self.max_frames < 1:
            raise ConfigError("min_bit_errors and max_frames must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not (math.isfinite(self.rician_k) and self.rician_k >= 0):
            raise ConfigError("rician_k must be finite and >= 0")
        if self.detector is DetectorKind.ML:
            n_cand = (2**self.modulation.bits_per_symbol) ** self.nt
            if n_cand > self.max_candidates:
                raise ConfigError(
                    f"ML needs {n_cand} candidates, above the limit {self.max_candidates}"
                )

    @property
    def channel_spec(self):
        return ChannelSpec(self.channel, self.nr, self.nt, self.rician_k)


@dataclass
class PointResult:
    snr_db: float
    frames: int = 0
    bits: int = 0
    bit_errors: int = 0
    symbol_errors: int = 0
    frame_errors: int = 0
    ber: float = 0.0
    ser: float = 0.0
    fer: float = 0.0
    ci95_low: float = 0.0
    ci95_high: float = 1.0
    analytic_ref: Optional[float] = None
    noise_var: float = 0.0


@dataclass
class SweepResult:
    config: SimConfig
    points: list = field(default_factory=list)

    @property
    def metadata(self):
        return {
            "seed": self.config.seed,
            "workers": self.config.workers,
            "reproducible_given": "(config, seed, workers)",
        }

    def as_dicts(self):
        return [asdict(p) for p in self.points]


def analytic_reference(cfg, snr_db):
    """Closed-form BER for configurations where one applies, else ``None``.

    The identity channel decouples the streams, so the AWGN expression holds
    for any ``nt == nr``; the Rayleigh expression only for a 1x1 link.
    """
    if cfg.channel is ChannelFamily.FIXED_IDENTITY:
        family = "awgn"
    elif cfg.channel is ChannelFamily.RAYLEIGH and cfg.nt == cfg.nr == 1:
        family = "rayleigh"
    else:
        return None
    return analytic.analytic_curve(cfg.modulation, family, snr_db)[0][1]


def _run_block(cfg, snr_db, stream_id, min_errors, max_frames):
    # Returns raw counters (frames, bits, bit_errors, symbol_errors, frame_errors).
    rng = RngStream(cfg.seed, stream_id)
    c = build_constellation(cfg.modulation)
    k = c.bits_per_symbol
    spec = cfg.channel_spec
    noise_var = 0.0 if cfg.noiseless else snr_to_noise_var(snr_db, cfg.modulation, cfg.nt)

    frames = bit_errors = symbol_errors = frame_errors = 0
    batch = min(_FIRST_BATCH, cfg.batch_frames)
    while frames < max_frames and bit_errors < min_errors:
        b = min(batch, max_frames - frames)
        tx_bits = rng.bits((b, cfg.nt * k))
        tx_idx = bits_to_indices(tx_bits, c)
        h = draw_channel(spec, rng, size=b)
        y = transmit(h, c.points[tx_idx], noise_var, rng)
        res = detect(
            cfg.detector, y, h, c, noise_var=noise_var, es=1.0,
            max_candidates=cfg.max_candidates,
        )
        sym_err = np.count_nonzero(res.symbol_indices != tx_idx, axis=1)
        bit_errors += int(np.count_nonzero(res.bits != tx_bits))
        symbol_errors += int(sym_err.sum())
        frame_errors += int(np.count_nonzero(sym_err))
        frames += b
        batch = min(2 * batch, cfg.batch_frames)
    return np.array(
        [frames, frames * cfg.nt * k, bit_errors, symbol_errors, frame_errors],
        dtype=np.int64,
    )


def _finish(cfg, snr_db, counts):
    frames, bits, bit_errors, symbol_errors, frame_errors = (int(v) for v in counts)
    lo, hi = wilson_interval(bit_errors, bits)
    return PointResult(
        snr_db=float(snr_db),
        frames=frames,
        bits=bits,
        bit_errors=bit_errors,
        symbol_errors=symbol_errors,
        frame_errors=frame_errors,
        ber=bit_errors / bits,
        ser=symbol_errors / (frames * cfg.nt),
        fer=frame_errors / frames,
        ci95_low=lo,
        ci95_high=hi,
        analytic_ref=analytic_reference(cfg, snr_db),
        noise_var=0.0 if cfg.noiseless else snr_to_noise_var(snr_db, cfg.modulation, cfg.nt),
    )


def run_point(cfg, snr_db):
    """Simulate one SNR point on stream 0 until ``min_bit_errors`` or ``max_frames``."""
    cfg.validate()
    counts = _run_block(cfg, snr_db, 0, cfg.min_bit_errors, cfg.max_frames)
    return _finish(cfg, snr_db, counts)


def _split(total, parts):
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def partition_and_merge(cfg, snr_db, workers=None):
    """Split the point's budget into ``workers`` blocks and sum their counters.

    Block ``i`` uses stream ``i``, ``max_frames // workers`` frames (the
    remainder goes to the first blocks) and ``ceil(min_bit_errors / workers)``
    error target. Merging is in block order, so the result depends on
    ``(config, seed, workers)`` only, not on scheduling.
    """
    cfg.validate()
    workers = cfg.workers if workers is None else int(workers)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    if workers == 1:
        return run_point(cfg, snr_db)
    frame_budget = _split(cfg.max_frames, workers)
    min_errors = -(-cfg.min_bit_errors // workers)
    jobs = [
        (cfg, snr_db, i, min_errors, frame_budget[i])
        for i in range(workers)
        if frame_budget[i] > 0
    ]
    with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
        blocks = list(pool.map(lambda a: _run_block(*a), jobs))
    return _finish(cfg, snr_db, np.sum(blocks, axis=0))


def run_sweep(cfg):
    cfg.validate()
    result = SweepResult(cfg)
    for snr_db in cfg.snr_db_grid:
        result.points.append(partition_and_merge(cfg, snr_db, cfg.workers))
    return result
