"""Flat-fading MIMO channels, AWGN, and the envelope densities.

Realizations are drawn from an :class:`RngStream`, a seeded counter-based
generator; ``(seed, stream_id)`` pins down every sample.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .linalg import ShapeError, as_complex_matrix


class ChannelFamily(enum.Enum):
    FIXED_IDENTITY = "awgn"
    RAYLEIGH = "rayleigh"
    RICIAN = "rician"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"identity": "awgn", "fixedidentity": "awgn", "fixed_identity": "awgn"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(
                f"unknown channel family {value!r}; expected awgn, rayleigh or rician"
            ) from None


class RngStream:
    """Independent, reproducible random stream keyed by ``(seed, stream_id)``."""

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        if not (0 <= self.seed < 2**64 and 0 <= self.stream_id < 2**64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def bits(self, shape):
        return self.generator.integers(0, 2, size=shape, dtype=np.uint8)

    def complex_normal(self, shape, variance=1.0):
        """Circularly-symmetric CN(0, variance) samples."""
        z = self.generator.standard_normal(size=tuple(np.atleast_1d(shape)) + (2,))
        z *= math.sqrt(variance / 2.0)
        return z[..., 0] + 1j * z[..., 1]


@dataclass(frozen=True)
class ChannelSpec:
    family: ChannelFamily = ChannelFamily.RAYLEIGH
    nr: int = 1
    nt: int = 1
    rician_k: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", ChannelFamily.parse(self.family))
        if int(self.nr) < 1 or int(self.nt) < 1:
            raise ValueError(f"antenna counts must be >= 1, got nr={self.nr}, nt={self.nt}")
        if not (math.isfinite(self.rician_k) and self.rician_k >= 0):
            raise ValueError(f"rician_k must be finite and >= 0, got {self.rician_k}")
        if self.family is ChannelFamily.FIXED_IDENTITY and self.nr != self.nt:
            raise ShapeError(
                f"identity channel needs nr == nt, got nr={self.nr}, nt={self.nt}"
            )


def draw_channel(spec, rng, size=None):
    """Draw one ``(nr, nt)`` channel, or ``size`` of them stacked on axis 0.

    Rayleigh entries are i.i.d. CN(0, 1). Rician is
    ``sqrt(K/(K+1)) * ones + sqrt(1/(K+1)) * W`` with ``W`` Rayleigh, so
    ``E|h|^2 = 1`` for every K and ``K = 0`` reproduces the Rayleigh draw.
    """
    shape = (spec.nr, spec.nt) if size is None else (int(size), spec.nr, spec.nt)
    if spec.family is ChannelFamily.FIXED_IDENTITY:
        return np.broadcast_to(np.eye(spec.nr, dtype=np.complex128), shape).copy()
    w = rng.complex_normal(shape)
    if spec.family is ChannelFamily.RAYLEIGH:
        return w
    k = float(spec.rician_k)
    los = math.sqrt(k / (k + 1.0))
    scatter = math.sqrt(1.0 / (k + 1.0))
    return los * np.ones(shape) + scatter * w


def transmit(h, x, noise_var, rng):
    """``y = H x + n`` with ``n ~ CN(0, noise_var)`` per receive antenna."""
    h = as_complex_matrix(h)
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[-1] != h.shape[-1]:
        raise ShapeError(f"x has {x.shape[-1]} entries but H has {h.shape[-1]} columns")
    if noise_var < 0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    y = np.einsum("...ij,...j->...i", h, x)
    if noise_var > 0:
        y = y + rng.complex_normal(y.shape, noise_var)
    return y


def rayleigh_pdf(r, phi_sq):
    """Rayleigh envelope density ``r/phi^2 * exp(-r^2 / (2 phi^2))``."""
    r = np.asarray(r, dtype=float)
    if phi_sq <= 0:
        raise ValueError(f"phi_sq must be positive, got {phi_sq}")
    if np.any(r < 0):
        raise ValueError("rayleigh_pdf is defined for r >= 0")
    out = r / phi_sq * np.exp(-(r * r) / (2.0 * phi_sq))
    return out[()] if out.ndim == 0 else out


def gaussian_pdf(r, mean, phi_sq):
    """Large-K Rician approximation: normal density with mean A, variance phi^2."""
    if phi_sq <= 0:
        raise ValueError(f"phi_sq must be positive, got {phi_sq}")
    r = np.asarray(r, dtype=float)
    out = np.exp(-((r - mean) ** 2) / (2.0 * phi_sq)) / math.sqrt(2.0 * math.pi * phi_sq)
    return out[()] if out.ndim == 0 else out


def density_table(family, r_grid, phi_sq=1.0, mean=0.0):
    """Tabulate ``(r, f(r))`` for ``family`` in {"rayleigh", "gaussian"}."""
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size > 1 and np.any(np.diff(r_grid) <= 0):
        raise ValueError("r_grid must be strictly ascending")
    family = str(family).lower()
    if family == "rayleigh":
        f = rayleigh_pdf(r_grid, phi_sq)
    elif family == "gaussian":
        f = gaussian_pdf(r_grid, mean, phi_sq)
    else:
        raise ValueError(f"unknown density family {family!r}")
    return list(zip(r_grid.tolist(), np.atleast_1d(f).tolist()))
