"""Gray-labelled BPSK / QPSK / 16-QAM constellations and hard demapping."""

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Relative slack under which two squared distances count as a tie.
_TIE_RTOL = 1e-12


class Modulation(enum.Enum):
    BPSK = "bpsk"
    QPSK = "qpsk"
    QAM16 = "qam16"

    @property
    def bits_per_symbol(self):
        return {"bpsk": 1, "qpsk": 2, "qam16": 4}[self.value]

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "")
        aliases = {"16qam": "qam16", "qam": "qam16"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(
                f"unknown modulation {value!r}; expected one of "
                + ", ".join(m.value for m in cls)
            ) from None


@dataclass(frozen=True, eq=False)
class Constellation:
    """Points and their bit labels.

    ``labels[i]`` is the k-bit label (MSB first) of ``points[i]``; labels are
    the binary expansion of the index, so ``index == int(label, 2)``.
    """

    modulation: Modulation
    points: np.ndarray
    labels: np.ndarray

    @property
    def bits_per_symbol(self):
        return self.modulation.bits_per_symbol

    @property
    def size(self):
        return self.points.size

    @property
    def average_energy(self):
        return float(np.mean(np.abs(self.points) ** 2))

    def __len__(self):
        return self.size


# 2-bit per-axis Gray code for 16-QAM: 00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3.
_QAM16_AXIS = {0b00: 3.0, 0b01: 1.0, 0b11: -1.0, 0b10: -3.0}


def _index_labels(k):
    idx = np.arange(2**k)
    shifts = np.arange(k - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


@lru_cache(maxsize=None)
def _build(mod):
    k = mod.bits_per_symbol
    labels = _index_labels(k)
    if mod is Modulation.BPSK:
        points = np.array([1.0, -1.0], dtype=np.complex128)
    elif mod is Modulation.QPSK:
        sign = 1.0 - 2.0 * labels
        points = (sign[:, 0] + 1j * sign[:, 1]) / np.sqrt(2.0)
    else:
        re = np.array([_QAM16_AXIS[(i >> 2) & 0b11] for i in range(16)])
        im = np.array([_QAM16_AXIS[i & 0b11] for i in range(16)])
        points = (re + 1j * im) / np.sqrt(10.0)
    points = np.asarray(points, dtype=np.complex128)
    points.flags.writeable = False
    labels.flags.writeable = False
    return Constellation(mod, points, labels)


def build_constellation(mod):
    return _build(Modulation.parse(mod))


def _as_constellation(c):
    return c if isinstance(c, Constellation) else build_constellation(c)


def bits_to_indices(bits, c):
    c = _as_constellation(c)
    k = c.bits_per_symbol
    bits = np.asarray(bits)
    if bits.shape[-1] % k:
        raise ValueError(
            f"bit block length {bits.shape[-1]} is not a multiple of {k} bits/symbol"
        )
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0 or 1")
    groups = bits.reshape(bits.shape[:-1] + (-1, k)).astype(np.int64)
    weights = 1 << np.arange(k - 1, -1, -1)
    return groups @ weights


def indices_to_bits(indices, c):
    c = _as_constellation(c)
    indices = np.asarray(indices, dtype=np.int64)
    bits = c.labels[indices]
    return bits.reshape(indices.shape[:-1] + (-1,)) if indices.ndim else bits


def modulate(bits, c):
    """Map consecutive k-bit groups (last axis) to constellation points."""
    c = _as_constellation(c)
    return c.points[bits_to_indices(bits, c)]


def slice_symbols(symbols, c):
    """Index of the nearest constellation point for every symbol.

    Exact (to 1e-12 relative) distance ties go to the lowest point index.
    """
    c = _as_constellation(c)
    s = np.asarray(symbols, dtype=np.complex128)
    dre = s.real[..., None] - c.points.real
    dim = s.imag[..., None] - c.points.imag
    d = dre * dre + dim * dim
    dmin = d.min(axis=-1, keepdims=True)
    return np.argmax(d <= dmin * (1.0 + _TIE_RTOL), axis=-1)


def slice_symbol(s, c):
    return int(slice_symbols(np.complex128(s), c))


def demodulate_hard(symbols, c):
    c = _as_constellation(c)
    idx = slice_symbols(symbols, c)
    bits = c.labels[idx]
    return bits.reshape(idx.shape[:-1] + (-1,)) if idx.ndim else bits
