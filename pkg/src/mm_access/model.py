"""Uplink frame generator for the media-modulation massive-access scenario.

A frame spans ``j`` slots during which device activity is constant. Each of
the ``k`` devices owns a block of ``n_t = 2**m_r`` channel columns (one per
mirror activation pattern, MAP). An active device transmits, per slot, one
unit-average-energy QAM symbol on exactly one column of its block, so the
stacked transmit matrix ``x`` is block-sparse across the frame and has
exactly one nonzero per active block per slot.

Conventions (fixed; recorded in harness CSV metadata):
  * indices are 0-based: devices 0..k-1, MAPs 0..n_t-1;
  * per symbol, the first ``m_r`` bits select the MAP as a natural-binary
    integer (MSB first), the remaining ``log2(m)`` bits select a Gray-mapped
    square-QAM point (first half of them = in-phase axis, second half =
    quadrature axis, all-zero bits = most positive level);
  * snr_db = 10*log10(1 / noise_variance) with unit-energy constellations
    and unit-variance Rayleigh channel entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class SystemConfig:
    """All scenario scalars for one simulation setup."""

    k: int = 100           # total devices
    k_a: int = 8           # active devices per frame
    m_r: int = 2           # RF mirrors per device; n_t = 2**m_r MAPs
    m: int = 4             # QAM order (square: 4, 16, ...)
    n_r: int = 50          # receive antennas
    j: int = 12            # slots per frame
    snr_db: float = 2.0
    p_th: float = 2.0      # residual-energy-decrease stopping threshold
    master_seed: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0 <= self.k_a <= self.k:
            raise ValueError(f"k_a must be in [0, k={self.k}], got {self.k_a}")
        if self.m_r < 1:
            raise ValueError(f"m_r must be >= 1, got {self.m_r}")
        bits = math.log2(self.m) if self.m >= 4 else -1
        if bits != int(bits) or int(bits) % 2 != 0:
            raise ValueError(f"m must be a square power of 4 (4, 16, ...), got {self.m}")
        if self.n_r < 1:
            raise ValueError(f"n_r must be >= 1, got {self.n_r}")
        if self.j < 1:
            raise ValueError(f"j must be >= 1, got {self.j}")
        if math.isnan(self.snr_db):
            raise ValueError("snr_db must not be NaN")
        if not self.p_th > 0:
            raise ValueError(f"p_th must be > 0, got {self.p_th}")

    @property
    def n_t(self) -> int:
        """MAPs per device (columns per device block)."""
        return 2 ** self.m_r

    @property
    def qam_bits(self) -> int:
        return int(math.log2(self.m))

    @property
    def eta(self) -> int:
        """Uplink throughput in bits per channel use: m_r + log2(m)."""
        return self.m_r + self.qam_bits

    @property
    def noise_variance(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass
class GroundTruth:
    """Transmitted frame content. Rows of inactive devices carry sentinels
    (map_index -1, zero symbols/bits)."""

    activity: np.ndarray    # (k,) int8, exactly k_a ones
    map_index: np.ndarray   # (k, j) int16, local MAP in [0, n_t) or -1
    qam_symbol: np.ndarray  # (k, j) complex128
    bits: np.ndarray        # (k, j, eta) uint8
    x: np.ndarray           # (k*n_t, j) complex128 stacked transmit matrix

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.activity)


@dataclass
class Observation:
    y: np.ndarray           # (n_r, j) complex128
    noise_variance: float


# --- bit packing -----------------------------------------------------------

def bits_to_int(bits: np.ndarray) -> np.ndarray:
    """MSB-first bit array (last axis) -> integer array."""
    bits = np.asarray(bits)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits @ weights


def int_to_bits(values: np.ndarray, width: int) -> np.ndarray:
    """Integer array -> MSB-first uint8 bit array appended as last axis."""
    values = np.asarray(values)
    shifts = np.arange(width - 1, -1, -1)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    b = np.asarray(g).copy()
    shift = 1
    while (b >> shift).any():
        b = b ^ (b >> shift)
        shift *= 2
    return b


def _binary_to_gray(n: np.ndarray) -> np.ndarray:
    n = np.asarray(n)
    return n ^ (n >> 1)


# --- Gray-mapped square QAM ------------------------------------------------

@lru_cache(maxsize=None)
def qam_constellation(m: int) -> np.ndarray:
    """Unit-average-energy constellation indexed by the Gray bit label.

    Entry ``label`` is the point transmitted for the bit word whose MSB-first
    integer value is ``label``.
    """
    half = int(math.log2(m)) // 2
    levels = 1 << half
    scale = math.sqrt(3.0 / (2.0 * (levels ** 2 - 1)))
    labels = np.arange(m)
    g_i = labels >> half
    g_q = labels & (levels - 1)
    amp = lambda g: (levels - 1 - 2 * _gray_to_binary(g)) * scale
    points = amp(g_i) + 1j * amp(g_q)
    points.flags.writeable = False  # cached array is shared across callers
    return points


def _slice_axis(x: np.ndarray, levels: int, scale: float) -> np.ndarray:
    """Nearest-level index per axis; exact midpoints go to the lower Gray label."""
    u = ((levels - 1) - np.asarray(x) / scale) / 2.0
    n_lo = np.clip(np.floor(u), 0, levels - 1).astype(np.int64)
    n_hi = np.minimum(n_lo + 1, levels - 1)
    d_lo = np.abs(u - n_lo)
    d_hi = np.abs(n_hi - u)
    tie_to_hi = (d_hi == d_lo) & (_binary_to_gray(n_hi) < _binary_to_gray(n_lo))
    return np.where((d_hi < d_lo) | tie_to_hi, n_hi, n_lo)


def qam_slice(symbols: np.ndarray, m: int) -> np.ndarray:
    """Nearest-constellation-point Gray labels for an array of noisy symbols."""
    half = int(math.log2(m)) // 2
    levels = 1 << half
    scale = math.sqrt(3.0 / (2.0 * (levels ** 2 - 1)))
    symbols = np.asarray(symbols)
    g_i = _binary_to_gray(_slice_axis(symbols.real, levels, scale))
    g_q = _binary_to_gray(_slice_axis(symbols.imag, levels, scale))
    return (g_i << half) | g_q


# --- per-symbol mapping ----------------------------------------------------

def modulate(bits: np.ndarray, cfg: SystemConfig) -> tuple[int, complex]:
    """Map one eta-bit word to (MAP index, QAM point)."""
    bits = np.asarray(bits)
    if bits.shape != (cfg.eta,):
        raise ValueError(f"expected {cfg.eta} bits, got shape {bits.shape}")
    map_index = int(bits_to_int(bits[: cfg.m_r]))
    symbol = complex(qam_constellation(cfg.m)[int(bits_to_int(bits[cfg.m_r:]))])
    return map_index, symbol


def demodulate(map_index: int, qam_estimate: complex, cfg: SystemConfig) -> np.ndarray:
    """Invert :func:`modulate` from a detected MAP and a noisy QAM estimate."""
    if not 0 <= map_index < cfg.n_t:
        raise ValueError(f"map_index must be in [0, {cfg.n_t}), got {map_index}")
    map_bits = int_to_bits(np.int64(map_index), cfg.m_r)
    qam_bits = int_to_bits(qam_slice(np.asarray(qam_estimate), cfg.m), cfg.qam_bits)
    return np.concatenate([map_bits, qam_bits])


# --- frame generation ------------------------------------------------------

def generate_activity(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Exactly k_a active devices, chosen uniformly without replacement."""
    activity = np.zeros(cfg.k, dtype=np.int8)
    if cfg.k_a > 0:
        activity[rng.choice(cfg.k, size=cfg.k_a, replace=False)] = 1
    return activity


def generate_frame_for_activity(
    cfg: SystemConfig, activity: np.ndarray, rng: np.random.Generator
) -> tuple[GroundTruth, np.ndarray, Observation]:
    """Draw bits, symbols, channel and noise for a fixed activity pattern.

    Returns ``(truth, h, obs)`` where ``h`` is the n_r x (k*n_t) aggregate
    Rayleigh channel (i.i.d. CN(0,1) entries) and ``obs.y = h @ truth.x + w``
    with ``w`` i.i.d. CN(0, noise_variance).
    """
    k, j, n_t, eta = cfg.k, cfg.j, cfg.n_t, cfg.eta
    active = np.flatnonzero(activity)

    map_index = np.full((k, j), -1, dtype=np.int16)
    qam_symbol = np.zeros((k, j), dtype=np.complex128)
    bits = np.zeros((k, j, eta), dtype=np.uint8)
    x = np.zeros((k * n_t, j), dtype=np.complex128)

    if active.size:
        bits[active] = rng.integers(0, 2, size=(active.size, j, eta), dtype=np.uint8)
        map_index[active] = bits_to_int(bits[active, :, : cfg.m_r])
        labels = bits_to_int(bits[active, :, cfg.m_r:])
        qam_symbol[active] = qam_constellation(cfg.m)[labels]
        rows = active[:, None] * n_t + map_index[active]
        x[rows.ravel(), np.tile(np.arange(j), active.size)] = qam_symbol[active].ravel()

    h = (rng.standard_normal((cfg.n_r, k * n_t)) + 1j * rng.standard_normal((cfg.n_r, k * n_t))) / np.sqrt(2)
    sigma2 = cfg.noise_variance
    w = np.sqrt(sigma2 / 2) * (rng.standard_normal((cfg.n_r, j)) + 1j * rng.standard_normal((cfg.n_r, j)))
    y = h @ x + w

    for arr in (h, x, y):
        if not np.isfinite(arr).all():
            raise FloatingPointError("non-finite entries in generated frame")

    truth = GroundTruth(activity=np.asarray(activity, dtype=np.int8), map_index=map_index,
                        qam_symbol=qam_symbol, bits=bits, x=x)
    return truth, h, Observation(y=y, noise_variance=sigma2)


def generate_frame(
    cfg: SystemConfig, rng: np.random.Generator
) -> tuple[GroundTruth, np.ndarray, Observation]:
    """Draw one complete frame: activity, data, channel, noise."""
    return generate_frame_for_activity(cfg, generate_activity(cfg, rng), rng)
