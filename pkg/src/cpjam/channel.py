"""Link models: UMa-style pathloss, exponential-PDP Rayleigh taps, AWGN."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

SPEED_OF_LIGHT = 2.99792458e8


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: float) -> float:
    if not p_w > 0:
        raise ValueError(f"power must be positive to express in dBm, got {p_w}")
    return 10.0 * math.log10(p_w) + 30.0


@dataclass(frozen=True)
class PathlossParams:
    fc_ghz: float = 2.0
    shadow_sigma_db: float = 4.0

    def __post_init__(self):
        if not self.fc_ghz > 0:
            raise ValueError(f"fc_ghz must be positive, got {self.fc_ghz}")
        if self.shadow_sigma_db < 0:
            raise ValueError(f"shadow_sigma_db must be >= 0, got {self.shadow_sigma_db}")


@dataclass(frozen=True)
class LinkNoise:
    n0_dbm_per_hz: float = -174.0
    bandwidth_hz: float = 3.84e6

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError(f"bandwidth_hz must be positive, got {self.bandwidth_hz}")

    @property
    def power_w(self) -> float:
        """Noise power per complex sample, N0 integrated over the sample rate."""
        return dbm_to_watts(self.n0_dbm_per_hz + 10.0 * math.log10(self.bandwidth_hz))


@dataclass(frozen=True)
class ChannelRealization:
    taps: np.ndarray
    amp_scale: float = 1.0

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=np.complex128))
        if taps.ndim != 1 or taps.size < 1:
            raise ValueError("taps must be a non-empty 1-D array")
        if not self.amp_scale > 0:
            raise ValueError(f"amp_scale must be positive, got {self.amp_scale}")
        object.__setattr__(self, "taps", taps)

    @property
    def cir_len(self) -> int:
        return self.taps.size

    @property
    def scaled_taps(self) -> np.ndarray:
        return self.amp_scale * self.taps


def pathloss_db(d_m: float, params: PathlossParams, shadow_draw_db: float = 0.0) -> float:
    """22 log10(d) + 20 log10(fc[GHz]) + 28 plus a caller-supplied shadowing term."""
    if not d_m > 0:
        raise ValueError(f"distance must be positive, got {d_m}")
    return 22.0 * math.log10(d_m) + 20.0 * math.log10(params.fc_ghz) + 28.0 + shadow_draw_db


def amplitude_from_pathloss(pl_db: float) -> float:
    return math.sqrt(10.0 ** (-pl_db / 10.0))


def exponential_pdp(cir_len: int, decay_span_db: float = 20.0) -> np.ndarray:
    """Tap powers falling ``decay_span_db`` from first to last tap, summing to one."""
    if cir_len < 1:
        raise ValueError(f"cir_len must be >= 1, got {cir_len}")
    if decay_span_db < 0:
        raise ValueError(f"decay_span_db must be >= 0, got {decay_span_db}")
    if cir_len == 1:
        return np.ones(1)
    l = np.arange(cir_len)
    p = 10.0 ** (-(decay_span_db / 10.0) * l / (cir_len - 1))
    return p / p.sum()


def draw_rayleigh_taps(cir_len: int, decay_span_db: float, rng: np.random.Generator) -> np.ndarray:
    p = exponential_pdp(cir_len, decay_span_db)
    g = rng.standard_normal(cir_len) + 1j * rng.standard_normal(cir_len)
    return g * np.sqrt(p / 2.0)


def apply_channel(x, ch: ChannelRealization) -> np.ndarray:
    """Full linear convolution with the scaled taps, along the last axis."""
    x = np.asarray(x, dtype=np.complex128)
    h = ch.scaled_taps
    if x.ndim == 1:
        return np.convolve(x, h)
    return signal.convolve(x, h.reshape((1,) * (x.ndim - 1) + (-1,)), mode="full", method="direct")


def awgn(x, noise_power_w: float, rng: np.random.Generator) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise of total variance ``noise_power_w``."""
    if noise_power_w < 0:
        raise ValueError(f"noise power must be >= 0, got {noise_power_w}")
    x = np.asarray(x, dtype=np.complex128)
    if noise_power_w == 0:
        return x.copy()
    sigma = math.sqrt(noise_power_w / 2.0)
    return x + sigma * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))


def cfr_from_taps(ch: ChannelRealization, n_fft: int) -> np.ndarray:
    # Unnormalized DFT: with the orthonormal OFDM transforms, a circular
    # convolution by h becomes a per-bin product with this response.
    if ch.cir_len > n_fft:
        raise ValueError(f"cir_len={ch.cir_len} exceeds n_fft={n_fft}")
    return np.fft.fft(ch.scaled_taps, n_fft)
