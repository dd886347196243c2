"""OFDM baseband primitives: QPSK mapping, orthonormal FFT, cyclic prefix.

All functions operate on the last axis so a stack of blocks can be
processed in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class OfdmParams:
    n_fft: int = 256
    cp_len: int = 32

    def __post_init__(self):
        if not _is_pow2(self.n_fft):
            raise ValueError(f"n_fft must be a power of two, got {self.n_fft}")
        if not 0 <= self.cp_len <= self.n_fft:
            raise ValueError(f"cp_len must be in [0, n_fft], got {self.cp_len}")

    @property
    def block_len(self) -> int:
        return self.n_fft + self.cp_len


def qpsk_modulate(bits) -> np.ndarray:
    """Gray-map bit pairs (b0, b1) to ((1 - 2*b0) + 1j*(1 - 2*b1)) / sqrt(2)."""
    bits = np.asarray(bits)
    if bits.shape[-1] % 2:
        raise ValueError(f"QPSK needs an even number of bits, got {bits.shape[-1]}")
    b = bits.reshape(*bits.shape[:-1], -1, 2).astype(np.float64)
    return ((1.0 - 2.0 * b[..., 0]) + 1j * (1.0 - 2.0 * b[..., 1])) * _SQRT_HALF


def qpsk_demodulate(symbols) -> np.ndarray:
    """Hard decision. A value on a decision boundary resolves to bit 0."""
    symbols = np.asarray(symbols)
    out = np.empty(symbols.shape + (2,), dtype=np.uint8)
    out[..., 0] = symbols.real < 0
    out[..., 1] = symbols.imag < 0
    return out.reshape(*symbols.shape[:-1], -1)


def _check_fft_len(x: np.ndarray) -> None:
    if not _is_pow2(x.shape[-1]):
        raise ValueError(f"FFT length must be a power of two, got {x.shape[-1]}")


def fft(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    _check_fft_len(x)
    return np.fft.fft(x, norm="ortho")


def ifft(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    _check_fft_len(x)
    return np.fft.ifft(x, norm="ortho")


def add_cp(x, cp_len: int) -> np.ndarray:
    x = np.asarray(x)
    n = x.shape[-1]
    if not 0 <= cp_len <= n:
        raise ValueError(f"cp_len={cp_len} must lie in [0, {n}]")
    return np.concatenate([x[..., n - cp_len:], x], axis=-1)


def remove_cp(x, cp_len: int, n_fft: int | None = None) -> np.ndarray:
    """Drop the first ``cp_len`` samples and keep the next ``n_fft``.

    ``n_fft`` defaults to everything after the prefix, which inverts
    :func:`add_cp` exactly.
    """
    x = np.asarray(x)
    if cp_len < 0 or cp_len > x.shape[-1]:
        raise ValueError(f"cp_len={cp_len} out of range for length {x.shape[-1]}")
    if n_fft is None:
        return x[..., cp_len:]
    if cp_len + n_fft > x.shape[-1]:
        raise ValueError(f"buffer of {x.shape[-1]} samples too short for cp {cp_len} + N {n_fft}")
    return x[..., cp_len:cp_len + n_fft]


def ofdm_modulate(grid, params: OfdmParams) -> np.ndarray:
    grid = np.asarray(grid)
    if grid.shape[-1] != params.n_fft:
        raise ValueError(f"grid has {grid.shape[-1]} subcarriers, expected {params.n_fft}")
    return add_cp(ifft(grid), params.cp_len)


def ofdm_demodulate(block, params: OfdmParams) -> np.ndarray:
    return fft(remove_cp(block, params.cp_len, params.n_fft))
