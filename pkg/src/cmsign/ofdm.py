"""Oversampled OFDM symbol synthesis and cubic-metric style envelope statistics.

A time signal is a plain complex128 numpy array of length ``L*N``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DEFAULT_OVERSAMPLING = 4


@dataclass(frozen=True)
class SymbolFrame:
    """Frequency-domain data of one OFDM symbol."""

    data: np.ndarray
    sigma_b_sq: float
    oversampling: int = DEFAULT_OVERSAMPLING

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128).reshape(-1)
        if data.size < 1:
            raise ConfigurationError("a frame needs at least one subcarrier")
        if int(self.oversampling) < 2:
            raise ConfigurationError(f"oversampling must be >= 2, got {self.oversampling}")
        if not self.sigma_b_sq > 0:
            raise ConfigurationError("sigma_b_sq must be positive")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "oversampling", int(self.oversampling))

    @property
    def n_subcarriers(self) -> int:
        return self.data.size


@dataclass(frozen=True)
class CmParams:
    """Hardware-derived constants mapping raw cubic metric to cubic metric."""

    rcm_ref_db: float
    k_slp: float
    k_bw: float

    def __post_init__(self):
        if self.k_slp == 0:
            raise ConfigurationError("k_slp must be non-zero")


def synthesize_data(data, sigma_b_sq: float, oversampling: int = DEFAULT_OVERSAMPLING) -> np.ndarray:
    """Time samples of the symbol(s) in ``data`` via a zero-padded IFFT of size L*N.

    ``data`` may be 2-D, one frame per row.
    """
    data = np.asarray(data, dtype=np.complex128)
    n = data.shape[-1]
    size = oversampling * n
    # ifft scales by 1/size; undo that and apply 1/(sigma_b*sqrt(N))
    scale = size / np.sqrt(sigma_b_sq * n)
    return np.fft.ifft(data, n=size, axis=-1) * scale


def synthesize(frame: SymbolFrame) -> np.ndarray:
    return synthesize_data(frame.data, frame.sigma_b_sq, frame.oversampling)


def synthesize_direct(frame: SymbolFrame) -> np.ndarray:
    """Direct O(L N^2) evaluation of the subcarrier sum; reference for :func:`synthesize`."""
    n_sub = frame.n_subcarriers
    size = frame.oversampling * n_sub
    n = np.arange(size)
    k = np.arange(n_sub)
    tones = np.exp(2j * np.pi * np.outer(k, n) / size)
    return frame.data @ tones / np.sqrt(frame.sigma_b_sq * n_sub)


def power(sig) -> np.ndarray:
    """Squared magnitude ``re^2 + im^2`` of each sample."""
    sig = np.asarray(sig)
    return sig.real * sig.real + sig.imag * sig.imag


def srcm(sig) -> float | np.ndarray:
    """Mean of |s|^6 over the samples (last axis)."""
    p2 = power(sig)
    if p2.shape[-1] == 0:
        raise ValueError("empty signal")
    return np.mean(p2 * p2 * p2, axis=-1)


def srcm_db(eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise ValueError("SRCM must be positive to express in dB")
    out = 10.0 * np.log10(eta)
    return float(out) if out.ndim == 0 else out


def rcm_db(sig) -> float:
    """Raw cubic metric of a whole signal: 10 log10(mean|v|^6 / mean|v|^2 ^3)."""
    p2 = power(np.asarray(sig).reshape(-1))
    if p2.size == 0:
        raise ValueError("empty signal")
    if p2.mean() <= 0:
        raise ValueError("zero signal has no raw cubic metric")
    return pooled_rcm_db(np.mean(p2 * p2 * p2), p2.mean())


def pooled_rcm_db(mean_p6: float, mean_p2: float) -> float:
    """Raw cubic metric from pooled sample moments mean|v|^6 and mean|v|^2."""
    if mean_p2 <= 0 or mean_p6 <= 0:
        raise ValueError("pooled moments must be positive")
    return float(10.0 * np.log10(mean_p6 / mean_p2**3))


def cm_db(rcm: float, p: CmParams) -> float:
    return (rcm - p.rcm_ref_db) / p.k_slp + p.k_bw


def papr_db(sig) -> float:
    """Peak-to-average power ratio in dB."""
    p2 = power(np.asarray(sig).reshape(-1))
    return float(10.0 * np.log10(p2.max() / p2.mean()))
