"""Square QAM constellations and the half constellation used for sign reservation.

Points are kept on the unnormalized odd-integer lattice; normalization by the
mean symbol energy happens at synthesis time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ConfigurationError

SCHEMES = {"qpsk": 4, "qam16": 16, "qam64": 64}


@dataclass(frozen=True)
class Constellation:
    name: str
    points: np.ndarray  # ordered by the binary value of the bit label
    bits_per_symbol: int = field(init=False)
    sigma_b_sq: float = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        pts.setflags(write=False)
        size = pts.size
        if size < 4 or size & (size - 1):
            raise ConfigurationError(f"constellation size {size} is not a power of two >= 4")
        if not _is_point_symmetric(pts):
            raise ConfigurationError("constellation is not point-symmetric")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bits_per_symbol", int(size).bit_length() - 1)
        object.__setattr__(self, "sigma_b_sq", float(np.mean(pts.real**2 + pts.imag**2)))

    @property
    def size(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class HalfConstellation:
    """One point out of every ``{y, -y}`` pair of ``parent``."""

    parent: Constellation
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def bits_per_symbol(self) -> int:
        return self.parent.bits_per_symbol - 1

    @property
    def sigma_b_sq(self) -> float:
        return self.parent.sigma_b_sq


def _is_point_symmetric(points: np.ndarray) -> bool:
    return set(points.tolist()) == set((-points).tolist())


def _gray_pam_levels(bits: int) -> np.ndarray:
    """Amplitude of each Gray label for a 2**bits level PAM axis."""
    m = 1 << bits
    levels = np.empty(m)
    for label in range(m):
        # Gray decode: position of this label along the axis
        pos, g = 0, label
        while g:
            pos ^= g
            g >>= 1
        levels[label] = 2 * pos - (m - 1)
    return levels


def build_constellation(scheme: str) -> Constellation:
    """Gray-mapped square constellation for ``scheme`` ("qpsk", "qam16" or "qam64").

    The high half of the bit label selects the in-phase level, the low half
    the quadrature level.
    """
    key = str(scheme).lower()
    if key not in SCHEMES:
        raise ConfigurationError(
            f"unsupported modulation scheme {scheme!r}; expected one of {sorted(SCHEMES)}"
        )
    size = SCHEMES[key]
    axis_bits = (size.bit_length() - 1) // 2
    levels = _gray_pam_levels(axis_bits)
    labels = np.arange(size)
    i_part = levels[labels >> axis_bits]
    q_part = levels[labels & ((1 << axis_bits) - 1)]
    return Constellation(key, i_part + 1j * q_part)


def half_constellation(c: Constellation) -> HalfConstellation:
    """Keep points with positive real part, or zero real part and positive imaginary part."""
    pts = c.points
    keep = (pts.real > 0) | ((pts.real == 0) & (pts.imag > 0))
    return HalfConstellation(c, pts[keep])


PointSet = Union[Constellation, HalfConstellation]


def map_bits(bits: Sequence[int], points: PointSet) -> complex:
    """Symbol whose index in ``points`` is the binary value of ``bits`` (MSB first)."""
    bits = list(bits)
    if len(bits) != points.bits_per_symbol:
        raise ValueError(
            f"expected {points.bits_per_symbol} bits for a {points.size}-point set, got {len(bits)}"
        )
    index = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bit values must be 0 or 1, got {b!r}")
        index = (index << 1) | int(b)
    return complex(points.points[index])


def demap_symbol(symbol: complex, points: PointSet) -> list[int]:
    """Inverse of :func:`map_bits` for an exact constellation point."""
    hits = np.flatnonzero(points.points == symbol)
    if hits.size != 1:
        raise ValueError(f"{symbol!r} is not a point of the constellation")
    index = int(hits[0])
    nbits = points.bits_per_symbol
    return [(index >> (nbits - 1 - i)) & 1 for i in range(nbits)]


def fold_to_half(symbols, half: HalfConstellation):
    """Split symbols of the parent constellation into (half-constellation symbol, sign).

    This is the receiver-side decoding of sign selection: a detected ``+-b`` maps
    back to ``b``.  Returns arrays ``(c, x)`` with ``symbols == c * x``.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    inside = np.isin(symbols, half.points)
    flipped = np.isin(-symbols, half.points)
    if not np.all(inside | flipped):
        raise ValueError("symbols are not all points of the parent constellation")
    signs = np.where(inside, 1, -1).astype(np.int8)
    return symbols * signs, signs


def rate_loss(n_s: int, n: int, m_size: int) -> float:
    """Fraction of the data rate spent on ``n_s`` reserved sign bits out of ``n`` symbols."""
    if n <= 0:
        raise ValueError("number of subcarriers must be positive")
    if not 0 <= n_s <= n:
        raise ValueError(f"reserved sign count {n_s} outside [0, {n}]")
    if m_size < 4 or m_size & (m_size - 1):
        raise ValueError(f"constellation size {m_size} is not a power of two >= 4")
    return (n_s / n) / np.log2(m_size)
