"""Sign selection by the method of conditional expectations.

Two closed-form rules are provided (both derived from the third moment of a
non-central chi-square with two degrees of freedom):

* ``RuleVariant.ALG1_PRINTED`` evaluates the polynomial
  ``|p|^6 + 18|p|^4 + 72|p|^2`` directly on the unnormalized partial sums.
* ``RuleVariant.CHI2_SCALED`` evaluates it on the non-centrality parameters
  ``lambda = |E s(n)|^2 / sigma_s^2`` with ``sigma_s^2 = (1 - j/N) / 2``.

:func:`exact_ce_reduce` computes the conditional expectations themselves,
exhaustively or by sample averages, and serves as a reference for both.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

import numba
import numpy as np

from .constellation import HalfConstellation
from .errors import CapacityError, ConfigurationError
from .ofdm import DEFAULT_OVERSAMPLING, power, srcm

EXACT_CE_MAX_SIGNS = 16
# rows * samples held at once during enumeration
_ENUM_BLOCK = 1 << 21


class RuleVariant(enum.Enum):
    ALG1_PRINTED = "alg1"
    CHI2_SCALED = "chi2"

    @classmethod
    def parse(cls, value) -> "RuleVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(
                f"unknown rule variant {value!r}; expected 'alg1' or 'chi2'"
            ) from None


@dataclass(frozen=True)
class SignProblem:
    """Data symbols ``c`` whose entries from index ``n_f`` on have selectable signs."""

    c: np.ndarray
    n_f: int = 0
    oversampling: int = DEFAULT_OVERSAMPLING
    sigma_b_sq: float = 1.0
    half: Optional[HalfConstellation] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.complex128).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if c.size < 1:
            raise ConfigurationError("sign problem needs at least one symbol")
        if not 0 <= self.n_f <= c.size:
            raise ConfigurationError(f"n_f={self.n_f} outside [0, {c.size}]")
        if self.oversampling < 2:
            raise ConfigurationError(f"oversampling must be >= 2, got {self.oversampling}")
        if not self.sigma_b_sq > 0:
            raise ConfigurationError("sigma_b_sq must be positive")
        if self.half is not None and not np.all(np.isin(c[self.n_f:], self.half.points)):
            raise ConfigurationError("selectable symbols must belong to the half constellation")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def n_selectable(self) -> int:
        return self.c.size - self.n_f

    @property
    def n_samples(self) -> int:
        return self.oversampling * self.c.size

    @property
    def norm(self) -> float:
        """Amplitude normalization ``1/(sigma_b sqrt(N))``."""
        return 1.0 / np.sqrt(self.sigma_b_sq * self.c.size)


@dataclass(frozen=True)
class DecisionTrace:
    """Per-iteration history of a sign-selection run.

    ``expectation`` holds the conditional expectation after each decision for
    exact runs and is NaN for closed-form rules.
    """

    index: np.ndarray
    statistic: np.ndarray
    sign: np.ndarray
    expectation: np.ndarray

    def __len__(self) -> int:
        return self.index.size


@dataclass(frozen=True)
class ReductionOutcome:
    signs: np.ndarray
    trace: DecisionTrace
    signal: np.ndarray
    initial_expectation: float = float("nan")

    @property
    def eta(self) -> float:
        return float(srcm(self.signal))


def unit_roots(size: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(size) / size)


def tone(k: int, size: int) -> np.ndarray:
    """``exp(j 2 pi k n / size)`` for ``n = 0..size-1``."""
    return unit_roots(size)[(k * np.arange(size)) % size]


def chi2_scale(j: int, n: int, sigma_b_sq: float) -> float:
    """Factor turning ``|partial sum|^2`` into the non-centrality parameter at step ``j``.

    The remaining-sign variance ``(1 - j/N)/2`` vanishes at ``j = N``; the
    fraction decided is clamped to ``(N-1)/N`` there.
    """
    alpha = min(j / n, (n - 1) / n) if n > 1 else 0.0
    var = 0.5 * (1.0 - alpha)
    return 1.0 / (sigma_b_sq * n * var)


def _third_moment_poly(lam):
    # E[chi'^2_2(lam)^3] minus the constant 48
    return lam * lam * lam + 18.0 * lam * lam + 72.0 * lam


def decision_statistic(h, contribution, variant, j: int, p: SignProblem) -> float:
    """Difference of the ``+`` and ``-`` branch objectives for sign ``j``.

    ``h`` is the unnormalized partial sum of the decided subcarriers and
    ``contribution`` the unnormalized tone ``c_j exp(j 2 pi j n / LN)``.
    A positive value favours ``x_j = -1``.
    """
    variant = RuleVariant.parse(variant)
    h = np.asarray(h, dtype=np.complex128)
    t = np.asarray(contribution, dtype=np.complex128)
    if h.shape != t.shape:
        raise ValueError("accumulator and contribution must have equal length")
    plus = power(h + t)
    minus = power(h - t)
    if variant is RuleVariant.CHI2_SCALED:
        scale = chi2_scale(j, p.n, p.sigma_b_sq)
        plus = plus * scale
        minus = minus * scale
    return float(np.sum(_third_moment_poly(plus) - _third_moment_poly(minus)))


@numba.njit(cache=True)
def _ce_kernel(c, n_f, stop, oversampling, scaled, sigma_b_sq):
    n = c.shape[0]
    size = oversampling * n
    roots = np.exp(2j * np.pi * np.arange(size) / size)
    h = np.zeros(size, np.complex128)
    for k in range(n_f):
        ck = c[k]
        idx = 0
        for m in range(size):
            h[m] += ck * roots[idx]
            idx += k
            if idx >= size:
                idx -= size
    signs = np.ones(n, np.int8)
    stats = np.zeros(stop - n_f)
    for j in range(n_f, stop):
        cj = c[j]
        t_sq = cj.real * cj.real + cj.imag * cj.imag
        if scaled:
            alpha = j / n
            if alpha > (n - 1) / n:
                alpha = (n - 1) / n
            kappa = 1.0 / (sigma_b_sq * n * 0.5 * (1.0 - alpha))
        else:
            kappa = 1.0
        # with a = |h|^2 + |t|^2 and b = 2 Re(h conj t):
        # poly(a + b) - poly(a - b) = 2b^3 + 6a^2 b + 72ab + 144b
        d = 0.0
        idx = 0
        for m in range(size):
            t = cj * roots[idx]
            idx += j
            if idx >= size:
                idx -= size
            hm = h[m]
            a = (hm.real * hm.real + hm.imag * hm.imag + t_sq) * kappa
            b = 2.0 * (hm.real * t.real + hm.imag * t.imag) * kappa
            d += 2.0 * b * b * b + 6.0 * a * a * b + 72.0 * a * b + 144.0 * b
        stats[j - n_f] = d
        x = -1 if d > 0.0 else 1
        signs[j] = x
        step = x * cj
        idx = 0
        for m in range(size):
            h[m] += step * roots[idx]
            idx += j
            if idx >= size:
                idx -= size
    return signs, stats, h


def ce_reduce(p: SignProblem, variant=RuleVariant.ALG1_PRINTED, stop: Optional[int] = None) -> ReductionOutcome:
    """Closed-form conditional-expectation sign selection.

    Decides signs ``n_f .. stop-1`` (``stop`` defaults to N) in order. The
    returned signal is the normalized partial sum, i.e. the synthesized symbol
    ``c * signs`` when the run is complete.
    """
    variant = RuleVariant.parse(variant)
    stop = p.n if stop is None else int(stop)
    if not p.n_f <= stop <= p.n:
        raise ConfigurationError(f"stop={stop} outside [{p.n_f}, {p.n}]")
    signs, stats, h = _ce_kernel(
        np.ascontiguousarray(p.c), p.n_f, stop, p.oversampling,
        variant is RuleVariant.CHI2_SCALED, float(p.sigma_b_sq),
    )
    idx = np.arange(p.n_f, stop)
    trace = DecisionTrace(idx, stats, signs[p.n_f:stop].copy(), np.full(idx.size, np.nan))
    return ReductionOutcome(signs, trace, h * p.norm)


def pattern_signs(r: int, index: int) -> np.ndarray:
    """Sign pattern for ``index`` in lexicographic order with +1 before -1."""
    bits = (index >> np.arange(r - 1, -1, -1)) & 1
    return np.where(bits == 0, 1, -1).astype(np.int8)


def enumerate_srcm(base, tones) -> np.ndarray:
    """SRCM of ``base + sum_k s_k tones[k]`` for every sign pattern ``s``.

    Patterns are ordered lexicographically over ``s`` with +1 preceding -1
    (``tones[0]`` is the most significant position).  Sums are built by
    repeated exact ``+/-`` steps so that ``s`` and ``-s`` give bitwise negated
    signals when ``base`` is zero.
    """
    base = np.asarray(base, dtype=np.complex128)
    tones = np.asarray(tones, dtype=np.complex128).reshape(-1, base.size)
    r = tones.shape[0]
    r_inner = r
    while r_inner > 0 and (1 << r_inner) * base.size > _ENUM_BLOCK:
        r_inner -= 1
    r_outer = r - r_inner
    out = np.empty(1 << r, dtype=float)
    block = 1 << r_inner
    for o in range(1 << r_outer):
        rows = base.copy()
        for k, s in enumerate(pattern_signs(r_outer, o)):
            rows = rows + tones[k] if s > 0 else rows - tones[k]
        rows = rows[None, :]
        for k in range(r - 1, r_outer - 1, -1):
            rows = np.concatenate([rows + tones[k], rows - tones[k]])
        out[o * block:(o + 1) * block] = srcm(rows)
    return out


class Exhaustive:
    """Conditional expectations by enumerating every completion of the undecided signs."""

    def __repr__(self):
        return "Exhaustive()"


@dataclass(frozen=True)
class SampleAverage:
    """Conditional expectations by averaging over ``k`` random completions.

    The same completions serve both branches of a decision.
    """

    k: int
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError("sample average needs k >= 1 realizations")


EXHAUSTIVE = Exhaustive()
ExactMode = Union[Exhaustive, SampleAverage]


def _check_capacity(p: SignProblem, mode) -> None:
    if isinstance(mode, Exhaustive) and p.n_selectable > EXACT_CE_MAX_SIGNS:
        raise CapacityError(
            f"exhaustive conditional expectations support at most {EXACT_CE_MAX_SIGNS} "
            f"selectable signs, got {p.n_selectable}; use SampleAverage or raise n_f"
        )


def normalized_tones(p: SignProblem) -> np.ndarray:
    """Row k is subcarrier k's normalized contribution ``c_k e_k / (sigma_b sqrt(N))``."""
    size = p.n_samples
    roots = unit_roots(size)
    m = np.arange(size)
    k = np.arange(p.n)[:, None]
    return p.c[:, None] * roots[(k * m) % size] * p.norm


def _expectation(base, rest, mode, rng) -> float:
    if rest.shape[0] == 0:
        return float(srcm(base))
    if isinstance(mode, Exhaustive):
        return float(np.mean(enumerate_srcm(base, rest)))
    completions = rng.choice(np.array([-1.0, 1.0]), size=(mode.k, rest.shape[0])) @ rest
    return float(np.mean(srcm(base + completions)))


def initial_expectation(p: SignProblem, mode: ExactMode = EXHAUSTIVE) -> float:
    """Mean SRCM over uniformly random selectable signs."""
    _check_capacity(p, mode)
    tones = normalized_tones(p)
    base = tones[: p.n_f].sum(axis=0) if p.n_f else np.zeros(p.n_samples, np.complex128)
    rng = np.random.default_rng(mode.seed) if isinstance(mode, SampleAverage) else None
    return _expectation(base, tones[p.n_f:], mode, rng)


def exact_ce_reduce(p: SignProblem, mode: ExactMode = EXHAUSTIVE) -> ReductionOutcome:
    """Sign selection minimizing the (exact or sampled) conditional expectation at each step."""
    _check_capacity(p, mode)
    tones = normalized_tones(p)
    h = tones[: p.n_f].sum(axis=0) if p.n_f else np.zeros(p.n_samples, np.complex128)
    rng = np.random.default_rng(mode.seed) if isinstance(mode, SampleAverage) else None
    start = _expectation(h, tones[p.n_f:], mode, rng)

    signs = np.ones(p.n, np.int8)
    count = p.n_selectable
    stats = np.empty(count)
    expect = np.empty(count)
    for i, j in enumerate(range(p.n_f, p.n)):
        rest = tones[j + 1:]
        if isinstance(mode, SampleAverage) and rest.shape[0]:
            completions = rng.choice(np.array([-1.0, 1.0]), size=(mode.k, rest.shape[0])) @ rest
            g_plus = float(np.mean(srcm(h + tones[j] + completions)))
            g_minus = float(np.mean(srcm(h - tones[j] + completions)))
        else:
            g_plus = _expectation(h + tones[j], rest, mode, rng)
            g_minus = _expectation(h - tones[j], rest, mode, rng)
        x = 1 if g_plus <= g_minus else -1
        signs[j] = x
        h = h + tones[j] if x > 0 else h - tones[j]
        stats[i] = g_plus - g_minus
        expect[i] = min(g_plus, g_minus)
    trace = DecisionTrace(np.arange(p.n_f, p.n), stats, signs[p.n_f:].copy(), expect)
    return ReductionOutcome(signs, trace, h, initial_expectation=start)
