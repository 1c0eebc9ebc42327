"""Competitors and oracles for sign selection: SLM, exhaustive search, random signs."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .ce import SignProblem, enumerate_srcm, normalized_tones, pattern_signs
from .errors import CapacityError, ConfigurationError
from .ofdm import SymbolFrame, srcm, synthesize_data

EXHAUSTIVE_MAX_SIGNS = 20


class PhaseAlphabet(enum.Enum):
    PM1 = "pm1"
    QPSK_PHASES = "qpsk"

    @classmethod
    def parse(cls, value) -> "PhaseAlphabet":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(f"unknown SLM phase alphabet {value!r}") from None

    @property
    def symbols(self) -> np.ndarray:
        if self is PhaseAlphabet.PM1:
            return np.array([1, -1], dtype=np.complex128)
        return np.array([1, -1, 1j, -1j], dtype=np.complex128)


@dataclass(frozen=True)
class SlmConfig:
    s: int = 100
    phase_alphabet: PhaseAlphabet = PhaseAlphabet.QPSK_PHASES
    seed: int = 0

    def __post_init__(self):
        if int(self.s) < 1:
            raise ConfigurationError("SLM needs at least one candidate")
        object.__setattr__(self, "phase_alphabet", PhaseAlphabet.parse(self.phase_alphabet))


@dataclass(frozen=True)
class SlmOutcome:
    frame: SymbolFrame
    eta: float
    candidate: int


def slm_phase_vectors(n: int, cfg: SlmConfig) -> np.ndarray:
    """``cfg.s`` rows of phase factors; row 0 is all ones."""
    rng = np.random.default_rng(cfg.seed)
    phases = rng.choice(cfg.phase_alphabet.symbols, size=(cfg.s, n))
    phases[0] = 1.0
    return phases


def slm_reduce(frame: SymbolFrame, cfg: SlmConfig) -> SlmOutcome:
    """Selected mapping: keep the lowest-SRCM phase-rotated candidate (first on ties)."""
    phases = slm_phase_vectors(frame.n_subcarriers, cfg)
    candidates = frame.data[None, :] * phases
    etas = srcm(synthesize_data(candidates, frame.sigma_b_sq, frame.oversampling))
    best = int(np.argmin(etas))
    chosen = SymbolFrame(candidates[best], frame.sigma_b_sq, frame.oversampling)
    return SlmOutcome(chosen, float(etas[best]), best)


def exhaustive_sign_search(p: SignProblem) -> tuple[np.ndarray, float]:
    """Global SRCM minimizer over the selectable signs.

    Ties resolve to the lexicographically smallest sign vector with +1 < -1.
    """
    r = p.n_selectable
    if r > EXHAUSTIVE_MAX_SIGNS:
        raise CapacityError(
            f"exhaustive search supports at most {EXHAUSTIVE_MAX_SIGNS} selectable signs, got {r}"
        )
    tones = normalized_tones(p)
    base = tones[: p.n_f].sum(axis=0) if p.n_f else np.zeros(p.n_samples, np.complex128)
    etas = enumerate_srcm(base, tones[p.n_f:])
    best = int(np.argmin(etas))
    signs = np.ones(p.n, np.int8)
    signs[p.n_f:] = pattern_signs(r, best)
    return signs, float(etas[best])


def random_signs(p: SignProblem, seed) -> np.ndarray:
    """Uniform i.i.d. signs on the selectable block; prefix entries stay +1."""
    rng = np.random.default_rng(seed)
    signs = np.ones(p.n, np.int8)
    signs[p.n_f:] = rng.choice(np.array([1, -1], dtype=np.int8), size=p.n_selectable)
    return signs
