"""Monte Carlo experiments over random OFDM symbols."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, NamedTuple, Optional

import numpy as np

from .baselines import EXHAUSTIVE_MAX_SIGNS, SlmConfig, exhaustive_sign_search, random_signs, slm_reduce
from .ce import RuleVariant, SignProblem, ce_reduce, normalized_tones
from .constellation import SCHEMES, build_constellation, fold_to_half, half_constellation
from .errors import ConfigurationError
from .ofdm import CmParams, SymbolFrame, cm_db, pooled_rcm_db, power, srcm_db, synthesize_data

log = logging.getLogger(__name__)

REDUCERS = ("ce", "slm", "none", "exhaustive", "random")
WORKERS_ENV = "CMSIGN_WORKERS"
THEOREM_BOUND = 6.0

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def symbol_seed(master_seed: int, index: int) -> int:
    """64-bit seed of symbol ``index``: splitmix64 of master seed mixed with the hashed index."""
    return splitmix64((int(master_seed) & _MASK64) ^ splitmix64(int(index)))


@dataclass(frozen=True)
class ExperimentConfig:
    n_subcarriers: int
    n_symbols: int = 1000
    oversampling: int = 4
    scheme: str = "qam16"
    n_f: int = 0
    reducer: str = "ce"
    variant: str = "alg1"
    slm_s: int = 100
    slm_alphabet: str = "qpsk"
    master_seed: int = 0
    cm_params: Optional[CmParams] = None

    def validate(self) -> "ExperimentConfig":
        if self.n_subcarriers < 1:
            raise ConfigurationError("n_subcarriers must be >= 1")
        if self.n_symbols < 1:
            raise ConfigurationError("n_symbols must be >= 1")
        if self.oversampling < 2:
            raise ConfigurationError("oversampling must be >= 2")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unsupported scheme {self.scheme!r}")
        if not 0 <= self.n_f <= self.n_subcarriers:
            raise ConfigurationError(f"n_f={self.n_f} outside [0, {self.n_subcarriers}]")
        if self.reducer not in REDUCERS:
            raise ConfigurationError(f"unknown reducer {self.reducer!r}; expected one of {REDUCERS}")
        RuleVariant.parse(self.variant)
        SlmConfig(self.slm_s, self.slm_alphabet)
        if self.reducer == "exhaustive" and self.n_subcarriers - self.n_f > EXHAUSTIVE_MAX_SIGNS:
            raise ConfigurationError(
                f"exhaustive reducer needs N - n_f <= {EXHAUSTIVE_MAX_SIGNS}"
            )
        return self

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["slm"] = {"s": d.pop("slm_s"), "alphabet": d.pop("slm_alphabet")}
        return d

    @staticmethod
    def flatten(d: dict[str, Any]) -> dict[str, Any]:
        """Flat keyword mapping from the nested file layout (``slm: {s, alphabet}``)."""
        d = dict(d)
        slm = d.pop("slm", None) or {}
        if not isinstance(slm, dict):
            raise ConfigurationError("'slm' must be a mapping with keys s, alphabet")
        if "s" in slm:
            d["slm_s"] = slm["s"]
        if "alphabet" in slm:
            d["slm_alphabet"] = slm["alphabet"]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        d = cls.flatten(d)
        cm = d.pop("cm_params", None)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if isinstance(cm, dict):
            cm = CmParams(**cm)
        try:
            cfg = cls(**d, cm_params=cm)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None
        return cfg.validate()


class SymbolRecord(NamedTuple):
    symbol_index: int
    seed: int
    eta_before: float
    eta_after: float
    srcm_db_before: float
    srcm_db_after: float
    elapsed_ns: int


@dataclass(frozen=True)
class PooledMoments:
    """Sample means of |v|^2 and |v|^6 over every sample of every symbol."""

    mean_p2_before: float
    mean_p6_before: float
    mean_p2_after: float
    mean_p6_after: float


@dataclass(frozen=True)
class CcdfTable:
    threshold_db: np.ndarray
    prob: np.ndarray


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[SymbolRecord]
    moments: PooledMoments
    extra: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def rcm_db_before(self) -> float:
        return pooled_rcm_db(self.moments.mean_p6_before, self.moments.mean_p2_before)

    @property
    def rcm_db_after(self) -> float:
        return pooled_rcm_db(self.moments.mean_p6_after, self.moments.mean_p2_after)


def draw_frame(rng: np.random.Generator, scheme: str, n: int) -> np.ndarray:
    const = build_constellation(scheme)
    return const.points[rng.integers(0, const.size, size=n)]


def make_problem(data: np.ndarray, scheme: str, n_f: int, oversampling: int) -> SignProblem:
    """Sign problem for a data frame: prefix kept as is, selectable part folded into M'."""
    const = build_constellation(scheme)
    half = half_constellation(const)
    c = np.array(data, dtype=np.complex128)
    c[n_f:], _ = fold_to_half(c[n_f:], half)
    return SignProblem(c, n_f, oversampling, const.sigma_b_sq, half)


def _reduce_symbol(cfg: ExperimentConfig, index: int):
    seed = symbol_seed(cfg.master_seed, index)
    rng = np.random.default_rng(seed)
    sigma_b_sq = build_constellation(cfg.scheme).sigma_b_sq
    data = draw_frame(rng, cfg.scheme, cfg.n_subcarriers)
    before = synthesize_data(data, sigma_b_sq, cfg.oversampling)

    start = time.perf_counter_ns()
    if cfg.reducer == "none":
        after = before
    elif cfg.reducer == "slm":
        frame = SymbolFrame(data, sigma_b_sq, cfg.oversampling)
        slm_seed = splitmix64(seed)
        out = slm_reduce(frame, SlmConfig(cfg.slm_s, cfg.slm_alphabet, slm_seed))
        after = synthesize_data(out.frame.data, sigma_b_sq, cfg.oversampling)
    else:
        problem = make_problem(data, cfg.scheme, cfg.n_f, cfg.oversampling)
        if cfg.reducer == "ce":
            after = ce_reduce(problem, cfg.variant).signal
        else:
            if cfg.reducer == "exhaustive":
                signs, _ = exhaustive_sign_search(problem)
            else:
                signs = random_signs(problem, splitmix64(seed))
            after = synthesize_data(problem.c * signs, sigma_b_sq, cfg.oversampling)
    elapsed = time.perf_counter_ns() - start

    p2_before = power(before)
    p2_after = power(after)
    eta_b = float(np.mean(p2_before**3))
    eta_a = float(np.mean(p2_after**3))
    record = SymbolRecord(index, seed, eta_b, eta_a, srcm_db(eta_b), srcm_db(eta_a), elapsed)
    return record, float(p2_before.mean()), float(p2_after.mean())


def _run_chunk(cfg: ExperimentConfig, indices: range):
    return [_reduce_symbol(cfg, i) for i in indices]


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if not value:
        return 1
    try:
        workers = int(value)
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer, got {value!r}") from None
    return max(1, workers)


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> ExperimentResult:
    """Reduce ``cfg.n_symbols`` random frames; records do not depend on ``workers``."""
    cfg.validate()
    workers = default_workers() if workers is None else max(1, int(workers))
    n = cfg.n_symbols
    if workers == 1 or n < 2:
        rows = _run_chunk(cfg, range(n))
    else:
        bounds = np.linspace(0, n, min(n, workers * 4) + 1).astype(int)
        chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [row for part in pool.map(_run_chunk, [cfg] * len(chunks), chunks) for row in part]
    rows.sort(key=lambda row: row[0].symbol_index)
    records = [row[0] for row in rows]
    moments = PooledMoments(
        mean_p2_before=float(np.mean([row[1] for row in rows])),
        mean_p6_before=float(np.mean([r.eta_before for r in records])),
        mean_p2_after=float(np.mean([row[2] for row in rows])),
        mean_p6_after=float(np.mean([r.eta_after for r in records])),
    )
    log.info("finished %d symbols (N=%d, reducer=%s)", n, cfg.n_subcarriers, cfg.reducer)
    return ExperimentResult(cfg, records, moments)


def ccdf(values_db, n_points: int = 200) -> CcdfTable:
    """Fraction of values strictly above each of ``n_points`` thresholds spanning [min, max].

    A degenerate span (all values equal) is widened to +-0.5 dB around the value.
    """
    values = np.asarray(values_db, dtype=float).reshape(-1)
    if values.size == 0:
        raise ValueError("ccdf of an empty sample")
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    thresholds = np.linspace(lo, hi, n_points) if n_points > 1 else np.array([lo])
    ordered = np.sort(values)
    above = values.size - np.searchsorted(ordered, thresholds, side="right")
    return CcdfTable(thresholds, above / values.size)


def summarize(result: ExperimentResult) -> dict[str, Any]:
    """Table-style summary row of an experiment."""
    cfg = result.config
    db_before = result.column("srcm_db_before")
    db_after = result.column("srcm_db_after")
    eta_after = result.column("eta_after")
    out = {
        "n_subcarriers": cfg.n_subcarriers,
        "reducer": cfg.reducer,
        "variant": cfg.variant if cfg.reducer == "ce" else None,
        "n_f": cfg.n_f,
        "n_symbols": len(result.records),
        "rcm_db_before": result.rcm_db_before,
        "rcm_db_after": result.rcm_db_after,
        "mean_srcm_db_before": float(db_before.mean()),
        "mean_srcm_db_after": float(db_after.mean()),
        "max_srcm_db_after": float(db_after.max()),
        "mean_eta_before": float(result.column("eta_before").mean()),
        "max_eta_after": float(eta_after.max()),
        "fraction_eta_after_above_6": float(np.mean(eta_after > THEOREM_BOUND)),
        "cm_db_before": None,
        "cm_db_after": None,
    }
    if cfg.cm_params is not None:
        out["cm_db_before"] = cm_db(out["rcm_db_before"], cfg.cm_params)
        out["cm_db_after"] = cm_db(out["rcm_db_after"], cfg.cm_params)
    return out


def conditional_covariance(problem: SignProblem, decided: int) -> np.ndarray:
    """Per-sample covariance of (Re s, Im s) given the first ``decided`` signs.

    The undecided signs are independent and uniform, so only the undecided
    subcarriers contribute; the decided prefix shifts the mean.  With
    ``Re(z)^2 = (|z|^2 + Re(z^2))/2`` the sums over subcarriers reduce to one
    FFT of ``c_k^2`` placed at bin ``2k``.  Returns an array of shape
    (3, L*N) holding var(Re), var(Im) and cov(Re, Im).
    """
    size = problem.n_samples
    c = problem.c[decided:]
    k = np.arange(decided, problem.n)
    spectrum = np.zeros(size, np.complex128)
    spectrum[(2 * k) % size] = c * c
    rotating = np.fft.ifft(spectrum) * size
    steady = np.sum(c.real * c.real + c.imag * c.imag)
    scale = 0.5 / (problem.sigma_b_sq * problem.n)
    return np.stack([steady + rotating.real, steady - rotating.real, rotating.imag]) * scale


def sampled_conditional_covariance(problem: SignProblem, decided: int, signs, k: int, rng) -> np.ndarray:
    """Monte Carlo estimate of :func:`conditional_covariance` from ``k`` random completions.

    ``signs`` supplies the decided prefix; deviations are taken from the
    sample mean so the estimate does not assume the conditional mean.
    """
    tones = normalized_tones(problem)
    mean = (np.asarray(signs[:decided], float)[:, None] * tones[:decided]).sum(0)
    rest = tones[decided:]
    draws = mean + rng.choice(np.array([-1.0, 1.0]), size=(k, rest.shape[0])) @ rest
    dev = draws - draws.mean(0)
    re, im = dev.real, dev.imag
    return np.stack([(re * re).mean(0), (im * im).mean(0), (re * im).mean(0)]) * k / (k - 1)


def variance_check(
    n: int,
    alphas=(0.0, 0.25, 0.5, 0.75),
    n_frames: int = 500,
    scheme: str = "qam16",
    oversampling: int = 4,
    master_seed: int = 0,
    method: str = "exact",
    completions: int = 64,
    variant: str = "alg1",
) -> dict[float, dict[str, float]]:
    """Frame-averaged conditional covariances after ``alpha*N`` sign decisions.

    ``method="exact"`` sums the undecided contributions directly.
    ``method="sampled"`` decides the prefix with :func:`ce_reduce` and
    estimates the covariance from ``completions`` random completions.
    Per-sample covariances are averaged over frames; the report holds the
    grand means and the worst per-sample deviation from ``(1-alpha)/2``
    (from 0 for the cross term).
    """
    if method not in ("exact", "sampled"):
        raise ConfigurationError(f"unknown method {method!r}")
    steps = {a: int(round(a * n)) for a in alphas}
    acc = {a: np.zeros((3, oversampling * n)) for a in alphas}
    last = max(steps.values())
    for i in range(n_frames):
        rng = np.random.default_rng(symbol_seed(master_seed, i))
        problem = make_problem(draw_frame(rng, scheme, n), scheme, 0, oversampling)
        if method == "exact":
            for a, j in steps.items():
                acc[a] += conditional_covariance(problem, j)
            continue
        signs = ce_reduce(problem, variant, stop=last).signs
        for a, j in steps.items():
            acc[a] += sampled_conditional_covariance(problem, j, signs, completions, rng)
    report = {}
    for a, total in acc.items():
        mean = total / n_frames
        target = 0.5 * (1.0 - a)
        report[a] = {
            "target": target,
            "var_re": float(mean[0].mean()),
            "var_im": float(mean[1].mean()),
            "cov": float(mean[2].mean()),
            "max_dev_var_re": float(np.abs(mean[0] - target).max()),
            "max_dev_var_im": float(np.abs(mean[1] - target).max()),
            "max_dev_cov": float(np.abs(mean[2]).max()),
        }
    return report
