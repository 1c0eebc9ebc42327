"""Cubic metric reduction of OFDM symbols by sign selection."""
from .baselines import SlmConfig, exhaustive_sign_search, random_signs, slm_reduce
from .ce import (
    EXHAUSTIVE,
    DecisionTrace,
    ReductionOutcome,
    RuleVariant,
    SampleAverage,
    SignProblem,
    ce_reduce,
    decision_statistic,
    exact_ce_reduce,
    initial_expectation,
)
from .constellation import (
    Constellation,
    HalfConstellation,
    build_constellation,
    demap_symbol,
    half_constellation,
    map_bits,
    rate_loss,
)
from .errors import CapacityError, ConfigurationError, SchemaError
from .harness import ExperimentConfig, ExperimentResult, ccdf, run_experiment, summarize
from .ofdm import CmParams, SymbolFrame, cm_db, rcm_db, srcm, srcm_db, synthesize
from .results_io import load, persist

__version__ = "0.1.0"

__all__ = [
    "EXHAUSTIVE",
    "CapacityError",
    "CmParams",
    "ConfigurationError",
    "Constellation",
    "DecisionTrace",
    "ExperimentConfig",
    "ExperimentResult",
    "HalfConstellation",
    "ReductionOutcome",
    "RuleVariant",
    "SampleAverage",
    "SchemaError",
    "SignProblem",
    "SlmConfig",
    "SymbolFrame",
    "build_constellation",
    "ccdf",
    "ce_reduce",
    "cm_db",
    "decision_statistic",
    "demap_symbol",
    "exact_ce_reduce",
    "exhaustive_sign_search",
    "half_constellation",
    "initial_expectation",
    "load",
    "map_bits",
    "persist",
    "random_signs",
    "rate_loss",
    "rcm_db",
    "run_experiment",
    "slm_reduce",
    "srcm",
    "srcm_db",
    "summarize",
    "synthesize",
]
