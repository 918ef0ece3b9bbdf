"""Recurrence and transience of Markov chains on the nonnegative integers.

A chain is described by explicit head rows and a periodic tail stencil
(:class:`ChainSpec`).  :func:`classify_chain` reduces it to a birth-death
chain through jump-length weighted drift rates and decides the associated
series; the ``oracle`` and ``verifier`` modules check verdicts and
stationary identities by independent numerical routes.
"""

from .birth_death import (
    BirthDeathChain,
    RuinCurve,
    TruncatedStationary,
    bd_classify,
    bd_escape,
    bd_ruin,
    bd_ruin_curve,
    bd_stationary_truncated,
)
from .chain import (
    ChainSpec,
    GeometricTail,
    RowPattern,
    ValidationReport,
    bd_spec,
    materialize,
    prob,
    reduce_lazy,
    row,
    validate,
)
from .criterion import (
    AssociatedChain,
    DriftRates,
    associated_birth_death,
    associated_rates,
    classify_chain,
    criterion_log_ratio,
    drift_rates,
)
from .documents import SpecFormatError, dump_spec, load_spec, parse_spec
from .families import builtin, builtin_names
from .oracle import (
    MCSummary,
    OracleReport,
    ctmc_simulate,
    escape_probability,
    finite_horizon_return,
    first_passage,
    first_passage_solve,
    mc_return,
    oracle_classify,
    ruin_curve,
)
from .series import Classification, LogRatio, SeriesConfig, Verdict, classify_series
from .verifier import (
    BalanceReport,
    TruncatedLaw,
    check_balance_general,
    check_global_balance,
    check_summed_equivalence,
    stationary_truncated,
)

__version__ = "0.1.0"

__all__ = [
    "BirthDeathChain", "RuinCurve", "TruncatedStationary", "bd_classify", "bd_escape", "bd_ruin",
    "bd_ruin_curve", "bd_stationary_truncated",
    "ChainSpec", "GeometricTail", "RowPattern", "ValidationReport", "bd_spec", "materialize", "prob",
    "reduce_lazy", "row", "validate",
    "AssociatedChain", "DriftRates", "associated_birth_death", "associated_rates", "classify_chain",
    "criterion_log_ratio", "drift_rates",
    "SpecFormatError", "dump_spec", "load_spec", "parse_spec",
    "builtin", "builtin_names",
    "MCSummary", "OracleReport", "ctmc_simulate", "escape_probability", "finite_horizon_return",
    "first_passage", "first_passage_solve", "mc_return", "oracle_classify", "ruin_curve",
    "Classification", "LogRatio", "SeriesConfig", "Verdict", "classify_series",
    "BalanceReport", "TruncatedLaw", "check_balance_general", "check_global_balance",
    "check_summed_equivalence", "stationary_truncated",
]
