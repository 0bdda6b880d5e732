"""Exact analysis of Dynamic-Frame Aloha with a known tag population."""

__version__ = "0.1.0"

from .framedist import (  # noqa: E402
    DomainError,
    ExactPmf,
    MomentSet,
    backlog_pmf,
    mean_backlog,
    mean_successes,
    moments,
    success_pmf,
    success_pmf_exact,
    success_pmf_oracle,
    success_pmf_shifted,
    var_successes,
    x_term,
)
from .numeric import EXACT, Mode  # noqa: E402
from .policy import (  # noqa: E402
    DivergenceError,
    ErrorSeries,
    FramePolicy,
    LengthTable,
    OptimalityViolation,
    error_series,
    ip_length,
    ip_length_one_level,
    optimal_search,
)
from .report import BoundReport, BoundRow  # noqa: E402

__all__ = [
    "BoundReport",
    "BoundRow",
    "DivergenceError",
    "DomainError",
    "EXACT",
    "ErrorSeries",
    "ExactPmf",
    "FramePolicy",
    "LengthTable",
    "Mode",
    "MomentSet",
    "OptimalityViolation",
    "backlog_pmf",
    "error_series",
    "ip_length",
    "ip_length_one_level",
    "mean_backlog",
    "mean_successes",
    "moments",
    "optimal_search",
    "success_pmf",
    "success_pmf_exact",
    "success_pmf_oracle",
    "success_pmf_shifted",
    "var_successes",
    "x_term",
]
