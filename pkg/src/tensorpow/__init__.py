"""Exact rearrangements of tensor power sequences and their preasymptotic bounds."""

__version__ = "0.1.0"

from .errors import (
    BoxTooSmall,
    BracketingError,
    BudgetExceeded,
    CountCeilingExceeded,
    DomainError,
    InvariantViolation,
    SpectrumError,
)
from .spectra import (
    UnivariateSpectrum,
    TorusNorm,
    torus_spectrum,
    jacobi_spectrum,
    cube_h1_spectrum,
    cube_h2_spectrum,
    dyadic_spectrum,
    custom_spectrum,
)
from .frequencies import FrequencyRoot, find_h2_frequencies
from .hypercount import (
    CountQuery,
    a_count,
    a2_sandwich,
    a2_coarse_bounds,
    tensor_count,
    count_at_least,
    dyadic_level_count,
    dyadic_cumulative,
)
from .rearrange import TauQueryResult, tau_topk, tau_at, tau_brute
from .bounds import (
    PreasymptoticParams,
    BoundReport,
    preasym_upper,
    preasym_lower,
    asym_constant,
    verify_bounds,
)
from .tractability import ProblemFamily, TractabilityVerdict, info_complexity, classify
