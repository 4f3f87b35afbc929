"""Robust isotonic regression by M-estimation."""

from ._backend import NAME as BACKEND
from .asymptotics import (
    AvarReport,
    ChernoffConfig,
    ChernoffSample,
    ErrorModel,
    avar,
    efficiency_ratio,
    gcm,
    simulate_chernoff,
)
from .errors import (
    ConfigError,
    DegenerateSample,
    DomainError,
    EmptyBlock,
    InsufficientData,
    IsomestError,
    NonIdentifiable,
)
from .montecarlo import ExperimentConfig, MseTable, run_experiment, table1
from .psi import ScoreFamily, parse_family, psi, psi_prime, rho
from .robustness import (
    ContaminationSpec,
    breakdown_lower_bound,
    contamination_probe,
    influence,
)
from .scale import ScaleEstimate, ScaleMethod, bisquare_chi, estimate_scale, m_scale, parse_scale
from .solver import (
    DesignSample,
    IsotonicFit,
    block_m_estimate,
    fit,
    fit_minmax_oracle,
    fit_pava,
    predict,
    s_n,
)

__version__ = "0.1.0"
