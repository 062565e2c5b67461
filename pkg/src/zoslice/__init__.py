"""Zeroth-order parallel MCMC: random-slice samplers and benchmark harness."""

from .targets import (
    TargetModel,
    GaussianTarget,
    LogisticRegressionTarget,
    StochasticVolatilityTarget,
    LatencyTarget,
    generate_logistic_data,
    generate_sv_data,
)
from .directions import (
    DirectionLaw,
    DirectionMatrix,
    sample_canonical_subset,
    sample_uniform_stiefel,
)
from .engine import (
    DivergenceError,
    FiniteDiffConfig,
    NonFinitePotentialError,
    RoundExecutor,
    RoundLedger,
    ZoGradientEstimate,
    directional_derivatives,
    zo_gradient_estimate,
    zo_sgd_minimize,
)
from .samplers import (
    ChainState,
    KernelOutcome,
    SamplerConfig,
    adapt_scale,
    build_kernel,
    leapfrog_involution_check,
    leapfrog_slice_map,
    run_chain,
)
from .diagnostics import (
    EfficiencyReport,
    Trajectory,
    eff_sweep,
    efficiency_report,
    esjd,
    moment_stationarity_check,
    relative_gain,
    w2_contraction_estimate,
)

__version__ = "0.1.0"
