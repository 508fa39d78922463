"""Spectral Galerkin / tamed exponential Euler toolkit for the stochastic
Cahn-Hilliard(-Cook) equation on the unit cube, with a coupled Monte Carlo
harness for strong/weak convergence measurement and Kolmogorov-derivative
diagnostics."""

from .errors import (
    ConfigError,
    InsufficientLevelsError,
    InvalidEstimateError,
    MeanComponentError,
    ParameterError,
    ShapeMismatchError,
)
from .functionals import GaussianFunctional, LinearFunctional, SineFunctional, make_functional
from .harness import (
    ExperimentPlan,
    RateReport,
    fit_loglog,
    moment_stability,
    strong_error_spatial,
    strong_error_temporal,
    weak_error_spatial,
    weak_error_temporal,
)
from .kolmogorov import (
    TangentState,
    check_regularity_scaling,
    estimate_D2u,
    estimate_Du,
    estimate_Du_fd,
    step_second_tangent,
    step_tangent,
)
from .noise import NoiseModel, RngStream, sample_increment, step_Ztilde, trace_class, white_noise
from .nonlinearity import apply_Fprime, apply_Fsecond, eval_energy, eval_F_grid, galerkin_F
from .scheme import (
    SchemeConfig,
    TrajectoryRecord,
    default_x0,
    interpolate_Xtilde,
    run_trajectory,
    step_tamed,
    step_untamed,
)
from .spectral import (
    GridField,
    OperatorSpectrum,
    SpectralField,
    apply_A_power,
    build_spectrum,
    norm_alpha,
    phi1_apply,
    project_PN,
    project_mean_free,
    semigroup_apply,
    to_grid,
    to_spectral,
)

__version__ = "0.1.0"
