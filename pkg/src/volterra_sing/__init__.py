"""Singular stochastic Volterra equations: solvers and empirical verification.

The library simulates X_t = x0 + int_0^t k(t,s) b(s,X_s) ds
+ int_0^t g(t,s) sigma(s,X_s) dB_s for weakly singular convolution
kernels k(t,s) = (t-s)**(alpha-1), alpha in (1/2, 1), in three coupled
formulations (direct, eps-regularized, Ito differential form), and ships
the Monte Carlo machinery to verify moment bounds, the regularization
rate and the small-time central limit theorem rate empirically.
"""

from .brownian import (
    BrownianPath,
    SimulationGrid,
    path_key,
    refine_brownian,
    sample_brownian,
)
from .coefficients import (
    AffineSinFn,
    CoefficientError,
    CoefficientSet,
    ConstantFn,
    GAffine,
    GExp,
    GOne,
    LinearFn,
    ProblemSpec,
    RegularityReport,
    TimePowerFn,
    diffusion_eval,
    drift_eval,
    estimate_regularity,
    g_dt_eval,
    g_eval,
)
from .config import ConfigError, ExperimentConfig, GeometricGrid, load_config
from .experiments import ExperimentReport, Verdict, run_experiment
from .kernels import (
    A1Report,
    ConstantKernel,
    CustomConvolution,
    KernelError,
    KernelSpec,
    PowerSingular,
    ShiftedPower,
    kernel_dt,
    kernel_dt_segment_integral,
    kernel_eval,
    kernel_segment_integral,
    shift_kernel,
    verify_assumption_a1,
)
from .solvers import (
    IntegrationError,
    Trajectory,
    phi_at,
    solve_ito_form,
    solve_ito_regular,
    solve_regularized,
    solve_volterra,
)
from .stats import (
    NormalTarget,
    RateFit,
    Sample,
    StatsError,
    empirical_moment,
    fit_rate,
    holder_ratio_scan,
    mc_mean_with_se,
    normal_self_distance,
    wasserstein_to_normal,
)

__version__ = "0.1.0"
