"""Kernel-based nonlocal differential operators and optimization methods.

The package turns difference quotients averaged against concentrating radial
densities into usable gradients and Hessians for objectives that classical
calculus cannot differentiate, and builds descent, stochastic descent, and
Newton iterations on top of them.
"""

__version__ = "0.1.0"

from .fields import BoxDomain, ScalarField, SubsetIndicator, contains, extend_by_zero
from .kernels import (
    MomentDiagnostics,
    RadialKernel,
    bump_kernel,
    directional_second_moment,
    eval_density,
    gaussian_kernel,
    moment_c,
    moments,
    sample_offset,
    tail_mass,
)
from .operators import (
    ALTERNATE_CONSTANT,
    CENTRAL,
    FD_NONLOCAL,
    GRAD_SMOOTHED,
    MOMENT_CONSTANT,
    NESTED,
    HessianVariant,
    OperatorConfig,
    TaylorData,
    difference_quotient,
    find_vanishing_subset_1d,
    nonlocal_gradient,
    nonlocal_hessian,
    restricted_nonlocal_gradient,
    taylor_affine,
)
from .optimizers import (
    DIVERGED,
    GRAD_TOL,
    LEFT_DOMAIN,
    MAX_ITERS,
    OptimizerTrace,
    SgdConfig,
    StepSchedule,
    SubgradientReport,
    epsilon_sgd,
    epsilon_subgradient_check,
    local_counterpart,
    nlgd_fixed,
    nlgd_linesearch,
    nonlocal_newton,
)
from .oracles import brute_force_min, fd_gradient, fd_hessian, mc_nonlocal_gradient
from .pulse import (
    PulseManifold,
    PulseRunConfig,
    PulseRunSummary,
    default_holder_offsets,
    holder_exponent_fit,
    pulse_objective,
    run_pulse_experiment,
    run_pulse_suite,
)
from .quadrature import (
    PvPolicy,
    QuadratureGrid,
    build_ball_grid,
    build_box_grid,
    build_panel_grid,
    integrate,
    pv_integrate,
)
from .reporting import emit_csv, emit_plot_svg, read_trace_csv
from .sweeps import SweepReport, convergence_sweep, monotone_decreasing

__all__ = [name for name in dir() if not name.startswith("_")]
