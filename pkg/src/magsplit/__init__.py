"""Time-integration toolkit for semilinear evolution equations du/dt = A u + B(t,u) u.

Operator-splitting steppers built on nonlinear Magnus kernels, Picard-type
successive approximations and their multiscale variants, together with the
exponential-action backends, benchmark problems, error metrics, and the
experiment harness used to benchmark them against each other.
"""

from .operators import (
    Grid,
    StateVector,
    LinearOperator,
    NonlinearFamily,
    diagonal_family,
    zero_family,
    apply_linear,
    eval_B,
    eval_B_prime,
    eval_B_second,
)
from .expaction import (
    ExpBackend,
    ActionOperator,
    ExpActionError,
    ExpConvergenceError,
    ExpOverflowError,
    exp_action,
    exp_dense,
)
from .magnus import (
    MagnusOperator,
    omega1,
    omega2_midpoint,
    omega2_trapezoid,
    omega2_midpoint_literal,
    magnus_propagate,
)
from .integrators import (
    SchemeConfig,
    Trajectory,
    BlowUpError,
    SCHEMES,
    step_ab,
    step_ba,
    step_strang,
    step_successive_standard,
    step_successive_multi_a,
    step_successive_multi_b,
    integrate,
)
from .problems import (
    Problem,
    bernoulli_problem,
    bernoulli_exact,
    fisher_problem_1d,
    fisher_problem_2d,
    fisher_problem_3d,
    heat_kernel_tilde,
    linear_dr_exact,
    fisher_reference,
)
from .metrics import (
    ErrorReport,
    spatial_error,
    time_aggregate,
    refined_reference_error,
    restrict_to_coarse,
    convergence_rate,
)

__version__ = "0.1.0"
