"""Riemannian optimization on SPD matrices with the alpha metric family.

The package provides the metric layer (alpha family plus the
affine-invariant baseline), steepest-descent and trust-region solvers,
Hessian-spectrum diagnostics, the submersion machinery the geometry
derives from, benchmark problems with spectral instance generators, and an
experiment harness with a small CLI.
"""

from .exceptions import (
    ApManifoldError,
    ConfigError,
    DomainError,
    ExpDomainViolation,
    NotCritical,
    NotPositiveDefinite,
    SingularInput,
    StepFailure,
)
from .geometry import (
    AI,
    MetricSpec,
    MetricWeights,
    basis_mats,
    distance,
    exp_map,
    from_coords,
    l_operator,
    metric_coord_diag,
    metric_inner,
    metric_norm,
    metric_weights,
    retract,
    riemannian_gradient,
    tangent_dim,
    to_coords,
    weight_matrix,
)
from .hessian import (
    HessianReport,
    euclidean_hessian_matrix,
    fit_loglog_slope,
    riemannian_hessian_eigs,
    riemannian_hessian_matrix,
    spectrum_report,
)
from .linalg import (
    SpdPoint,
    eig_sym,
    eigh_desc,
    frechet_derivative,
    haar_orthogonal,
    loewner,
    lyapunov_solve,
    matrix_function,
    sym,
)
from .optimize import (
    ArmijoStep,
    FixedStep,
    RsdConfig,
    RtrConfig,
    RunTrace,
    make_step_rule_reference,
    rsd_solve,
    rtr_solve,
)
from .problems import (
    Instance,
    SpectrumRecipe,
    SylvesterProblem,
    TraceRegressionProblem,
    WlsProblem,
    load_instance,
    make_instances,
    make_pstar,
    save_instance_spec,
)
from .submersion import (
    d_pi_alpha,
    horizontal_lift,
    horizontal_project,
    lifted_gradient,
    lifted_hessian_oracle,
    pi_alpha,
)

__version__ = "0.1.0"
