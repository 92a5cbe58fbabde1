"""Multiwell nonlinear elasticity energies, their small-strain limit
densities, closed-form quasiconvex envelopes, and a P1 finite element
solver for checking that rescaled minima converge to the relaxed minimum.
"""

__version__ = "0.1.0"

from .convergence import (
    COERCIVITY_C_FROZEN,
    CoercivityReport,
    CoercivitySampler,
    CompactGrid,
    ConvergenceReport,
    EpsSchedule,
    coercivity_scan,
    dist_limit_scan,
    fit_rate,
    hull_membership,
    limit_density_batch,
    quadratic_lower_bound_fit,
    report_csv_text,
    report_json_text,
    uniform_limit_scan,
)
from .energies import (
    GpFunction,
    NematicModel,
    PolynomialVol,
    ReferenceVol,
    SyntheticModel,
    f_eps,
    model_from_json,
    model_to_json,
    rescaled_density,
    rescaled_density_batch,
)
from .errors import ConfigError, InfiniteValue, SizeError
from .limits import (
    LimitParams,
    QProjection,
    f_limit,
    fqc,
    min_dist2_to_un,
    project_Q,
    qce_numeric_upper,
    v_limit,
    v_limit_grad,
    vqce,
)
from .matkernel import (
    IterationLimit,
    SpectralDecomp,
    dist_to_SO,
    dist_to_wells,
    eig_sym,
    procrustes_distance,
    rotation_trace_max,
    singular_values,
    symmetrize,
)
from .mesh import BoxMesh
from .optim import LbfgsResult, lbfgs
from .solver import (
    BoundarySpec,
    LoadSpec,
    MinimizeResult,
    SolveOptions,
    SweepCell,
    SweepReport,
    energy_eps,
    energy_relaxed,
    epsilon_sweep,
    minimize,
    strong_convergence_diagnostic,
)
from .wells import (
    EpsilonWells,
    FiniteWellFamily,
    NematicWellFamily,
    nematic_step_tensor,
    nematic_stretch,
    u_of_n,
)

__all__ = [
    "__version__",
    "COERCIVITY_C_FROZEN",
    "BoundarySpec",
    "BoxMesh",
    "CoercivityReport",
    "CoercivitySampler",
    "CompactGrid",
    "ConfigError",
    "ConvergenceReport",
    "EpsSchedule",
    "EpsilonWells",
    "FiniteWellFamily",
    "GpFunction",
    "InfiniteValue",
    "SizeError",
    "IterationLimit",
    "LbfgsResult",
    "LimitParams",
    "LoadSpec",
    "MinimizeResult",
    "NematicModel",
    "NematicWellFamily",
    "PolynomialVol",
    "QProjection",
    "ReferenceVol",
    "SolveOptions",
    "SpectralDecomp",
    "SweepCell",
    "SweepReport",
    "SyntheticModel",
    "coercivity_scan",
    "dist_limit_scan",
    "dist_to_SO",
    "dist_to_wells",
    "eig_sym",
    "energy_eps",
    "energy_relaxed",
    "epsilon_sweep",
    "f_eps",
    "f_limit",
    "fit_rate",
    "fqc",
    "hull_membership",
    "lbfgs",
    "limit_density_batch",
    "min_dist2_to_un",
    "minimize",
    "model_from_json",
    "model_to_json",
    "nematic_step_tensor",
    "nematic_stretch",
    "procrustes_distance",
    "project_Q",
    "qce_numeric_upper",
    "quadratic_lower_bound_fit",
    "report_csv_text",
    "report_json_text",
    "rescaled_density",
    "rescaled_density_batch",
    "rotation_trace_max",
    "singular_values",
    "strong_convergence_diagnostic",
    "symmetrize",
    "u_of_n",
    "uniform_limit_scan",
    "v_limit",
    "v_limit_grad",
    "vqce",
]
