"""Single-layer heat potentials for constant b: g0, V~, G0, G_lambda, V_lambda."""

from membrane.potential.kernels import SurfaceNodes, conormal_g0, g0
from membrane.potential.killing import (
    GLambdaSolution,
    InequalityReport,
    check_inequality,
    check_lambda_monotone,
    laplace_functional,
    line_targets,
    solve_G_lambda,
)
from membrane.potential.representation import (
    AverageIdentityReport,
    FluxReport,
    G0Table,
    VtildeTable,
    check_average_identity,
    check_flux_condition,
    refinement_diagnostic,
    skew_density_1d,
    solve_G0,
    solve_Vtilde,
)
from membrane.potential.resolvent import (
    JumpReport,
    ResidualReport,
    ResolventProblem,
    VLambdaSolution,
    check_resolvent,
    resolvent_refinement,
    single_layer_jump,
    solve_V_lambda,
    uniqueness_probe,
    v_lambda_by_killing,
)
from membrane.potential.tables import KernelTable, PotentialGrid

__all__ = [
    "AverageIdentityReport",
    "FluxReport",
    "G0Table",
    "GLambdaSolution",
    "InequalityReport",
    "JumpReport",
    "KernelTable",
    "PotentialGrid",
    "ResidualReport",
    "ResolventProblem",
    "SurfaceNodes",
    "VLambdaSolution",
    "VtildeTable",
    "check_average_identity",
    "check_flux_condition",
    "check_inequality",
    "check_lambda_monotone",
    "check_resolvent",
    "conormal_g0",
    "g0",
    "laplace_functional",
    "line_targets",
    "refinement_diagnostic",
    "resolvent_refinement",
    "single_layer_jump",
    "skew_density_1d",
    "solve_G0",
    "solve_G_lambda",
    "solve_Vtilde",
    "solve_V_lambda",
    "uniqueness_probe",
    "v_lambda_by_killing",
]
