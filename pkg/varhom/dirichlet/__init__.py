from varhom.dirichlet.diagnostics import (
    CampanatoRow,
    DecayFit,
    FluxReport,
    LipschitzProfile,
    MesoscopicReport,
    RegularityReport,
    StabilityReport,
    campanato_check,
    energy_stability_check,
    fit_error_decay,
    flatness,
    flux_consistency,
    hminus1_norm,
    homogenization_error,
    lipschitz_profile,
    m_parameter,
    mesoscopic_average_check,
    regularity_checks,
)
from varhom.dirichlet.problem import DirichletProblem
from varhom.dirichlet.solver import (
    DirichletSolution,
    DirichletSystem,
    homogenized_integrand,
    solve_dirichlet,
    solve_heterogeneous,
    solve_homogenized,
)

__all__ = [
    "DirichletProblem",
    "DirichletSystem",
    "DirichletSolution",
    "solve_dirichlet",
    "solve_heterogeneous",
    "solve_homogenized",
    "homogenized_integrand",
    "homogenization_error",
    "LipschitzProfile",
    "lipschitz_profile",
    "flatness",
    "CampanatoRow",
    "campanato_check",
    "hminus1_norm",
    "m_parameter",
    "RegularityReport",
    "regularity_checks",
    "FluxReport",
    "flux_consistency",
    "MesoscopicReport",
    "mesoscopic_average_check",
    "DecayFit",
    "fit_error_decay",
    "StabilityReport",
    "energy_stability_check",
]
