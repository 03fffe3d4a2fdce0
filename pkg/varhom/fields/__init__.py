from varhom.fields.ensemble import (
    CoefficientSample,
    EnsembleSpec,
    Phase,
    cell_phases,
    dump_sample_csv,
    phase_integrand,
    region_around,
    sample_field,
)
from varhom.fields.mixing import (
    CovarianceRow,
    CovarianceTable,
    TailFit,
    covariance_estimate,
    finite_range_ok,
    kernel_tail_check,
    mixing_probe,
    phase_indicator,
)

__all__ = [
    "Phase",
    "EnsembleSpec",
    "CoefficientSample",
    "sample_field",
    "cell_phases",
    "phase_integrand",
    "dump_sample_csv",
    "region_around",
    "mixing_probe",
    "phase_indicator",
    "covariance_estimate",
    "CovarianceRow",
    "CovarianceTable",
    "kernel_tail_check",
    "TailFit",
    "finite_range_ok",
]
