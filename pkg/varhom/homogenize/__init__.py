from varhom.homogenize.error import error_E
from varhom.homogenize.model import (
    AbarReport,
    DualityReport,
    HomogenizedModel,
    MusordReport,
    affine_fit,
    bracket_width,
    check_abar,
    check_duality_closure,
    check_musord,
    estimate_model,
    load_model,
    save_model,
)
from varhom.homogenize.oracle import OracleResult, periodic_cell_oracle, sample_oracle
from varhom.homogenize.rates import RateFit, fit_rate
from varhom.homogenize.sweep import LevelStats, ScaleCurve, scale_curves_to_csv, scale_sweep

__all__ = [
    "LevelStats",
    "ScaleCurve",
    "scale_sweep",
    "scale_curves_to_csv",
    "HomogenizedModel",
    "estimate_model",
    "check_duality_closure",
    "check_musord",
    "check_abar",
    "DualityReport",
    "MusordReport",
    "AbarReport",
    "save_model",
    "load_model",
    "affine_fit",
    "bracket_width",
    "error_E",
    "RateFit",
    "fit_rate",
    "OracleResult",
    "periodic_cell_oracle",
    "sample_oracle",
]
