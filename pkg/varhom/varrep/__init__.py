from varhom.varrep.container import load_table, save_table
from varhom.varrep.fitzpatrick import FitzpatrickIntegrand, fitzpatrick
from varhom.varrep.integrand import (
    QuadraticIntegrand,
    VariationalIntegrand,
    make_affine_representative,
    make_linear_representative,
)
from varhom.varrep.legendre import biconjugate_gap, legendre_transform
from varhom.varrep.monotone import MonotoneMap, check_monotone_map, linear_map, radial_map
from varhom.varrep.proximal import (
    Representation,
    build_extended_integrand,
    represent,
    selfdual_proximal_average,
    selfduality_residual,
)
from varhom.varrep.recover import invert_gradient, recover_monotone_map
from varhom.varrep.table import TabulatedIntegrand, tabulate, tabulation_error
from varhom.varrep.verify import (
    check_convexity_window,
    check_fitzpatrick_minimality,
    check_k0_bounds,
    verify_representation,
)

__all__ = [
    "MonotoneMap",
    "check_monotone_map",
    "linear_map",
    "radial_map",
    "VariationalIntegrand",
    "QuadraticIntegrand",
    "TabulatedIntegrand",
    "FitzpatrickIntegrand",
    "Representation",
    "make_linear_representative",
    "make_affine_representative",
    "fitzpatrick",
    "legendre_transform",
    "biconjugate_gap",
    "build_extended_integrand",
    "selfdual_proximal_average",
    "selfduality_residual",
    "represent",
    "recover_monotone_map",
    "invert_gradient",
    "tabulate",
    "tabulation_error",
    "verify_representation",
    "check_convexity_window",
    "check_fitzpatrick_minimality",
    "check_k0_bounds",
    "save_table",
    "load_table",
]
