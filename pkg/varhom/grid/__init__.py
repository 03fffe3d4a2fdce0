from varhom.grid.averages import cell_averages, node_to_cell
from varhom.grid.cube import (
    TriadicCube,
    TrimInfo,
    build_cube,
    grid_trim,
    sculpt_bound,
    sculpt_ratio,
    separation_holds,
    trimmed_partition_gap,
)
from varhom.grid.field import GridField
from varhom.grid.helmholtz import HelmholtzParts, helmholtz_project, orthogonality_residual
from varhom.grid.operators import (
    boundary_nodes,
    curl_matrix,
    discrete_divergence,
    discrete_gradient,
    gradient_matrix,
    inner_cells,
    inner_nodes,
    interior_nodes,
)
from varhom.grid.preconditioner import laplacian_preconditioner, masked_preconditioner
from varhom.grid.solenoidal import SolenoidalParam, solenoidal_param

__all__ = [
    "TriadicCube",
    "TrimInfo",
    "build_cube",
    "grid_trim",
    "sculpt_ratio",
    "sculpt_bound",
    "separation_holds",
    "trimmed_partition_gap",
    "GridField",
    "HelmholtzParts",
    "helmholtz_project",
    "orthogonality_residual",
    "gradient_matrix",
    "curl_matrix",
    "discrete_gradient",
    "discrete_divergence",
    "inner_cells",
    "inner_nodes",
    "interior_nodes",
    "boundary_nodes",
    "laplacian_preconditioner",
    "masked_preconditioner",
    "SolenoidalParam",
    "solenoidal_param",
    "cell_averages",
    "node_to_cell",
]
