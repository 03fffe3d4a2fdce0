from varhom.exceptions import InvalidInput
from varhom.grid.field import GridField


def cell_averages(f: GridField, r_cell: int) -> GridField:
    """Averages over unit cells of a cell-centred field whose grid has ``r_cell`` intervals per unit length."""
    if f.location != "cell":
        raise InvalidInput("cell_averages expects a cell-centred field")
    shape = f.grid_shape
    if any(n % r_cell for n in shape):
        raise InvalidInput(f"grid {shape} is not a whole number of unit cells at r_cell={r_cell}")
    blocks = []
    for n in shape:
        blocks += [n // r_cell, r_cell]
    vals = f.values.reshape(tuple(blocks) + f.values.shape[f.dim :])
    avg = vals.mean(axis=tuple(range(1, 2 * f.dim, 2)))
    return GridField(avg, f.lower, f.spacing * r_cell, f.boundary, "cell", f.components)


def node_to_cell(u: GridField) -> GridField:
    """Average the 2^d corner values of each cell (d=2)."""
    if u.location != "node" or u.dim != 2:
        raise InvalidInput("node_to_cell expects a nodal field in d=2")
    v = u.values
    avg = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
    return GridField(avg, u.lower, u.spacing, u.boundary, "cell", u.components)
