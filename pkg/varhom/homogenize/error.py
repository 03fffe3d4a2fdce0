from typing import Optional

import numpy as np

from varhom.fields.ensemble import CoefficientSample
from varhom.grid.cube import TriadicCube
from varhom.homogenize.model import HomogenizedModel
from varhom.subadd.quantities import SolverParams, solve_mu, solve_mu0


def error_E(
    sample: CoefficientSample,
    cube: TriadicCube,
    p,
    q,
    model: HomogenizedModel,
    params: Optional[SolverParams] = None,
) -> float:
    """
    E(U, p, q) = |μ₀(U, p, q) − F̄(p, q)| + |μ(U, q*, p*) + q*·p + p*·q − F̄(p, q)| with (q*, p*) = ∇F̄(p, q).

    Both terms vanish when the cube already behaves like the homogenized medium.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    Fbar = float(model.Fbar.value(p, q)[0])
    grad = model.Fbar.gradient(p, q)[0]
    qstar, pstar = grad[:2], grad[2:]
    mu0, _ = solve_mu0(sample, cube, p, q, params)
    mu, _ = solve_mu(sample, cube, qstar, pstar, params)
    return abs(mu0 - Fbar) + abs(mu + float(qstar @ p + pstar @ q) - Fbar)
