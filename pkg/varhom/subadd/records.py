import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Tuple, Union

from varhom.subadd.problem import MinimizerPair

HEADER = "ensemble_id,seed,n,trimmed,quantity,p1,p2,q1,q2,pstar1,pstar2,qstar1,qstar2,value,residual,pairing_ok"

ZERO = (0.0, 0.0)


@dataclass
class SolveRecord:
    ensemble_id: str
    seed: int
    level: int
    trimmed: bool
    quantity: str
    p: Tuple[float, float] = ZERO
    q: Tuple[float, float] = ZERO
    pstar: Tuple[float, float] = ZERO
    qstar: Tuple[float, float] = ZERO
    value: float = math.nan
    residual: float = math.nan
    pairing_ok: bool = True
    wall_time: float = math.nan

    @classmethod
    def from_pair(cls, ensemble_id: str, seed: int, cube, quantity: str, data, pair: MinimizerPair, wall_time=math.nan):
        """``data`` is (q*, p*) for μ and (p, q) for μ₀."""
        first, second = (tuple(float(v) for v in x) for x in data)
        if quantity == "mu":
            kw = dict(qstar=first, pstar=second)
        else:
            kw = dict(p=first, q=second)
        return cls(
            ensemble_id,
            seed,
            cube.level,
            cube.trimmed,
            quantity,
            value=pair.energy,
            residual=pair.residual,
            pairing_ok=pair.pairing_ok,
            wall_time=wall_time,
            **kw,
        )

    def to_row(self, timings: bool = False) -> str:
        cols = [self.ensemble_id, str(self.seed), str(self.level), str(int(self.trimmed)), self.quantity]
        for v in (*self.p, *self.q, *self.pstar, *self.qstar):
            cols.append(f"{v:.6f}")
        cols += [f"{self.value:.12e}", f"{self.residual:.3e}", str(int(self.pairing_ok))]
        if timings:
            cols.append(f"{self.wall_time:.3f}")
        return ",".join(cols)


def write_records(path: Union[str, Path], records: Iterable[SolveRecord], timings: bool = False) -> None:
    """Per-solve CSV; wall time is only written with ``timings`` so that reruns are byte-identical."""
    with open(path, "w") as f:
        f.write(HEADER + (",wall_time" if timings else "") + "\n")
        for rec in records:
            f.write(rec.to_row(timings) + "\n")
