from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from numpy import ndarray

from varhom.exceptions import InvalidInput, OutOfDomain, SolverFailure
from varhom.fields.ensemble import EnsembleSpec, sample_field
from varhom.grid.cube import build_cube
from varhom.homogenize.sweep import level_seed
from varhom.subadd.quantities import SolverParams, solve_mu, solve_mu0
from varhom.utils.jobs import run_jobs
from varhom.utils.utils import log
from varhom.varrep.container import load_table, save_table
from varhom.varrep.legendre import legendre_transform
from varhom.varrep.recover import invert_gradient, recover_monotone_map
from varhom.varrep.table import TabulatedIntegrand, tabulation_error, uniform_axes


def solve_nodes(
    spec: EnsembleSpec, level: int, seed: int, nodes: ndarray, params: SolverParams
) -> Tuple[ndarray, ndarray, float]:
    """
    μ₀ at every (p, q) node and μ at every (q*, p*) node of one realization.

    The same realization serves all nodes, so each table column is a convex (resp. concave) function of
    the node and so is their mean.
    """
    cube = build_cube(level)
    sample = sample_field(spec, cube, seed)
    mu0 = np.empty(len(nodes))
    mu = np.empty(len(nodes))
    eps = 0.0
    for i, z in enumerate(nodes):
        mu0[i], pair0 = solve_mu0(sample, cube, z[:2], z[2:], params)
        mu[i], pair = solve_mu(sample, cube, z[:2], z[2:], params)
        eps = max(eps, pair0.eps, pair.eps)
    return mu0, mu, eps


def ensemble_constants(spec: EnsembleSpec) -> Tuple[float, float]:
    """(Λ, K₀) shared by all phases: the largest declared by any phase representative."""
    sample = sample_field(spec, ((0, 1), (0, 1)))
    integrands = [sample.integrand(k) for k in range(len(spec.phases))]
    return max(f.Lambda for f in integrands), max(f.K0 for f in integrands)


@dataclass
class HomogenizedModel:
    """
    Finite-volume estimate of the homogenized integrand.

    ``Fbar`` tabulates mean μ₀ over (p, q) nodes, ``mubar`` mean μ over (q*, p*) nodes on the same axes, and
    ``closure`` the Legendre closure sup_{q*,p*} (μ̄ + p·q* + p*·q) of ``mubar``. Both ``Fbar`` and ``closure``
    estimate F̄; ``bracket`` is their gap plus two standard errors.
    """

    ensemble_id: str
    level: int
    samples: int
    Fbar: TabulatedIntegrand
    mubar: TabulatedIntegrand
    Fbar_se: ndarray
    mubar_se: ndarray
    eps: float
    ceiling: float
    p_grid: ndarray
    abar: ndarray
    alpha: Optional[float] = None
    s_hat: Optional[float] = None

    @property
    def Lambda(self) -> float:
        return self.Fbar.Lambda

    @property
    def K0(self) -> float:
        return self.Fbar.K0

    @property
    def tabulation_error(self) -> float:
        return tabulation_error(float(self.Fbar.spacing.max()), self.Lambda)

    @cached_property
    def closure(self) -> TabulatedIntegrand:
        neg = TabulatedIntegrand(self.mubar.axes, -self.mubar.values, self.Lambda, self.K0)
        return legendre_transform(neg, self.Fbar.axes)

    @cached_property
    def bracket(self) -> ndarray:
        """Bracket width per (p, q) node."""
        return self.Fbar.values - self.closure.values + 2.0 * (self.Fbar_se + self.mubar_se.max())

    @property
    def low_confidence(self) -> bool:
        return bool(bracket_width(self) > self.ceiling)

    @cached_property
    def dual_pairs(self) -> ndarray:
        """(P̄, Q̄) for every (q*, p*) node of ``mubar``; nan where ∇F̄ does not reach the node inside the table."""
        return np.stack([self.dual_pair(zs[:2], zs[2:]) for zs in self.mubar.nodes()])

    def dual_pair(self, qstar, pstar) -> ndarray:
        """The (p, q) with ∇F̄(p, q) = (q*, p*), as a 4-vector."""
        zs = np.concatenate([np.asarray(qstar, dtype=np.float64), np.asarray(pstar, dtype=np.float64)])
        try:
            return invert_gradient(self.Fbar, zs)
        except (OutOfDomain, SolverFailure) as e:
            log.debug(f"dual pair of {zs.tolist()} unavailable: {e}")
            return np.full(4, np.nan)

    def a(self, p) -> ndarray:
        """ā(p) from the F̄ table."""
        return recover_monotone_map(self.Fbar, p)


def abar_grid(bound: float, K0: float, Lambda: float, n: int = 3) -> ndarray:
    """Square p-grid on which ā is sampled, small enough that ā(p) stays inside the table."""
    radius = 0.9 * max(bound - K0, 0.0) / Lambda
    axis = np.linspace(-radius, radius, n)
    return np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)


def _sample_abar(Fbar: TabulatedIntegrand, p_grid: ndarray) -> ndarray:
    out = np.full_like(p_grid, np.nan)
    for i, p in enumerate(p_grid):
        try:
            out[i] = recover_monotone_map(Fbar, p)
        except (OutOfDomain, SolverFailure) as e:
            log.warning(f"abar({p.tolist()}) left the F̄ table: {e}")
    return out


def affine_fit(model: HomogenizedModel) -> Tuple[ndarray, ndarray, float]:
    """Least-squares ā(p) ≈ Ap + s over the sampled p-grid: (A, s, largest misfit)."""
    rows = ~np.isnan(model.abar).any(axis=1)
    p, a = model.p_grid[rows], model.abar[rows]
    if p.shape[0] < 3:
        raise InvalidInput(f"affine fit of abar needs 3 sampled points, got {p.shape[0]}")
    design = np.hstack([p, np.ones((p.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design, a, rcond=None)
    return coef[:2].T, coef[2], float(np.max(np.abs(design @ coef - a)))


def estimate_model(
    spec: EnsembleSpec,
    n_top: int = 1,
    bound: float = 1.0,
    nodes: int = 3,
    samples: int = 4,
    params: Optional[SolverParams] = None,
    ceiling: float = 0.1,
    workers: int = 1,
) -> HomogenizedModel:
    """
    Estimate F̄, μ̄ and ā from ``samples`` realizations of □_{n_top}.

    The (p, q) and (q*, p*) tables share ``nodes`` uniform nodes per axis on [−bound, bound]. One job per
    realization solves every node. A bracket width above ``ceiling`` marks the model low-confidence.
    """
    if samples < 1:
        raise InvalidInput("estimate_model needs at least one sample")
    if nodes < 3:
        raise InvalidInput("tables need at least 3 nodes per axis")
    params = params or SolverParams()
    Lambda, K0 = ensemble_constants(spec)
    axes = uniform_axes(bound, nodes, 4)
    shape = (nodes,) * 4
    grid = TabulatedIntegrand(axes, np.zeros(shape), Lambda, K0).nodes()

    jobs = [(i, (spec, n_top, level_seed(spec, n_top, i), grid, params)) for i in range(samples)]
    results = run_jobs(solve_nodes, jobs, workers)
    mu0 = np.stack([results[i][0] for i in range(samples)])
    mu = np.stack([results[i][1] for i in range(samples)])
    eps = max(results[i][2] for i in range(samples))

    def se(values):
        if samples < 2:
            return np.zeros(shape)
        return (values.std(axis=0, ddof=1) / np.sqrt(samples)).reshape(shape)

    Fbar = TabulatedIntegrand(axes, mu0.mean(axis=0).reshape(shape), Lambda, K0)
    mubar = TabulatedIntegrand(axes, mu.mean(axis=0).reshape(shape), Lambda, K0)
    p_grid = abar_grid(bound, K0, Lambda)
    model = HomogenizedModel(
        spec.ensemble_id, n_top, samples, Fbar, mubar, se(mu0), se(mu), eps, ceiling, p_grid, _sample_abar(Fbar, p_grid)
    )
    width = float(model.bracket.max())
    log.info(f"{spec.ensemble_id}: model at n={n_top} from {samples} samples, bracket width {width:.3e}")
    if model.low_confidence:
        log.warning(f"{spec.ensemble_id}: bracket width {width:.3e} exceeds {ceiling:g}, model is low-confidence")
    return model


@dataclass
class DualityReport:
    max_deviation: float
    bound: float
    checked: int

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.bound


def bracket_width(model: HomogenizedModel) -> float:
    return float(model.bracket.max())


def check_duality_closure(model: HomogenizedModel) -> DualityReport:
    """max |μ̄ + F̄*| over the (q*, p*) nodes where the discrete conjugate of F̄ is attained inside the table."""
    conj = legendre_transform(model.Fbar, model.mubar.axes)
    dev = np.abs(model.mubar.values + conj.values)[conj.trusted]
    worst = float(dev.max(initial=0.0))
    bound = bracket_width(model) + model.tabulation_error
    return DualityReport(worst, bound, int(conj.trusted.sum()))


@dataclass
class MusordReport:
    worst_excess: float
    tol: float
    violations: List[Tuple[float, ...]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_musord(model: HomogenizedModel, tol: Optional[float] = None) -> MusordReport:
    """μ̄(q*, p*) ≤ F̄(p, q) − p·q* − p*·q for every pair of table nodes."""
    if tol is None:
        tol = 2.0 * (model.Fbar_se.max() + model.mubar_se.max()) + model.eps
    # max over (p, q) of the excess is μ̄ + F̄* on the dual node
    excess = model.mubar.values + legendre_transform(model.Fbar, model.mubar.axes).values
    nodes = model.mubar.nodes()
    bad = np.flatnonzero(excess.ravel() > tol)
    violations = [tuple(nodes[i].tolist()) + (float(excess.ravel()[i]),) for i in bad]
    return MusordReport(float(excess.max()), float(tol), violations)


@dataclass
class AbarReport:
    Lambda: float
    K0: float
    at_zero: float
    lipschitz: float
    monotonicity: float
    consistency: float
    tol: float
    missing: int

    @property
    def ok(self) -> bool:
        c = 4.0 * self.Lambda
        return (
            self.missing == 0
            and self.at_zero <= c * self.K0 + self.tol
            and self.lipschitz <= c + self.tol
            and self.monotonicity >= 1.0 / c - self.tol
            and self.consistency <= self.tol
        )


def check_abar(model: HomogenizedModel, tol: float = 1e-6) -> AbarReport:
    """
    Constants of ā on the sampled p-grid: |ā(0)| ≤ 4ΛK₀, Lipschitz and monotone with 4Λ, and the
    argmin characterization ∂_q F̄(p, ā(p)) = p.
    """
    ok_rows = ~np.isnan(model.abar).any(axis=1)
    p, a = model.p_grid[ok_rows], model.abar[ok_rows]
    a0 = model.a(np.zeros(2))
    dp = p[:, None, :] - p[None, :, :]
    da = a[:, None, :] - a[None, :, :]
    dist2 = np.sum(dp**2, axis=-1)
    off = dist2 > 0
    lipschitz = float(np.max(np.sqrt(np.sum(da**2, axis=-1)[off] / dist2[off]), initial=0.0))
    monotonicity = float(np.min(np.sum(da * dp, axis=-1)[off] / dist2[off], initial=np.inf))
    consistency = float(np.max(np.abs(model.Fbar.gradient(p, a)[:, 2:] - p), initial=0.0)) if len(p) else np.inf
    return AbarReport(
        model.Lambda,
        model.K0,
        float(np.linalg.norm(a0)),
        lipschitz,
        monotonicity,
        consistency,
        tol,
        int((~ok_rows).sum()),
    )


def save_model(model: HomogenizedModel, directory: Union[str, Path]) -> None:
    """Tables go to HGLF containers, everything else to ``model.csv`` and ``abar.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_table(directory / "Fbar.hglf", model.Fbar)
    save_table(directory / "mubar.hglf", model.mubar)
    for name, se in (("Fbar_se", model.Fbar_se), ("mubar_se", model.mubar_se)):
        save_table(directory / f"{name}.hglf", TabulatedIntegrand(model.Fbar.axes, se, model.Lambda, model.K0))
    with open(directory / "model.csv", "w") as f:
        f.write("key,value\n")
        f.write(f"ensemble_id,{model.ensemble_id}\n")
        f.write(f"level,{model.level}\n")
        f.write(f"samples,{model.samples}\n")
        f.write(f"eps,{model.eps:.10e}\n")
        f.write(f"ceiling,{model.ceiling:.10e}\n")
        f.write(f"bracket_width,{bracket_width(model):.10e}\n")
        f.write(f"low_confidence,{int(model.low_confidence)}\n")
    with open(directory / "abar.csv", "w") as f:
        f.write("p1,p2,abar1,abar2\n")
        for p, a in zip(model.p_grid, model.abar):
            f.write(f"{p[0]:.10e},{p[1]:.10e},{a[0]:.10e},{a[1]:.10e}\n")
    columns = [
        model.Fbar.nodes(),
        model.Fbar.values.reshape(-1, 1),
        model.Fbar_se.reshape(-1, 1),
        model.closure.values.reshape(-1, 1),
        model.bracket.reshape(-1, 1),
    ]
    np.savetxt(
        directory / "brackets.csv",
        np.hstack(columns),
        fmt="%.10e",
        delimiter=",",
        header="p1,p2,q1,q2,Fbar,Fbar_se,closure,bracket_width",
        comments="",
    )


def load_model(directory: Union[str, Path]) -> HomogenizedModel:
    directory = Path(directory)
    meta = {}
    for line in (directory / "model.csv").read_text().splitlines()[1:]:
        key, value = line.split(",", 1)
        meta[key] = value
    rows = np.loadtxt(directory / "abar.csv", delimiter=",", skiprows=1, ndmin=2)
    return HomogenizedModel(
        meta["ensemble_id"],
        int(meta["level"]),
        int(meta["samples"]),
        load_table(directory / "Fbar.hglf"),
        load_table(directory / "mubar.hglf"),
        load_table(directory / "Fbar_se.hglf").values,
        load_table(directory / "mubar_se.hglf").values,
        float(meta["eps"]),
        float(meta["ceiling"]),
        rows[:, :2],
        rows[:, 2:],
    )
