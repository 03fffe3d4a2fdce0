import functools
import time
from pathlib import Path

import numpy as np

from varhom.cli.summary import Summary
from varhom.dirichlet import (
    DirichletProblem,
    DirichletSystem,
    fit_error_decay,
    homogenization_error,
    homogenized_integrand,
    lipschitz_profile,
    m_parameter,
    regularity_checks,
    solve_dirichlet,
    solve_heterogeneous,
)
from varhom.exceptions import FitRefused, InvalidInput
from varhom.fields import (
    EnsembleSpec,
    Phase,
    finite_range_ok,
    kernel_tail_check,
    mixing_probe,
    phase_indicator,
    sample_field,
)
from varhom.fields.ensemble import J
from varhom.grid import (
    GridField,
    build_cube,
    discrete_divergence,
    helmholtz_project,
    orthogonality_residual,
    solenoidal_param,
)
from varhom.homogenize import (
    affine_fit,
    bracket_width,
    check_abar,
    check_duality_closure,
    check_musord,
    error_E,
    estimate_model,
    fit_rate,
    load_model,
    sample_oracle,
    save_model,
    scale_sweep,
)
from varhom.homogenize.model import HomogenizedModel, ensemble_constants
from varhom.homogenize.sweep import level_seed
from varhom.subadd import (
    SolveRecord,
    SolverParams,
    check_bounds,
    check_continuity,
    check_cutup,
    check_ordering,
    check_partition,
    check_uniform_convexity,
    check_uniqueness,
    solve_mu,
    solve_mu0,
    write_records,
)
from varhom.utils.jobs import run_jobs
from varhom.utils.seed import derive_seed
from varhom.utils.utils import AttrDict, log
from varhom.varrep import (
    TabulatedIntegrand,
    check_convexity_window,
    fitzpatrick,
    linear_map,
    make_linear_representative,
    represent,
    save_table,
    selfduality_residual,
    tabulation_error,
    verify_representation,
)

HELMHOLTZ_NODES = 16
POISSON_RADIUS = 3


def solver_params(cfg: AttrDict) -> SolverParams:
    return SolverParams(tol=cfg.tol, max_iter=cfg.max_iter, cg_max_iter=cfg.cg_max_iter)


def _fmt(v) -> str:
    return "nan" if v is None else f"{float(v):.10e}"


def _window(summary: Summary, name: str, report) -> None:
    summary.threshold(f"{name}_window_lower", report.lower_constant)
    summary.threshold(f"{name}_window_upper", report.upper_constant)
    summary.result(f"{name}_window_violations", len(report.convexity_violations) + len(report.smoothness_violations))
    summary.verdict(f"{name}_window", report.ok)


# represent


def represent_study(cfg: AttrDict, spec: EnsembleSpec, out: Path, summary: Summary) -> None:
    phase = Phase(*cfg.rep_phase)
    a = phase.monotone_map(cfg.lam)
    bound = cfg.rep_bound
    summary.threshold("rep_tol", cfg.rep_tol)
    summary.threshold("graph_tol", cfg.graph_tol)
    summary.threshold("convexity_tol", cfg.convexity_tol)

    A, M = phase.c * np.eye(2), phase.skew * J
    linear = make_linear_representative(A, M)
    report = verify_representation(
        linear,
        linear_map(A, M, lam=cfg.lam),
        sample_count=cfg.rep_samples,
        radius=bound,
        seed=derive_seed(spec.seed, "represent", "linear"),
        tol=cfg.rep_tol,
        graph_tol=cfg.graph_tol,
    )
    summary.result("linear_violations", report.violations)
    summary.verdict("linear_representation", report.ok)
    window = check_convexity_window(
        linear, cfg.rep_pairs, bound, derive_seed(spec.seed, "represent", "window"), tol=cfg.convexity_tol
    )
    _window(summary, "linear", window)

    fitz = fitzpatrick(a, pmax=bound, qmax=bound)
    report = verify_representation(
        fitz,
        a,
        sample_count=cfg.rep_samples,
        radius=bound,
        seed=derive_seed(spec.seed, "represent", "fitzpatrick"),
        tol=cfg.rep_tol,
        graph_tol=cfg.graph_tol,
        check_dual=False,
    )
    summary.result("fitzpatrick_violations", report.violations)
    summary.verdict("fitzpatrick_representation", report.ok)

    rep = represent(a, bound, cfg.rep_nodes)
    save_table(out / "representation.hglf", rep.integrand)
    tab_err = rep.tabulation_error
    residual = selfduality_residual(rep.integrand)
    checked = int(np.isfinite(residual).sum())
    worst = float(np.nanmax(residual)) if checked else None
    summary.threshold("selfduality_bound", cfg.selfduality_factor * tab_err)
    summary.result("tabulation_error", tab_err)
    summary.result("selfduality_nodes", checked)
    summary.result("selfduality_residual", worst)
    summary.verdict("selfduality", None if worst is None else worst <= cfg.selfduality_factor * tab_err)
    window = check_convexity_window(
        rep.integrand,
        cfg.rep_pairs,
        bound,
        derive_seed(spec.seed, "represent", "table"),
        tol=max(cfg.convexity_tol, tab_err),
    )
    _window(summary, "table", window)


# homogenize


def error_job(spec: EnsembleSpec, level: int, index: int, p, q, model: HomogenizedModel, params: SolverParams):
    cube = build_cube(level)
    sample = sample_field(spec, cube, derive_seed(spec.seed, spec.ensemble_id, "error", level, index))
    return error_E(sample, cube, p, q, model, params)


def _homogenized_model(cfg: AttrDict, spec: EnsembleSpec, params: SolverParams) -> HomogenizedModel:
    if cfg.model:
        log.info(f"loading homogenized model from {cfg.model}")
        return load_model(cfg.model)
    return estimate_model(
        spec, cfg.n_top, cfg.pq_bound, cfg.pq_nodes, cfg.model_samples, params, cfg.bracket_ceiling, cfg.jobs
    )


def homogenize_study(cfg: AttrDict, spec: EnsembleSpec, out: Path, summary: Summary) -> None:
    params = solver_params(cfg)
    curve = scale_sweep(spec, cfg.levels, cfg.samples, cfg.p, cfg.q, cfg.qstar, cfg.pstar, params, workers=cfg.jobs)
    curve.to_csv(out / "curves.csv")
    gap = curve.gap
    summary.result("gap", gap.tolist())
    summary.verdict("trap", all(curve.trap_ok()))
    per_sample = [
        mu0 - mu - curve.pairing >= -s.eps for s in curve.levels for mu, mu0 in zip(s.mu_values, s.mu0_values)
    ]
    summary.result("trap_sample_share", float(np.mean(per_sample)))
    summary.verdict("trap_per_sample", all(per_sample))
    flags = curve.monotonicity_flags()
    summary.result("monotonicity_flags", len(flags))
    summary.verdict("monotone_means", not flags)
    summary.threshold("gap_ratio", cfg.gap_ratio)
    first = curve.levels[0]
    if len(gap) > 1 and gap[0] > first.eps:
        summary.result("gap_ratio_observed", gap[-1] / gap[0])
        summary.verdict("gap_shrinks", gap[-1] < cfg.gap_ratio * gap[0])
    else:
        summary.verdict("gap_shrinks", None)

    try:
        rate = fit_rate(curve)
        summary.result("alpha", rate.alpha)
        summary.result("alpha_ci", rate.alpha_ci)
        summary.result("s_hat", rate.s_hat)
    except FitRefused as e:
        log.info(f"rate fit refused: {e}")
        rate = None
        summary.result("rate_fit", "refused")

    model = _homogenized_model(cfg, spec, params)
    if rate is not None:
        model.alpha, model.s_hat = rate.alpha, rate.s_hat
    save_model(model, out / "model")
    summary.threshold("bracket_ceiling", model.ceiling)
    summary.result("bracket_width", bracket_width(model))
    summary.result("low_confidence", model.low_confidence)

    duality = check_duality_closure(model)
    summary.threshold("duality_bound", duality.bound)
    summary.result("duality_deviation", duality.max_deviation)
    summary.verdict("duality_closure", duality.ok)
    musord = check_musord(model)
    summary.threshold("musord_tol", musord.tol)
    summary.result("musord_worst_excess", musord.worst_excess)
    summary.verdict("musord", musord.ok)
    abar = check_abar(model, cfg.abar_tol)
    summary.threshold("abar_tol", abar.tol)
    summary.result("abar_lipschitz", abar.lipschitz)
    summary.result("abar_monotonicity", abar.monotonicity)
    summary.result("abar_consistency", abar.consistency)
    summary.verdict("abar", abar.ok)

    if cfg.error_levels:
        _error_medians(cfg, spec, model, params, out, summary)
    if cfg.oracle_check:
        _oracle_comparison(cfg, spec, model, summary)


def _error_medians(cfg, spec, model, params, out, summary) -> None:
    levels = sorted(int(n) for n in cfg.error_levels)
    p, q = tuple(cfg.error_p), tuple(cfg.error_q)
    jobs = [((n, i), (spec, n, i, p, q, model, params)) for n in levels for i in range(cfg.error_seeds)]
    errors = run_jobs(error_job, jobs, cfg.jobs)
    with open(out / "errors.csv", "w") as f:
        f.write("level,index,error\n")
        for (n, i), e in errors.items():
            f.write(f"{n},{i},{e:.10e}\n")
    medians = [float(np.median([errors[(n, i)] for i in range(cfg.error_seeds)])) for n in levels]
    summary.result("error_medians", medians)
    summary.verdict("error_median_decreases", medians[-1] < medians[0] if len(levels) > 1 else None)


def _oracle_comparison(cfg, spec, model, summary) -> None:
    summary.threshold("oracle_tol", cfg.oracle_tol)
    try:
        A_fit, _, _ = affine_fit(model)
    except InvalidInput as e:
        log.warning(f"oracle comparison skipped: {e}")
        summary.verdict("oracle", None)
        return
    cube = build_cube(model.level)
    A = [
        sample_oracle(sample_field(spec, cube, level_seed(spec, model.level, i)), cube, cfg.oracle_resolution).A
        for i in range(model.samples)
    ]
    A_oracle = np.mean(A, axis=0)
    deviation = float(np.linalg.norm(A_fit - A_oracle, 2) / np.linalg.norm(A_oracle, 2))
    summary.result("abar_fit", A_fit.ravel().tolist())
    summary.result("abar_oracle", A_oracle.ravel().tolist())
    summary.result("oracle_deviation", deviation)
    summary.verdict("oracle", deviation <= cfg.oracle_tol)


# dirichlet-error and lipschitz


def _problem(cfg: AttrDict, R: int) -> DirichletProblem:
    return DirichletProblem(int(R), cfg.shape, tuple(cfg.slope), cfg.rhs, cfg.r_cell)


def _seed(spec: EnsembleSpec, study: str, R: int, s: int) -> int:
    return derive_seed(spec.seed, spec.ensemble_id, study, R, s)


def dirichlet_error_job(spec: EnsembleSpec, problem: DirichletProblem, seed: int, ubar, params: SolverParams):
    u = solve_heterogeneous(sample_field(spec, problem.sample_region, seed), problem, params)
    return homogenization_error(u, ubar, problem.R, problem.node_mask)


def dirichlet_error_study(cfg: AttrDict, spec: EnsembleSpec, out: Path, summary: Summary) -> None:
    params = solver_params(cfg)
    integrand = homogenized_integrand(_homogenized_model(cfg, spec, params), cfg.abar_tol)
    radii = sorted(int(R) for R in cfg.radii)
    jobs = []
    for R in radii:
        problem = _problem(cfg, R)
        ubar = solve_dirichlet(DirichletSystem.homogeneous(integrand, problem), params).u
        log.info(f"homogenized solution at R={R} done")
        jobs += [((R, s), (spec, problem, _seed(spec, "dirichlet", R, s), ubar, params)) for s in cfg.seeds]
    errors = run_jobs(dirichlet_error_job, jobs, cfg.jobs)
    with open(out / "errors.csv", "w") as f:
        f.write("R,seed,error\n")
        for (R, s), e in errors.items():
            f.write(f"{R},{s},{e:.10e}\n")

    by_radius = {R: [errors[(R, s)] for s in cfg.seeds] for R in radii}
    means = [float(np.mean(by_radius[R])) for R in radii]
    summary.result("mean_errors", means)
    summary.verdict("error_decreases", means[-1] < means[0] if len(radii) > 1 else None)
    try:
        fit = fit_error_decay(by_radius)
        summary.result("decay_rate", fit.rate)
        summary.result("decay_rate_ci", fit.rate_ci)
        summary.verdict("decay_significant", fit.significant)
    except FitRefused as e:
        log.info(f"decay fit refused: {e}")
        summary.verdict("decay_significant", None)


def lipschitz_job(spec: EnsembleSpec, problem: DirichletProblem, seed: int, cfg: AttrDict, params: SolverParams):
    u = solve_heterogeneous(sample_field(spec, problem.sample_region, seed), problem, params)
    M = m_parameter(u, problem.rhs_field(), problem.R, spec.K0, cfg.m_exponent, problem.node_mask)
    radii = [r for r in cfg.lipschitz_radii if r <= problem.R]
    profile = lipschitz_profile(u, radii, M, cfg.C_lip, center=(0.0, 0.0))
    report = regularity_checks(u, problem, spec.K0, delta=cfg.meyers_delta, C=cfg.caccioppoli_C)
    report.lipschitz = profile
    return report


def lipschitz_study(cfg: AttrDict, spec: EnsembleSpec, out: Path, summary: Summary) -> None:
    params = solver_params(cfg)
    radii = sorted(int(R) for R in cfg.radii)
    jobs = [
        ((R, s), (spec, _problem(cfg, R), _seed(spec, "lipschitz", R, s), cfg, params))
        for R in radii
        for s in cfg.seeds
    ]
    reports = run_jobs(lipschitz_job, jobs, cfg.jobs)
    with open(out / "lipschitz.csv", "w") as f:
        f.write("R,seed,r,profile,bound,r0,caccioppoli,meyers\n")
        for (R, s), rep in reports.items():
            prof = rep.lipschitz
            for r, v in zip(prof.radii, prof.profile):
                f.write(
                    f"{R},{s},{r:.6f},{v:.10e},{prof.bound:.10e},{_fmt(prof.r0)},"
                    f"{rep.caccioppoli[0]:.10e},{rep.meyers[0]:.10e}\n"
                )
    with open(out / "r0_curve.csv", "w") as f:
        f.write("C_lip,R,seed,r0\n")
        for C in sorted(cfg.C_lip_curve):
            for (R, s), rep in reports.items():
                f.write(f"{float(C):.6f},{R},{s},{_fmt(rep.lipschitz.r0_at(C))}\n")

    top = radii[-1]
    top_r0 = [reports[(top, s)].r0 for s in cfg.seeds]
    share = float(np.mean([r0 is not None and r0 <= cfg.r0_fraction * top for r0 in top_r0]))
    summary.threshold("C_lip", cfg.C_lip)
    summary.threshold("r0_bound", cfg.r0_fraction * top)
    summary.threshold("r0_quantile", cfg.r0_quantile)
    summary.threshold("caccioppoli_C", cfg.caccioppoli_C)
    summary.result("r0_share", share)
    summary.verdict("r0_small", share >= cfg.r0_quantile)
    summary.verdict("profile_bounded", all(rep.r0 is not None for rep in reports.values()))
    summary.result("caccioppoli_max", max(rep.caccioppoli[0] for rep in reports.values()))
    summary.verdict("caccioppoli", all(rep.ok for rep in reports.values()))
    if spec.constant:
        smallest = [min(rep.lipschitz.radii) for rep in reports.values()]
        summary.verdict("r0_control", all(rep.r0 == r for rep, r in zip(reports.values(), smallest)))


# mixing-probe


def mixing_probe_study(cfg: AttrDict, spec: EnsembleSpec, out: Path, summary: Summary) -> None:
    table = mixing_probe(spec, phase_indicator(1), cfg.distances, cfg.mixing_samples)
    table.to_csv(out / "covariance.csv")
    summary.threshold("sigmas", cfg.sigmas)
    summary.threshold("dependence_range", spec.range)
    finite = finite_range_ok(table, spec.range, cfg.sigmas) if spec.mixing == "finite-range" else None
    summary.verdict("finite_range", finite)

    zero = [r for r in table.rows if r.distance == 0]
    if spec.kind == "checkerboard" and zero:
        p1 = spec.p1 if len(spec.phases) == 2 else 0.0
        oracle = p1 * (1.0 - p1)
        summary.result("variance", zero[0].covariance)
        summary.result("variance_oracle", oracle)
        summary.verdict("variance_oracle", abs(zero[0].covariance - oracle) <= cfg.sigmas * zero[0].stderr + 1e-15)
    else:
        summary.verdict("variance_oracle", None)

    if spec.mixing == "algebraic":
        try:
            tail = kernel_tail_check(table, spec.kernel_beta)
            summary.result("tail_slope", tail.slope)
            summary.verdict("kernel_tail", tail.consistent)
        except FitRefused as e:
            log.info(f"tail fit refused: {e}")
            summary.verdict("kernel_tail", None)


# check


def _paraboloid(x, R):
    return (R**2 - np.sum(x**2, axis=1)) / 4.0


def _kernel_checks(cfg: AttrDict, spec: EnsembleSpec, summary: Summary) -> None:
    rng = np.random.default_rng(derive_seed(spec.seed, "check", "kernels"))
    n, h = HELMHOLTZ_NODES, 1.0 / HELMHOLTZ_NODES
    f = rng.normal(size=(n, n, 2))
    parts = helmholtz_project(GridField(f, (0.0, 0.0), h, "periodic", "node", 2))
    reconstruction = float(np.abs(parts.reconstruct() - f).max() / np.abs(f).max())
    orthogonality = orthogonality_residual(parts)
    summary.threshold("kernel_tol", cfg.kernel_tol)
    summary.result("helmholtz_reconstruction", reconstruction)
    summary.result("helmholtz_orthogonality", orthogonality)
    summary.verdict("helmholtz", reconstruction <= cfg.kernel_tol and orthogonality <= cfg.kernel_tol)

    psi = rng.normal(size=(n + 1, n + 1))
    g = solenoidal_param((n, n), h)(psi)
    div = discrete_divergence(g).values[1:-1, 1:-1]
    scale = float(np.abs(g.values).max())
    summary.result("solenoidal_divergence", float(np.abs(div).max()) / scale)
    summary.verdict("solenoidal", float(np.abs(div).max()) <= cfg.kernel_tol * scale)

    R = POISSON_RADIUS
    problem = DirichletProblem(R, "ball", functools.partial(_paraboloid, R=R), 1.0, cfg.r_cell)
    u = solve_dirichlet(DirichletSystem.homogeneous(make_linear_representative(np.eye(2)), problem)).u
    exact = problem.boundary_values()
    w = np.where(problem.node_mask, u.weights(), 0.0)
    error = float(np.sqrt(np.sum(w * (u.values - exact) ** 2) / np.sum(w * exact**2)))
    summary.threshold("poisson_tol", cfg.poisson_tol)
    summary.result("poisson_error", error)
    summary.verdict("poisson", error <= cfg.poisson_tol)


def _phase_checks(cfg: AttrDict, spec: EnsembleSpec, summary: Summary) -> None:
    sample = sample_field(spec, ((0, 1), (0, 1)))
    for k, phase in enumerate(spec.phases):
        F = sample.integrand(k)
        seed = derive_seed(spec.seed, "check", "phase", k)
        if isinstance(F, TabulatedIntegrand):
            tab_err = tabulation_error(float(F.spacing.max()), F.Lambda)
            residual = selfduality_residual(F)
            worst = float(np.nanmax(residual)) if np.isfinite(residual).any() else None
            summary.result(f"phase{k}_selfduality_residual", worst)
            summary.verdict(
                f"phase{k}_selfduality", None if worst is None else worst <= cfg.selfduality_factor * tab_err
            )
            tol = max(cfg.convexity_tol, tab_err)
        else:
            report = verify_representation(
                F,
                phase.monotone_map(spec.lam),
                sample_count=cfg.rep_samples,
                radius=1.0,
                seed=seed,
                tol=cfg.rep_tol,
                graph_tol=cfg.graph_tol,
            )
            summary.verdict(f"phase{k}_representation", report.ok)
            tol = cfg.convexity_tol
        _window(summary, f"phase{k}", check_convexity_window(F, cfg.rep_pairs, 1.0, seed, tol=tol))


def _subadd_checks(cfg: AttrDict, spec: EnsembleSpec, out: Path, summary: Summary) -> None:
    params = solver_params(cfg)
    seed = derive_seed(spec.seed, spec.ensemble_id, "check")
    cube = build_cube(cfg.check_level)
    sample = sample_field(spec, cube, seed)
    p, q, qstar, pstar = (tuple(cfg[k]) for k in ("p", "q", "qstar", "pstar"))
    Lambda, K0 = ensemble_constants(spec)

    start = time.perf_counter()
    mu, pair = solve_mu(sample, cube, qstar, pstar, params)
    mu_time = time.perf_counter() - start
    start = time.perf_counter()
    mu0, pair0 = solve_mu0(sample, cube, p, q, params)
    mu0_time = time.perf_counter() - start
    records = [
        SolveRecord.from_pair(spec.ensemble_id, seed, cube, "mu", (qstar, pstar), pair, mu_time),
        SolveRecord.from_pair(spec.ensemble_id, seed, cube, "mu0", (p, q), pair0, mu0_time),
    ]
    write_records(out / "solves.csv", records, cfg.record_timings)
    for name, value, first, second, eps in (("mu", mu, qstar, pstar, pair.eps), ("mu0", mu0, p, q, pair0.eps)):
        bounds = check_bounds(name, value, first, second, Lambda, K0, eps)
        summary.result(f"{name}_value", value)
        summary.verdict(f"{name}_bounds", bounds.ok)
    summary.verdict("mu0_pairing", pair0.pairing_ok)

    summary.verdict("ordering", check_ordering(sample, cube, cfg.check_count, seed=seed, params=params).ok)
    summary.verdict("partition", check_partition(sample, cube, p, q, qstar, pstar, params).ok)
    convexity = check_uniform_convexity(sample, cube, qstar, pstar, seed=seed, params=params)
    summary.verdict("uniform_convexity", convexity.ok)
    summary.verdict("continuity", check_continuity(sample, cube, cfg.check_count, seed=seed, params=params).ok)
    uniqueness = check_uniqueness(sample, cube, qstar, pstar, params, seed)
    summary.result("uniqueness_distance2", uniqueness.distance2)
    summary.threshold("uniqueness_threshold", uniqueness.threshold)
    summary.verdict("uniqueness", uniqueness.ok)
    cutup = check_cutup(sample, cube, qstar, pstar, params=params)
    summary.result("cutup_excess", cutup.excess)
    summary.threshold("cutup_bound", cutup.bound + cutup.eps)
    summary.verdict("cutup", cutup.ok)


def check_study(cfg: AttrDict, spec: EnsembleSpec, out: Path, summary: Summary) -> None:
    _kernel_checks(cfg, spec, summary)
    _phase_checks(cfg, spec, summary)
    _subadd_checks(cfg, spec, out, summary)
