import ast
import configparser
import os
from argparse import ArgumentParser, ArgumentTypeError
from typing import List, Optional, Sequence

from varhom.exceptions import ConfigError
from varhom.fields.ensemble import KINDS, MIXING_CLASSES, EnsembleSpec, Phase
from varhom.utils.utils import AttrDict, str2bool

COMMANDS = ("represent", "homogenize", "dirichlet-error", "lipschitz", "mixing-probe", "check")

# resolved keys that may differ between otherwise identical runs; kept out of summary.txt
RUNTIME_KEYS = ("config", "out", "jobs", "log_level")


class VarhomArgumentParser(ArgumentParser):
    """Parser whose usage errors raise ConfigError instead of exiting."""

    def error(self, message: str):
        raise ConfigError(_offending_key(message), message)


def _offending_key(message: str) -> str:
    for word in message.replace("/", " ").split():
        if word.startswith("--"):
            return word.strip(":,'")[2:]
    if "command" in message:
        return "command"
    return "?"


def add_run_cli_args(p: ArgumentParser) -> None:
    p.add_argument("command", nargs="?", default=None, choices=COMMANDS, help="Study to run")
    p.add_argument("--config", type=str, default=None, help="Experiment file with [section] headers and key = value")
    p.add_argument("--out", type=str, default=os.path.join(os.getcwd(), "varhom_out"), help="Output directory")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="Worker processes")
    p.add_argument("--seed-offset", "--seed_offset", dest="seed_offset", type=int, default=0, help="Added to seeds")
    p.add_argument("--log_level", type=str, default="info", help="debug, info, warning or error")
    p.add_argument(
        "--record_timings", type=str2bool, default=False, help="Write wall times (outputs stop being byte-identical)"
    )


def add_ensemble_cli_args(p: ArgumentParser) -> None:
    p.add_argument("--ensemble_kind", type=str, default="checkerboard", choices=KINDS)
    p.add_argument(
        "--phases",
        type=ast.literal_eval,
        default=[(1.0,), (4.0,)],
        help="Phases as tuples (c, b, skew, (s1, s2)); trailing entries may be omitted",
    )
    p.add_argument("--p1", type=float, default=0.5, help="Probability of phase 1")
    p.add_argument("--dependence_range", type=int, default=1, help="Dependence range in unit cells")
    p.add_argument("--kernel_beta", type=float, default=2.0, help="Kernel decay exponent of moving averages")
    p.add_argument("--lam", type=float, default=4.0, help="Ellipticity constant λ of the phases")
    p.add_argument("--K0", type=float, default=0.0, help="Bound on |a(0, x)|")
    p.add_argument("--seed", type=int, default=0, help="Base seed of the ensemble")
    p.add_argument("--mixing", type=str, default="finite-range", choices=MIXING_CLASSES)
    p.add_argument("--ensemble_id", type=str, default="checkerboard")
    p.add_argument("--table_nodes", type=int, default=17, help="Nodes per axis of tabulated phase integrands")


def add_solver_cli_args(p: ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-8, help="Duality-gap stopping tolerance per unit volume")
    p.add_argument("--max_iter", type=int, default=50, help="Newton iterations")
    p.add_argument("--cg_max_iter", type=int, default=500, help="CG iterations per Newton step")
    p.add_argument("--r_cell", type=int, default=3, help="Grid intervals per unit length of Dirichlet domains")


def add_represent_cli_args(p: ArgumentParser) -> None:
    p.add_argument("--rep_phase", type=ast.literal_eval, default=(1.0, 0.5), help="Phase (c, b, skew) to represent")
    p.add_argument("--rep_bound", type=float, default=2.0, help="Half-width of the table box")
    p.add_argument("--rep_nodes", type=int, default=17, help="Table nodes per axis")
    p.add_argument("--rep_samples", type=int, default=10_000, help="Sampled points of the representation check")
    p.add_argument("--rep_pairs", type=int, default=1000, help="Random pairs of the convexity window check")
    p.add_argument("--rep_tol", type=float, default=1e-6, help="Equality tolerance on the graph")
    p.add_argument("--graph_tol", type=float, default=1e-4, help="Distance from the graph counted as on it")
    p.add_argument("--convexity_tol", type=float, default=1e-8)
    p.add_argument("--selfduality_factor", type=float, default=2.0, help="Allowed residual in tabulation errors")


def add_homogenize_cli_args(p: ArgumentParser) -> None:
    p.add_argument("--levels", type=ast.literal_eval, default=[1, 2], help="Cube levels of the scale sweep")
    p.add_argument("--samples", type=int, default=8, help="Realizations per level")
    p.add_argument("--p", type=ast.literal_eval, default=(1.0, 0.0))
    p.add_argument("--q", type=ast.literal_eval, default=(2.0, 0.0))
    p.add_argument("--qstar", type=ast.literal_eval, default=(2.0, 0.0))
    p.add_argument("--pstar", type=ast.literal_eval, default=(1.0, 0.0))
    p.add_argument("--gap_ratio", type=float, default=0.5, help="Required gap(top level) / gap(first level)")
    p.add_argument("--n_top", type=int, default=1, help="Cube level of the homogenized model")
    p.add_argument("--pq_bound", type=float, default=1.0, help="Half-width of the (p, q) table")
    p.add_argument("--pq_nodes", type=int, default=3, help="Table nodes per axis")
    p.add_argument("--model_samples", type=int, default=4, help="Realizations of the model estimate")
    p.add_argument("--bracket_ceiling", type=float, default=0.1, help="Bracket width above which a model is flagged")
    p.add_argument("--abar_tol", type=float, default=1e-6, help="Consistency tolerance of ā against ∂_q F̄")
    p.add_argument("--error_levels", type=ast.literal_eval, default=[], help="Levels of the error_E medians")
    p.add_argument("--error_seeds", type=int, default=8, help="Realizations per error_E level")
    p.add_argument("--error_p", type=ast.literal_eval, default=(0.5, 0.0), help="Slope p of the error_E study")
    p.add_argument("--error_q", type=ast.literal_eval, default=(0.5, 0.0), help="Flux q of the error_E study")
    p.add_argument("--oracle_check", type=str2bool, default=False, help="Compare ā with the periodic cell oracle")
    p.add_argument("--oracle_resolution", type=int, default=8, help="Oracle voxels per unit cell")
    p.add_argument("--oracle_tol", type=float, default=0.05, help="Relative operator-norm tolerance")
    p.add_argument("--model", type=str, default=None, help="Saved model directory to reuse instead of estimating")


def add_dirichlet_cli_args(p: ArgumentParser) -> None:
    p.add_argument("--radii", type=ast.literal_eval, default=[3, 5, 9], help="Domain radii R")
    p.add_argument("--seeds", type=ast.literal_eval, default=[0, 1, 2, 3], help="Realization seeds")
    p.add_argument("--shape", type=str, default="ball", choices=("box", "ball"))
    p.add_argument("--slope", type=ast.literal_eval, default=(1.0, 0.0), help="Affine boundary data ξ")
    p.add_argument("--rhs", type=float, default=0.0, help="Constant right-hand side")
    p.add_argument("--C_lip", type=float, default=10.0, help="Lipschitz profile constant")
    p.add_argument(
        "--C_lip_curve", type=ast.literal_eval, default=[1.0, 2.0, 5.0, 10.0, 20.0], help="C_lip values of r0_curve.csv"
    )
    p.add_argument("--lipschitz_radii", type=ast.literal_eval, default=[1.0, 2.0, 4.0], help="Profile ball radii")
    p.add_argument("--r0_fraction", type=float, default=0.25, help="r₀ must not exceed this fraction of R")
    p.add_argument("--r0_quantile", type=float, default=0.95, help="Share of seeds that must meet the r₀ bound")
    p.add_argument("--m_exponent", type=float, default=4.0, help="Exponent p of the rhs term of M")
    p.add_argument("--meyers_delta", type=float, default=0.1, help="Meyers exponent δ")
    p.add_argument("--caccioppoli_C", type=float, default=10.0, help="Bound on the Caccioppoli ratio")


def add_mixing_cli_args(p: ArgumentParser) -> None:
    p.add_argument("--distances", type=ast.literal_eval, default=[0, 1, 2, 3, 4], help="Probe distances in cells")
    p.add_argument("--mixing_samples", type=int, default=400, help="Realizations of the covariance probe")
    p.add_argument("--sigmas", type=float, default=3.0, help="Standard errors allowed around the oracle")


def add_check_cli_args(p: ArgumentParser) -> None:
    p.add_argument("--check_level", type=int, default=1, help="Parent cube level of the subadditivity checks")
    p.add_argument("--check_count", type=int, default=5, help="Random tuples per check")
    p.add_argument("--kernel_tol", type=float, default=1e-10, help="Tolerance of the Helmholtz/solenoidal checks")
    p.add_argument("--poisson_tol", type=float, default=0.01, help="Relative L² error of the paraboloid solve")


def build_parser() -> VarhomArgumentParser:
    p = VarhomArgumentParser(prog="varhom", description="Homogenization studies")
    add_run_cli_args(p)
    add_ensemble_cli_args(p)
    add_solver_cli_args(p)
    add_represent_cli_args(p)
    add_homogenize_cli_args(p)
    add_dirichlet_cli_args(p)
    add_mixing_cli_args(p)
    add_check_cli_args(p)
    return p


def read_config_file(parser: ArgumentParser, path: str) -> dict:
    """
    Values of an experiment file, converted with the parser's types.

    Sections only group keys; every key must name a parser option (with ``_`` or ``-``).
    """
    reader = configparser.ConfigParser(interpolation=None)
    reader.optionxform = str
    try:
        with open(path) as f:
            reader.read_file(f)
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e}") from e
    except configparser.Error as e:
        raise ConfigError("config", f"malformed experiment file {path}: {e}") from e

    actions = {a.dest: a for a in parser._actions}
    values = {}
    for section in reader.sections():
        for key, raw in reader.items(section):
            dest = key.replace("-", "_")
            if dest not in actions or dest in ("config", "help"):
                raise ConfigError(key, f"unknown key in section [{section}]")
            action = actions[dest]
            try:
                value = action.type(raw) if action.type is not None else raw
            except (ValueError, SyntaxError, TypeError, ArgumentTypeError) as e:
                raise ConfigError(key, f"cannot parse {raw!r}: {e}") from e
            if action.choices is not None and value not in action.choices:
                raise ConfigError(key, f"{value!r} is not one of {list(action.choices)}")
            values[dest] = value
    return values


def _positive(cfg: AttrDict, keys: Sequence[str]) -> None:
    for key in keys:
        if not cfg[key] > 0:
            raise ConfigError(key, f"must be positive, got {cfg[key]}")


def _vector(cfg: AttrDict, key: str) -> None:
    try:
        cfg[key] = tuple(float(v) for v in cfg[key])
    except TypeError as e:
        raise ConfigError(key, f"expected a pair of numbers, got {cfg[key]!r}") from e
    if len(cfg[key]) != 2:
        raise ConfigError(key, f"expected a pair of numbers, got {cfg[key]!r}")


def validate(cfg: AttrDict) -> AttrDict:
    if cfg.command is None:
        raise ConfigError("command", "no command given on the command line or in the experiment file")
    _positive(
        cfg,
        [
            "jobs",
            "lam",
            "table_nodes",
            "tol",
            "max_iter",
            "cg_max_iter",
            "r_cell",
            "rep_bound",
            "rep_nodes",
            "rep_samples",
            "rep_pairs",
            "samples",
            "pq_bound",
            "model_samples",
            "bracket_ceiling",
            "C_lip",
            "m_exponent",
            "meyers_delta",
            "caccioppoli_C",
            "mixing_samples",
            "sigmas",
            "check_count",
            "oracle_resolution",
            "oracle_tol",
        ],
    )
    for key in ("p", "q", "qstar", "pstar", "slope", "error_p", "error_q"):
        _vector(cfg, key)
    for key in ("levels", "radii", "seeds", "lipschitz_radii", "C_lip_curve", "distances", "error_levels", "phases"):
        if not isinstance(cfg[key], (list, tuple)):
            raise ConfigError(key, f"expected a list, got {cfg[key]!r}")
    if not cfg.seeds:
        raise ConfigError("seeds", "seed list is empty")
    if not cfg.phases:
        raise ConfigError("phases", "phase list is empty")
    if not 0 < cfg.r0_fraction <= 1 or not 0 < cfg.r0_quantile <= 1:
        raise ConfigError("r0_fraction", "r0_fraction and r0_quantile must lie in (0, 1]")
    return cfg


def parse_varhom_args(argv: Optional[List[str]] = None) -> AttrDict:
    """
    Command line, then the experiment file named by ``--config`` as parser defaults, then the command line
    again, so that explicit flags override file values.
    """
    parser = build_parser()
    partial, _ = parser.parse_known_args(argv)
    if partial.config is not None:
        parser.set_defaults(**read_config_file(parser, partial.config))
    cfg = AttrDict(vars(parser.parse_args(argv)))
    return validate(cfg)


def ensemble_spec(cfg: AttrDict) -> EnsembleSpec:
    phases = []
    for entry in cfg.phases:
        entry = tuple(entry) if isinstance(entry, (list, tuple)) else (entry,)
        try:
            phases.append(Phase(*(tuple(v) if isinstance(v, (list, tuple)) else float(v) for v in entry)))
        except TypeError as e:
            raise ConfigError("phases", f"bad phase {entry!r}: {e}") from e
    return EnsembleSpec(
        kind=cfg.ensemble_kind,
        phases=tuple(phases),
        p1=cfg.p1,
        range=cfg.dependence_range,
        kernel_beta=cfg.kernel_beta,
        lam=cfg.lam,
        K0=cfg.K0,
        seed=cfg.seed + cfg.seed_offset,
        mixing=cfg.mixing,
        ensemble_id=cfg.ensemble_id,
        table_nodes=cfg.table_nodes,
    )
