"""levyhedge command line: TOML experiment configs, pipeline wiring and result files."""

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from backtest import Backtest, EpsilonRule, representation_check
from exceptions import (
    AssumptionViolated,
    ConfigError,
    DivergentExponentialMoment,
    LevyHedgeError,
    NoApplicableCase,
    NumericalError,
)
from levy_core import (
    check_mmm_assumption,
    classify_small_jumps,
    market_coefficients,
    minimal_martingale_measure,
    symmetric_jump_condition,
    table1_parameters,
    triplet_from_dict,
)
from metrics import Direction, ErrorKind, Verdict, reverse_holder_constant, weight_regularity
from payoffs import Payoff
from pricing import Method, SemigroupEvaluator, lrm_surface, strategy_table
from simulate import adapted_time_net, check_cutoff, dump_path, hedge_run, oracle_path, sample_path, write_hedge_runs
from strategies.BuyHold import BuyHold
from strategies.LRM import LRM
from utils import (
    COS_TERMS,
    COS_TRUNCATION,
    EXIT_INCONSISTENT,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    FINE_GRID,
    MC_PATHS,
    MIN_PATHS,
    MIN_RATE_SAMPLES,
    N_VALUES,
    ORACLE_REFINEMENT,
    ORACLE_TOLERANCE,
    PATHS_PER_N,
    PROG,
    SURFACE_PRICES,
    SURFACE_TIMES,
    SURFACE_WIDTH,
    VERSION,
    config_hash,
    setup_logging,
    write_csv,
    write_json,
)

logger = logging.getLogger(__name__)

COMMANDS = ("coeffs", "mmm", "strategy", "simulate", "rates", "repcheck")
SEED_VARIABLE = "LEVYHEDGE_SEED"
RH_EXPONENTS = (2.0, 3.0)

DEFAULTS = {
    "seed": 0,
    "maturity": 1.0,
    "output_dir": ".",
    "model": {"gamma_s": 0.0, "sigma": 0.2, "nu": {"family": "zero", "params": {}}},
    "payoff": {"kind": "call", "strike": 1.0},
    "experiment": {
        "n_values": N_VALUES,
        "paths_per_n": PATHS_PER_N,
        "epsilon_rule": "power",
        "epsilon": 0.1,
        "error_kind": "l2",
        "p": 2.0,
        "min_paths": MIN_PATHS,
        "grid_size": FINE_GRID,
        "oracle_refinement": ORACLE_REFINEMENT,
        "oracle_tolerance": ORACLE_TOLERANCE,
    },
    "numerics": {
        "method": "cos",
        "cos_terms": COS_TERMS,
        "truncation": COS_TRUNCATION,
        "mc_paths": MC_PATHS,
        "surface_times": SURFACE_TIMES,
        "surface_prices": SURFACE_PRICES,
        "surface_width": SURFACE_WIDTH,
    },
    "strategy": {
        "kind": "lrm",
        "shares": 1.0,
        "jump_method": "fourier",
        "t_grid": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        "y_grid": [0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5],
    },
    "repcheck": {"levels": [2 ** 12, 2 ** 13, 2 ** 14], "paths": 2000},
    "simulate": {"paths": 4},
    "replay": {"file": ""},
}


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "{}: error: {}\n".format(self.prog, message))


@dataclass(frozen=True)
class Table1Override:
    r: float
    theta: float
    kappa: Optional[float] = None


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Parsed experiment document.

    Params

      - ``model`` / ``payoff``: LevyTriplet and Payoff
      - ``table1_case``: optional (r, θ, κ) replacing the automatic case choice
      - ``n_values`` / ``paths_per_n``: net sizes and paths per net size
      - ``epsilon_rule``: ``power`` (ε = n^{-1/(2r)}), ``symmetric`` (ε = n^{-1/2}) or ``fixed`` (``epsilon``)
      - ``kappa``: threshold exponent, (1-θ)/2 when omitted
      - ``eta_weight``: η of the Φ(η) weight, the payoff's Hölder exponent when omitted
    """

    model: object
    payoff: Payoff
    seed: int = 0
    maturity: float = 1.0
    output_dir: str = "."
    table1_case: Optional[Table1Override] = None
    n_values: tuple = tuple(N_VALUES)
    paths_per_n: int = PATHS_PER_N
    epsilon_rule: str = "power"
    epsilon: float = 0.1
    kappa: Optional[float] = None
    eta_weight: Optional[float] = None
    error_kind: str = "l2"
    p: float = 2.0
    min_paths: int = MIN_PATHS
    grid_size: int = FINE_GRID
    oracle_refinement: int = ORACLE_REFINEMENT
    oracle_tolerance: float = ORACLE_TOLERANCE
    method: str = "cos"
    cos_terms: int = COS_TERMS
    truncation: float = COS_TRUNCATION
    mc_paths: int = MC_PATHS
    surface_times: int = SURFACE_TIMES
    surface_prices: int = SURFACE_PRICES
    surface_width: float = SURFACE_WIDTH
    strategy_kind: str = "lrm"
    shares: float = 1.0
    jump_method: str = "fourier"
    t_grid: tuple = ()
    y_grid: tuple = ()
    rep_levels: tuple = ()
    rep_paths: int = 2000
    simulate_paths: int = 4
    replay_file: str = ""
    digest: str = field(default="", compare=False)


def _section(document, name):
    value = document.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(name, "expected a table")
    return value


def _get(section, key, default, cast, path):
    if key not in section:
        return default
    try:
        return cast(section[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError("{}.{}".format(path, key) if path else key, "invalid value {!r}".format(section[key])) from exc


def _choice(value, choices, path):
    if value not in choices:
        raise ConfigError(path, "expected one of {}, got {!r}".format(list(choices), value))
    return value


def _floats(values):
    return tuple(float(v) for v in values)


def _ints(values):
    return tuple(int(v) for v in values)


def config_from_dict(document, digest=""):
    """ExperimentConfig from a parsed TOML document

    :raises ConfigError: with the dotted path of the offending field
    """
    unknown = set(document) - set(DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section or key")
    if "model" not in document:
        raise ConfigError("model", "missing section")
    model = triplet_from_dict(_section(document, "model"), "model")
    payoff_spec = _section(document, "payoff") or DEFAULTS["payoff"]
    payoff = Payoff.from_dict(payoff_spec, "payoff")

    exp = _section(document, "experiment")
    num = _section(document, "numerics")
    strat = _section(document, "strategy")
    rep = _section(document, "repcheck")
    sim = _section(document, "simulate")
    replay = _section(document, "replay")

    seed = _get(document, "seed", 0, int, "")
    if os.environ.get(SEED_VARIABLE):
        try:
            seed = int(os.environ[SEED_VARIABLE])
        except ValueError as exc:
            raise ConfigError(SEED_VARIABLE, "expected an integer") from exc
    maturity = _get(document, "maturity", 1.0, float, "")
    if not maturity > 0:
        raise ConfigError("maturity", "must be positive")

    override = None
    if "table1_case" in exp:
        case = exp["table1_case"]
        if not isinstance(case, dict) or "r" not in case or "theta" not in case:
            raise ConfigError("experiment.table1_case", "expected a table with r and theta")
        path = "experiment.table1_case"
        override = Table1Override(
            _get(case, "r", None, float, path), _get(case, "theta", None, float, path), _get(case, "kappa", None, float, path)
        )
        if not 0.0 < override.theta <= 1.0:
            raise ConfigError(path + ".theta", "must lie in (0, 1]")
        if not override.r >= 1.0:
            raise ConfigError(path + ".r", "must be at least 1")

    n_values = _get(exp, "n_values", tuple(N_VALUES), _ints, "experiment")
    if not n_values or any(n < 1 for n in n_values) or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ConfigError("experiment.n_values", "expected strictly increasing positive integers")
    if exp.get("error_kind") == "bmo" and any(n % n_values[0] for n in n_values):
        raise ConfigError("experiment.n_values", "weighted BMO rates need net sizes that are multiples of the smallest one")
    kappa = _get(exp, "kappa", None, float, "experiment")
    if kappa is not None and not 0.0 <= kappa < 0.5:
        raise ConfigError("experiment.kappa", "must lie in [0, 1/2)")
    eta_weight = _get(exp, "eta_weight", None, float, "experiment")
    if eta_weight is not None and not 0.0 <= eta_weight <= 1.0:
        raise ConfigError("experiment.eta_weight", "must lie in [0, 1]")
    epsilon = _get(exp, "epsilon", 0.1, float, "experiment")
    if not epsilon > 0:
        raise ConfigError("experiment.epsilon", "must be positive")

    return ExperimentConfig(
        model=model,
        payoff=payoff,
        seed=seed,
        maturity=maturity,
        output_dir=_get(document, "output_dir", ".", str, ""),
        table1_case=override,
        n_values=n_values,
        paths_per_n=_get(exp, "paths_per_n", PATHS_PER_N, int, "experiment"),
        epsilon_rule=_choice(exp.get("epsilon_rule", "power"), ("power", "fixed", "symmetric"), "experiment.epsilon_rule"),
        epsilon=epsilon,
        kappa=kappa,
        eta_weight=eta_weight,
        error_kind=_choice(exp.get("error_kind", "l2"), [k.value for k in ErrorKind], "experiment.error_kind"),
        p=_get(exp, "p", 2.0, float, "experiment"),
        min_paths=_get(exp, "min_paths", MIN_PATHS, int, "experiment"),
        grid_size=_get(exp, "grid_size", FINE_GRID, int, "experiment"),
        oracle_refinement=_get(exp, "oracle_refinement", ORACLE_REFINEMENT, int, "experiment"),
        oracle_tolerance=_get(exp, "oracle_tolerance", ORACLE_TOLERANCE, float, "experiment"),
        method=_choice(num.get("method", "cos"), [m.value for m in Method], "numerics.method"),
        cos_terms=_get(num, "cos_terms", COS_TERMS, int, "numerics"),
        truncation=_get(num, "truncation", COS_TRUNCATION, float, "numerics"),
        mc_paths=_get(num, "mc_paths", MC_PATHS, int, "numerics"),
        surface_times=_get(num, "surface_times", SURFACE_TIMES, int, "numerics"),
        surface_prices=_get(num, "surface_prices", SURFACE_PRICES, int, "numerics"),
        surface_width=_get(num, "surface_width", SURFACE_WIDTH, float, "numerics"),
        strategy_kind=_choice(strat.get("kind", "lrm"), ("lrm", "buy_hold"), "strategy.kind"),
        shares=_get(strat, "shares", 1.0, float, "strategy"),
        jump_method=_choice(strat.get("jump_method", "fourier"), ("fourier", "quadrature"), "strategy.jump_method"),
        t_grid=_get(strat, "t_grid", tuple(DEFAULTS["strategy"]["t_grid"]), _floats, "strategy"),
        y_grid=_get(strat, "y_grid", tuple(DEFAULTS["strategy"]["y_grid"]), _floats, "strategy"),
        rep_levels=_get(rep, "levels", tuple(DEFAULTS["repcheck"]["levels"]), _ints, "repcheck"),
        rep_paths=_get(rep, "paths", 2000, int, "repcheck"),
        simulate_paths=_get(sim, "paths", 4, int, "simulate"),
        replay_file=_get(replay, "file", "", str, "replay"),
        digest=digest,
    )


def load_config(filename):
    """Read, hash and parse a TOML experiment file"""
    try:
        with open(filename, "rb") as f:
            raw = f.read()
    except OSError as exc:
        raise ConfigError("--config", "cannot read {}: {}".format(filename, exc.strerror)) from exc
    try:
        document = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(filename, str(exc)) from exc
    return config_from_dict(document, config_hash(raw))


def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join("{} = {}".format(k, _toml_value(v)) for k, v in value.items()) + "}"
    return repr(value)


def defaults_document():
    """Default configuration as TOML text"""
    lines, tables = [], []
    for key, value in DEFAULTS.items():
        if isinstance(value, dict):
            tables.append((key, value))
        else:
            lines.append("{} = {}".format(key, _toml_value(value)))
    for name, table in tables:
        lines.append("")
        lines.append("[{}]".format(name))
        for key, value in table.items():
            lines.append("{} = {}".format(key, _toml_value(value)))
    return "\n".join(lines) + "\n"


# Pipeline


def build_evaluator(config, change):
    return SemigroupEvaluator(
        change.starred_triplet,
        config.payoff,
        config.maturity,
        Method(config.method),
        terms=config.cos_terms,
        truncation=config.truncation,
        paths=config.mc_paths,
        seed=config.seed,
    )


def rate_parameters(config):
    """(r, θ, κ, η) of the experiment, from the override or the automatic case choice"""
    triplet = config.model
    if config.table1_case is not None:
        case = config.table1_case
        kappa = case.kappa if case.kappa is not None else config.kappa
        kappa = 0.5 * (1.0 - case.theta) if kappa is None else kappa
        eta = config.eta_weight if config.eta_weight is not None else (config.payoff.holder_eta or 0.0)
        return case.r, case.theta, kappa, eta
    choice = table1_parameters(triplet.sigma, classify_small_jumps(triplet.nu), config.payoff)
    logger.info("case %s: r=%.4g theta=%.4g", choice.case.value, choice.r, choice.theta)
    kappa = config.kappa if config.kappa is not None else choice.kappa
    eta = config.eta_weight if config.eta_weight is not None else choice.eta
    return choice.r, choice.theta, kappa, eta


def epsilon_rule(config, r):
    """ε-rule of the experiment; the symmetric rule needs the symmetric-jump condition and predicts slope -1/2"""
    if config.epsilon_rule != "symmetric":
        return EpsilonRule(config.epsilon_rule, r, config.epsilon)
    check = symmetric_jump_condition(config.model.nu)
    if not check.holds:
        raise AssumptionViolated("the symmetric ε-rule needs compensated big jumps bounded in r")
    return EpsilonRule("symmetric", 1.0)


def build_strategy(config, coeffs=None, change=None):
    if config.strategy_kind == "buy_hold":
        return BuyHold(shares=config.shares, maturity=config.maturity)
    ev = build_evaluator(config, change)
    surface = lrm_surface(
        ev,
        coeffs,
        config.model.nu,
        times=config.surface_times,
        prices=config.surface_prices,
        width=config.surface_width,
        seed=config.seed,
    )
    return LRM(surface=surface)


def _measure_change(config):
    coeffs = market_coefficients(config.model)
    return coeffs, minimal_martingale_measure(config.model, coeffs)


def _emit(document, filename, config):
    write_json(document, filename, config.digest)
    print(json.dumps(document, indent=2, default=str))


def cmd_coeffs(config, out):
    triplet = config.model
    coeffs = market_coefficients(triplet)
    check = check_mmm_assumption(triplet, coeffs)
    small = classify_small_jumps(triplet.nu)
    document = {
        "model": triplet.to_dict(),
        "coefficients": coeffs.to_dict(),
        "martingale": coeffs.gamma_s == 0.0,
        "mmm": {"holds": check.holds, "margin": check.margin, "via_sufficient": check.via_sufficient},
        "small_jumps": {
            "bg_index": small.bg_index,
            "s1_alpha": small.s1_alpha,
            "s2_alpha": small.s2_alpha,
            "first_moment_finite": small.first_moment_finite,
        },
    }
    try:
        choice = table1_parameters(triplet.sigma, small, config.payoff)
        document["table1"] = {"case": choice.case.value, "r": choice.r, "theta": choice.theta, "kappa": choice.kappa}
    except NoApplicableCase as err:
        document["table1"] = {"case": None, "reason": str(err)}
    _emit(document, os.path.join(out, "coeffs.json"), config)
    return EXIT_OK


def cmd_mmm(config, out):
    coeffs, change = _measure_change(config)
    constants = {}
    for direction in Direction:
        for s in RH_EXPONENTS:
            key = "{}_s{:g}".format(direction.value, s)
            try:
                constants[key] = reverse_holder_constant(change.v_triplet, s, config.maturity, direction)
            except DivergentExponentialMoment as err:
                logger.info("no reverse Hölder constant %s: %s", key, err)
                constants[key] = None
    eta = config.eta_weight
    if eta is None:
        eta = config.payoff.holder_eta if config.payoff.holder_eta is not None else 1.0
    document = {
        "u_coefficient": change.u_coefficient,
        "brownian_shift": change.brownian_shift,
        "tradeoff_slope": coeffs.tradeoff_slope,
        "starred": change.starred_triplet.to_dict(),
        "u": change.u_triplet.to_dict(),
        "v": change.v_triplet.to_dict(),
        "reverse_holder": constants,
        "weight_regularity": {
            "q{:g}".format(q): weight_regularity(config.model, eta, q).sufficient for q in RH_EXPONENTS
        },
    }
    _emit(document, os.path.join(out, "mmm.json"), config)
    return EXIT_OK


def cmd_strategy(config, out):
    coeffs, change = _measure_change(config)
    ev = build_evaluator(config, change)
    frame = strategy_table(ev, coeffs, config.model.nu, config.t_grid, config.y_grid)
    write_csv(frame, os.path.join(out, "strategy.csv"), config.digest)
    logger.info("wrote %d strategy rows", len(frame))
    return EXIT_OK


def cmd_simulate(config, out):
    r, theta, kappa, _ = rate_parameters(config)
    coeffs, change = _measure_change(config)
    strategy = build_strategy(config, coeffs, change)
    rule = epsilon_rule(config, r)
    nets = [adapted_time_net(n, theta, config.maturity) for n in config.n_values]
    knots = np.unique(np.concatenate([net.knots for net in nets]))
    runs = []
    for index in range(config.simulate_paths):
        path = sample_path(config.model, config.maturity, config.grid_size, seed=config.seed, path_index=index, extra_times=knots)
        dump_path(path, os.path.join(out, "path_{}.bin".format(index)))
        oracle = oracle_path(
            path, strategy, max(config.n_values), config.oracle_refinement, config.oracle_tolerance, knots, strict=False
        )
        if index == 0:
            for net in nets:
                check_cutoff(path, rule(net.n), kappa)
        runs += [hedge_run(path, strategy, net, rule(net.n), kappa, oracle) for net in nets]
    write_hedge_runs(runs, os.path.join(out, "hedge_runs.csv"), config.digest)
    return EXIT_OK


def cmd_rates(config, out, threads=1):
    r, theta, kappa, eta = rate_parameters(config)
    rule = epsilon_rule(config, r)
    if config.replay_file:
        strategy = None
    else:
        if config.paths_per_n < MIN_RATE_SAMPLES:
            raise ConfigError("experiment.paths_per_n", "rate experiments need at least {} paths".format(MIN_RATE_SAMPLES))
        coeffs, change = _measure_change(config)
        strategy = build_strategy(config, coeffs, change)
    backtest = Backtest(
        config.model,
        strategy,
        config.maturity,
        config.n_values,
        config.paths_per_n,
        theta,
        kappa,
        rule,
        seed=config.seed,
        grid_size=config.grid_size,
        threads=threads,
        path_to_save=out,
        digest=config.digest,
        error_kind=ErrorKind(config.error_kind),
        p=config.p,
        eta=eta,
        min_paths=config.min_paths,
        oracle_refinement=config.oracle_refinement,
        oracle_tolerance=config.oracle_tolerance,
    )
    report = backtest.replay(config.replay_file) if config.replay_file else backtest.run()
    print("slope {:.4f} ci [{:.4f}, {:.4f}] predicted {:.4f}: {}".format(
        report.slope, report.slope_ci[0], report.slope_ci[1], report.predicted_slope, report.verdict.value
    ))
    return EXIT_INCONSISTENT if report.verdict is Verdict.INCONSISTENT else EXIT_OK


def cmd_repcheck(config, out, threads=1):
    _, change = _measure_change(config)
    ev = build_evaluator(config, change)
    frame = representation_check(
        ev,
        config.rep_levels,
        config.rep_paths,
        seed=config.seed,
        threads=threads,
        path_to_save=out,
        digest=config.digest,
        times=config.surface_times,
        prices=config.surface_prices,
        width=config.surface_width,
    )
    residuals = frame["residual"].to_numpy()
    monotone = bool(np.all(np.diff(residuals) < 0))
    for row in frame.itertuples():
        print("m={} residual {:.4e} ({:.2%} of the payoff norm)".format(row.grid_size, row.residual, row.relative))
    if not monotone and len(residuals) > 1 and math.isfinite(residuals[-1]):
        logger.warning("representation residual does not decrease over the grid levels")
    return EXIT_OK


def make_parser():
    parser = ArgumentParser(prog=PROG, description="Local risk-minimizing hedges in exponential Lévy models")
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="TOML experiment file")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument("--out", help="output directory, the config's output_dir by default")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--print-defaults", action="store_true", help="print the default configuration")
    parser.add_argument("--version", action="version", version="%(prog)s " + VERSION)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    if args.print_defaults:
        sys.stdout.write(defaults_document())
        return EXIT_OK
    if args.command is None or args.config is None:
        parser.error("a command and --config are required")
    if args.threads < 1:
        parser.error("--threads must be positive")
    try:
        config = load_config(args.config)
        out = args.out or config.output_dir
        os.makedirs(out, exist_ok=True)
        command = globals()["cmd_" + args.command]
        if args.command in ("rates", "repcheck"):
            return command(config, out, threads=args.threads)
        return command(config, out)
    except ConfigError as err:
        logger.error("configuration error: %s", err)
        print("{}: configuration error: {}".format(PROG, err), file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as err:
        logger.error("numerical failure: %s", err)
        print("{}: numerical failure: {}".format(PROG, err), file=sys.stderr)
        return EXIT_NUMERICAL
    except LevyHedgeError as err:
        logger.error("%s: %s", type(err).__name__, err)
        print("{}: {}: {}".format(PROG, type(err).__name__, err), file=sys.stderr)
        return EXIT_NUMERICAL
