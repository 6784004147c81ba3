"""
Command-line front end: argument parsing, command dispatch and report output
"""

import argparse
import csv
import io
import logging
import sys
import traceback

import numpy as np

import bellbound_conf
from src.core.bounds import BoundContext, compare
from src.core.dilation import (
    DilationBounder, lhv_certificate_from_tensor_positive, separable_source_operator,
    solve_source_operator, tensor_positivity_check
)
from src.core.errors import (
    BellBoundError, InfeasibleError, NonConvergenceError, TensorPositivityError, UnboundedError,
    ValidationError
)
from src.core.lhv import lhv_constants, lqhv_from_source, maximal_violation, quantum_range
from src.core.quantum import joint_probabilities, random_povms, state_from_descriptor
from src.core.run_config import OUTPUT_FORMATS, RunConfig
from src.core.scenario import ScenarioSpec, behavior_average, named_functional
from src.core.seesaw import SeesawOptimizer
from src.utils.helpers import format_value, get_logger, parse_int_list, set_log_level
from src.utils.serialization import (
    behavior_from_dict, behavior_to_dict, canonical_json, dump_json, functional_from_dict,
    load_json, povms_from_dict, source_operator_to_dict
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3
EXIT_BOUND_VIOLATION = 4

logger = get_logger("src.cli")


def _add_common(parser, default_format="json"):
    """Flags shared by every command"""
    parser.add_argument("--seed", type=int, default=0, help="Seed for every randomized search")
    parser.add_argument("--restarts", type=int, default=None, help="Restarts of the alternating searches")
    parser.add_argument("--format", dest="output_format", choices=OUTPUT_FORMATS, default=default_format)
    parser.add_argument("--cap-dim", type=int, default=None, help="Cap on the copied space dimension")
    parser.add_argument("--tolerance", type=float, default=None, help="Feasibility tolerance")
    parser.add_argument("--backend", choices=["simplex", "highs"], default=None, help="LP backend")
    parser.add_argument("--verbose", action="store_true", help="Log debug messages")


def build_parser():
    """Argument parser with one subcommand per analysis"""
    parser = argparse.ArgumentParser(
        prog="bellbound",
        description="Classical bounds, maximal Bell violations and dilation bounds for finite scenarios")
    parser.add_argument("--version", action="version", version=f"bellbound {bellbound_conf.VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("classical-bound", help="LHV constants of a Bell functional")
    p.add_argument("functional", help="Functional JSON file or shorthand (chsh, mermin:N, cglmp:d)")
    _add_common(p)

    p = commands.add_parser("violation", help="Maximal Bell violation of a behavior or a state")
    p.add_argument("--state", help="State descriptor or JSON file")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--povm", help="POVM family JSON file")
    source.add_argument("--optimize", metavar="FUNCTIONAL", help="Seesaw-optimize measurements for a functional")
    source.add_argument("--behavior", help="Behavior JSON file")
    p.add_argument("--functional", help="Functional to evaluate on the behavior")
    p.add_argument("--settings", help="Settings per party for random measurements, e.g. 2,2")
    p.add_argument("--outcomes", help="Outcomes per party for random measurements, e.g. 2,2")
    _add_common(p)

    p = commands.add_parser("certify-lhv", help="LHV certificate from a tensor positive source operator")
    p.add_argument("--state", required=True, help="State descriptor or JSON file")
    p.add_argument("--settings", required=True, help="Settings per party, e.g. 2,2")
    p.add_argument("--povm", help="POVM family JSON file (random projective measurements otherwise)")
    p.add_argument("--outcomes", help="Outcomes per party for random measurements")
    _add_common(p)

    p = commands.add_parser("bound-from-dilation", help="Upper bound on the maximal violation from source operators")
    p.add_argument("--state", required=True, help="State descriptor or JSON file")
    p.add_argument("--settings", required=True, help="Settings per party, e.g. 2,2")
    p.add_argument("--candidates", help="Comma-separated candidates: product,expansion,solve,trace-norm")
    p.add_argument("--violation", type=float, default=None, help="Observed violation to compare against")
    p.add_argument("--export", help="Write the best source operator to this JSON file")
    _add_common(p)

    p = commands.add_parser("bounds-table", help="Evaluate the closed-form bound catalog")
    p.add_argument("--dims", required=True, help="Site dimensions, e.g. 2x2")
    p.add_argument("--settings", required=True, help="Settings per party, e.g. 2,2")
    p.add_argument("--outcomes", help="Outcomes per party, e.g. 2,2")
    p.add_argument("--family", choices=["singlet", "ghz", "gghz", "product", "separable", "mixed"])
    p.add_argument("--phi", type=float, default=None, help="Angle of the generalized GHZ state")
    p.add_argument("--violation", type=float, default=None, help="Violation to check against the table")
    _add_common(p, default_format="csv")
    return parser


def config_from_args(args):
    """RunConfig from parsed flags"""
    settings = parse_int_list(args.settings) if getattr(args, "settings", None) else None
    candidates = getattr(args, "candidates", None)
    inputs = [v for v in (getattr(args, "povm", None), getattr(args, "behavior", None)) if v]
    functional = getattr(args, "functional", None) or getattr(args, "optimize", None)
    return RunConfig(
        args.command,
        inputs=inputs,
        state=getattr(args, "state", None),
        povm=getattr(args, "povm", None),
        functional=functional,
        settings=settings,
        seed=args.seed,
        restarts=args.restarts,
        tolerance=args.tolerance,
        cap_dim=args.cap_dim,
        output_format=args.output_format,
        backend=args.backend,
        candidates=candidates.split(",") if candidates else None,
    )


def load_functional(text):
    """Functional from a JSON file or a named shorthand"""
    if text.lower().endswith(".json"):
        return functional_from_dict(load_json(text), where=text)
    return named_functional(text)


def _scenario_for(n_parties, settings, outcomes):
    """Scenario with +1/-1 outcomes for two-outcome sites and 0..L-1 otherwise"""
    values = []
    for count in outcomes:
        values.append([1.0, -1.0] if count == 2 else list(range(count)))
    return ScenarioSpec(n_parties, settings, values)


def _settings_for(cfg, n_parties):
    settings = cfg.settings or [2] * n_parties
    if len(settings) != n_parties:
        raise ValidationError(f"Expected {n_parties} setting counts, got {len(settings)}")
    return settings


def _measurements(cfg, args, state):
    """POVMs from a file, or seeded random projective measurements"""
    if getattr(args, "povm", None):
        return povms_from_dict(load_json(args.povm), where=args.povm)
    settings = _settings_for(cfg, state.n_parties)
    outcomes = parse_int_list(args.outcomes) if args.outcomes else [2] * state.n_parties
    scenario = _scenario_for(state.n_parties, settings, outcomes)
    return random_povms(scenario, state.dims, np.random.default_rng(cfg.seed))


def _constants_dict(constants):
    return {
        "b_inf": constants.b_inf,
        "b_sup": constants.b_sup,
        "b_max": constants.b_max,
        "degenerate": constants.degenerate,
        "witness_sup": constants.witness_sup.to_list(),
        "witness_inf": constants.witness_inf.to_list(),
    }


def cmd_classical_bound(cfg, args):
    """B^inf, B^sup and their witnesses"""
    functional = load_functional(args.functional)
    constants = lhv_constants(functional, allow_degenerate=True)
    if constants.degenerate:
        logger.warning("Functional is degenerate (b_max = 0); normalized violations are undefined")
    report = {"scenario": str(functional.scenario), "strategy_count": functional.scenario.strategy_count}
    report.update(_constants_dict(constants))
    return report, None, EXIT_OK


def cmd_violation(cfg, args):
    """Behavior, maximal violation, certificate summary and bound ledger"""
    state = state_from_descriptor(args.state, seed=cfg.seed) if args.state else None
    functional = None
    report = {}

    if args.behavior:
        behavior = behavior_from_dict(load_json(args.behavior), where=args.behavior)
    else:
        if state is None:
            raise ValidationError("violation needs --state unless --behavior is given")
        if args.optimize:
            functional = load_functional(args.optimize)
            optimizer = SeesawOptimizer(restarts=cfg.restarts, seed=cfg.seed, threads=cfg.threads)
            result = optimizer.optimize(state, functional)
            povms = result.povms
            report["seesaw"] = {"value": result.value, "converged": result.converged,
                                "restart_values": result.restart_values}
        else:
            povms = _measurements(cfg, args, state)
        behavior = joint_probabilities(state, povms)

    if functional is None and args.functional:
        functional = load_functional(args.functional)
    certificate = maximal_violation(behavior, backend=cfg.backend)
    report["behavior"] = behavior_to_dict(behavior)
    report["upsilon"] = certificate.upsilon
    report["certificate"] = certificate.to_dict()
    report["certificate_summary"] = {"terms": len(certificate.terms),
                                     "negative_mass": certificate.negative_mass,
                                     "residual": certificate.residual}

    if functional is not None:
        constants = lhv_constants(functional, allow_degenerate=True)
        value = behavior_average(behavior, functional)
        report["functional"] = {"value": value, "b_inf": constants.b_inf, "b_sup": constants.b_sup}
        if not constants.degenerate:
            report["functional"]["normalized_violation"] = abs(value) / constants.b_max
            low, high = quantum_range(constants, certificate.upsilon)
            report["functional"]["quantum_range"] = [low, high]

    exit_code = EXIT_OK
    rows = None
    if state is not None:
        bounds = compare(BoundContext.from_state(state, behavior.scenario), certificate.upsilon)
        report["bounds"] = bounds.to_dict()
        rows = [["bound_name", "formula", "value", "applicable"]] + bounds.to_rows()
        if not bounds.all_pass:
            exit_code = EXIT_BOUND_VIOLATION
    return report, rows, exit_code


def cmd_certify_lhv(cfg, args):
    """Certificate status and the signed measure's summary"""
    state = state_from_descriptor(args.state, seed=cfg.seed)
    povms = _measurements(cfg, args, state)
    copies = list(povms.scenario.settings)
    if state.product_components:
        source = separable_source_operator(state, copies)
    else:
        source = solve_source_operator(state, copies)

    report = {"source": str(source), "source_psd": source.is_psd()}
    try:
        certificate = lhv_certificate_from_tensor_positive(source, povms, restarts=cfg.restarts, seed=cfg.seed)
        report.update(certificate.to_dict())
    except TensorPositivityError as e:
        logger.info(f"No certificate: {str(e)}")
        verdict = tensor_positivity_check(source.matrix, source.factor_dims, restarts=cfg.restarts, seed=cfg.seed)
        report.update({"certified_lhv": False, "tensor_positivity": verdict.status})
        report.update(lqhv_from_source(source, povms).summary())
    return report, None, EXIT_OK


def cmd_bound_from_dilation(cfg, args):
    """Per-candidate covering intervals and the resulting bound"""
    state = state_from_descriptor(args.state, seed=cfg.seed)
    settings = _settings_for(cfg, state.n_parties)
    bounder = DilationBounder(candidates=cfg.candidates, restarts=cfg.restarts, seed=cfg.seed)
    bound = bounder.bound(state, settings)
    report = bound.to_dict()
    rows = [["site", "candidate", "lower", "upper", "tensor_positivity"]]
    for row in bound.rows:
        rows.append([row.site + 1, row.candidate, format_value(row.interval.lower),
                     format_value(row.interval.upper), row.interval.verdict.status])

    if args.export:
        dump_json(source_operator_to_dict(bound.best.source), args.export)

    exit_code = EXIT_OK
    if args.violation is not None:
        report["violation"] = args.violation
        report["gap"] = bound.value - args.violation
        if args.violation > bound.value + cfg.tolerance:
            logger.error(f"Observed violation {args.violation} exceeds the certified bound {bound.value}")
            exit_code = EXIT_BOUND_VIOLATION
    return report, rows, exit_code


def cmd_bounds_table(cfg, args):
    """The bound ledger for a context"""
    dims = parse_int_list(args.dims)
    settings = cfg.settings
    outcomes = parse_int_list(args.outcomes) if args.outcomes else None
    params = {"d": dims[0]}
    if args.phi is not None:
        params["phi"] = args.phi
    context = BoundContext(len(dims), dims, settings, outcomes, family=args.family, params=params)
    bounds = compare(context, args.violation)
    rows = [["bound_name", "formula", "value", "applicable"]] + bounds.to_rows()
    exit_code = EXIT_OK if bounds.all_pass else EXIT_BOUND_VIOLATION
    return bounds.to_dict(), rows, exit_code


COMMANDS = {
    "classical-bound": cmd_classical_bound,
    "violation": cmd_violation,
    "certify-lhv": cmd_certify_lhv,
    "bound-from-dilation": cmd_bound_from_dilation,
    "bounds-table": cmd_bounds_table,
}


def _flatten(data, prefix=""):
    """(key, value) pairs of the scalar fields of a nested report"""
    items = []
    for key in sorted(data):
        value = data[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            items += _flatten(value, f"{name}.")
        elif isinstance(value, (list, tuple)):
            if all(not isinstance(v, (dict, list, tuple)) for v in value):
                items.append((name, ",".join(_text(v) for v in value)))
        else:
            items.append((name, _text(value)))
    return items


def _text(value):
    """Fixed 6-decimal text for reals"""
    if isinstance(value, bool) or value is None:
        return "-" if value is None else str(value).lower()
    if isinstance(value, (float, np.floating)):
        return format_value(float(value))
    return str(value)


def render(report, rows, output_format):
    """Report text in the requested format"""
    if output_format == "json":
        return canonical_json(report)
    if output_format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        if rows is None:
            rows = [["key", "value"]] + [list(item) for item in _flatten(report)]
        writer.writerows(rows)
        return buffer.getvalue()
    return "".join(f"{key}: {value}\n" for key, value in _flatten(report))


def run(argv=None, stdout=None):
    """Parse, dispatch and print; returns the exit code"""
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        set_log_level(logging.DEBUG)

    default_cap = bellbound_conf.COPIED_DIM_CAP
    default_tol = bellbound_conf.FEASIBILITY_TOL
    try:
        cfg = config_from_args(args)
        bellbound_conf.COPIED_DIM_CAP = cfg.cap_dim
        bellbound_conf.FEASIBILITY_TOL = cfg.tolerance
        report, rows, exit_code = COMMANDS[args.command](cfg, args)
    except (NonConvergenceError, InfeasibleError, UnboundedError) as e:
        logger.error(f"Numerical failure: {str(e)}")
        logger.debug(traceback.format_exc())
        return EXIT_NONCONVERGENCE
    except (BellBoundError, ValueError) as e:
        logger.error(f"Error: {str(e)}")
        logger.debug(traceback.format_exc())
        return EXIT_VALIDATION
    finally:
        bellbound_conf.COPIED_DIM_CAP = default_cap
        bellbound_conf.FEASIBILITY_TOL = default_tol

    if args.output_format == "json":
        report = {"report": report, "config": cfg.to_dict(), "version": bellbound_conf.VERSION}
    stdout.write(render(report, rows, args.output_format))
    return exit_code
